// Copyright 2026 The abspose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "abspose/train.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "abspose/harness.hpp"
#include "abspose/keyvalue.hpp"

namespace abspose {

void TrainConfig::validate() const {
  if (!(gamma0 > 0.0)) throw ConfigError("gamma0 must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!(lr_scale > 0.0)) throw ConfigError("lr_scale must be positive");
  if (validate_every < 1) throw ConfigError("validate_every must be at least 1");
  if (chain.burn_in < 0 || chain.burn_in >= chain.total_iterations) {
    throw ConfigError("chain requires 0 <= burn_in < total_iterations");
  }
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  infer.validate();
}

double learning_rate(long t, const TrainConfig& cfg) {
  return cfg.lr_scale * cfg.gamma0 / (1.0 + cfg.gamma0 * cfg.lambda * static_cast<double>(t));
}

NllGradient nll_gradient_from_samples(const GibbsPosterior& post, const Pose& gt, std::span<const Pose> samples) {
  if (samples.empty()) throw ContractViolation("nll gradient needs at least one sample");
  NllGradient out;
  out.data_energy = post.net().backward(post.stack(gt), out.grad);

  ParamGradient g;
  Eigen::VectorXd model = Eigen::VectorXd::Zero(out.grad.flat().size());
  double energy_sum = 0.0;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i + 1;
    while (j < samples.size() && samples[j].rotation == samples[i].rotation &&
           samples[j].translation == samples[i].translation) {
      ++j;
    }
    const double count = static_cast<double>(j - i);
    const double e = post.net().backward(post.stack(samples[i]), g);
    model += count * g.flat();
    energy_sum += count * e;
    ++out.unique_samples;
    i = j;
  }
  const double n = static_cast<double>(samples.size());
  out.grad.flat() -= model / n;
  out.mean_sample_energy = energy_sum / n;
  return out;
}

NllGradient nll_gradient_from_chain(const GibbsPosterior& post, const Pose& gt, const Pose& init,
                                    const ProposalConfig& pcfg, const ChainConfig& ccfg, Rng& rng) {
  const PoseChain chain = run_chain([&](const Pose& H) { return post.energy(H); }, init, pcfg, ccfg, rng);
  std::vector<Pose> poses;
  poses.reserve(chain.samples().size());
  for (const auto& s : chain.samples()) poses.push_back(s.state);
  NllGradient out = nll_gradient_from_samples(post, gt, poses);
  out.acceptance = chain.acceptance_rate();
  return out;
}

namespace {

ProposalConfig proposal_for(const TrainConfig& cfg, const TriangleMesh& mesh) {
  ProposalConfig p = ProposalConfig::for_diameter(mesh.diameter);
  if (cfg.proposal.sigma_t > 0.0) p.sigma_t = cfg.proposal.sigma_t;
  if (cfg.proposal.sigma_r > 0.0) p.sigma_r = cfg.proposal.sigma_r;
  return p;
}

}  // namespace

std::optional<NllGradient> nll_gradient(const TrainingSample& sample, const EnergyNetParams& params,
                                        const TrainConfig& cfg, Rng& rng) {
  const EnergyNet net(params);
  const GibbsPosterior post(sample.observation, *sample.mesh, net);
  Hypothesis init;
  try {
    init = estimate(sample.observation, *sample.mesh, [&](const Pose& H) { return post.energy(H); }, cfg.infer, rng);
  } catch (const NoEvidence&) {
    return std::nullopt;
  } catch (const HypothesisFailure&) {
    return std::nullopt;
  }
  if (!std::isfinite(init.energy)) return std::nullopt;
  return nll_gradient_from_chain(post, sample.gt_pose, init.pose, proposal_for(cfg, *sample.mesh), cfg.chain, rng);
}

double validation_score(std::span<const TrainingSample> set, const EnergyNetParams& params, const InferConfig& cfg,
                        std::uint64_t seed) {
  if (set.empty()) return 0.0;
  const EnergyNet net(params);
  int correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const TrainingSample& s = set[i];
    Rng rng = make_stream(seed, "validation", i);
    const GibbsPosterior post(s.observation, *s.mesh, net);
    try {
      const Hypothesis h = estimate(s.observation, *s.mesh, [&](const Pose& H) { return post.energy(H); }, cfg, rng);
      if (evaluate_pose(h.pose, s.gt_pose, *s.mesh).correct) ++correct;
    } catch (const NoEvidence&) {
      // counts as a failure
    }
  }
  return 100.0 * correct / static_cast<double>(set.size());
}

TrainResult sgd_train(std::span<const TrainingSample> train_set, std::span<const TrainingSample> validation_set,
                      const TrainConfig& cfg, std::optional<EnergyNetParams> initial) {
  cfg.validate();
  if (train_set.empty() || validation_set.empty()) throw ConfigError("training and validation sets must be non-empty");

  Rng rng = make_stream(cfg.seed, "train");
  EnergyNetParams theta = initial ? std::move(*initial) : init_params(rng);

  TrainResult result;
  result.initial_score = validation_score(validation_set, theta, cfg.infer, cfg.seed);
  result.best = theta;
  result.best_score = result.initial_score;
  result.best_step = 0;

  const auto checkpoint = [&](long step, double score) {
    if (cfg.checkpoint_dir.empty()) return;
    std::filesystem::create_directories(cfg.checkpoint_dir);
    char name[64];
    std::snprintf(name, sizeof(name), "step%06ld_score%06.2f.enet", step, score);
    save_params(theta, cfg.checkpoint_dir / name);
  };

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  for (long step = 0; step < cfg.max_steps; ++step) {
    if (cursor == order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const TrainingSample& sample = train_set[order[cursor++]];
    // the rate is adjusted at each validation, so t counts completed cycles
    const double gamma = learning_rate(step / cfg.validate_every, cfg);

    LogRecord rec{LogRecord::Kind::Step, step + 1, sample.id};
    rec.learning_rate = gamma;
    if (auto g = nll_gradient(sample, theta, cfg, rng)) {
      theta.flat() = (theta.flat().cast<double>() - gamma * g->grad.flat()).cast<float>();
      rec.data_energy = g->data_energy;
      rec.mean_sample_energy = g->mean_sample_energy;
      rec.acceptance = g->acceptance;
    } else {
      rec.skipped = true;
    }
    result.log.push_back(rec);
    if (cfg.progress) cfg.progress(rec);

    const long done = step + 1;
    if (done % cfg.validate_every == 0 || done == cfg.max_steps) {
      const double score = validation_score(validation_set, theta, cfg.infer, cfg.seed);
      LogRecord v{LogRecord::Kind::Validation, done, {}};
      v.validation_score = score;
      v.learning_rate = gamma;
      result.log.push_back(v);
      if (cfg.progress) cfg.progress(v);
      checkpoint(done, score);
      if (score >= result.best_score) {
        result.best = theta;
        result.best_score = score;
        result.best_step = done;
      }
    }
  }
  return result;
}

void write_training_log(std::ostream& out, const std::vector<LogRecord>& log) {
  out << "kind,step,sample,skipped,data_energy,mean_sample_energy,learning_rate,acceptance,validation_score\n";
  for (const auto& r : log) {
    const bool step = r.kind == LogRecord::Kind::Step;
    out << (step ? "step" : "validation") << ',' << r.step << ',' << r.sample_id << ',' << (r.skipped ? 1 : 0) << ','
        << format_exact(r.data_energy) << ',' << format_exact(r.mean_sample_energy) << ','
        << format_exact(r.learning_rate) << ',' << format_exact(r.acceptance) << ','
        << format_exact(r.validation_score) << '\n';
  }
}

}  // namespace abspose
