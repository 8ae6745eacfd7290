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

// Command-line front end: synth, train, infer, eval, chain.
// Exit codes: 0 success, 2 config error, 3 data error, 4 model error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "abspose/dataset.hpp"
#include "abspose/errors.hpp"
#include "abspose/harness.hpp"
#include "abspose/keyvalue.hpp"
#include "abspose/train.hpp"

namespace fs = std::filesystem;
using namespace abspose;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitModel = 4;

/// Settings of one subcommand: config file values overlaid by the flags that
/// were given. Config keys are the long flag names without dashes.
class Settings {
 public:
  explicit Settings(CLI::App* app) : app_(app) {
    app->add_option("--config", config_, "key=value file; flags override its entries");
  }

  template <typename T>
  void flag(const std::string& name, const std::string& help) {
    auto* opt = app_->add_option("--" + name, text_[name], help);
    opt->type_name(type_label<T>());
    names_.push_back(name);
  }

  /// Merges the config file and the flags. Call after parsing.
  void resolve() {
    if (!config_.empty()) kv_ = read_key_values(config_);
    for (const auto& n : names_) {
      if (app_->count("--" + n) > 0) kv_[n] = text_[n];
    }
  }

  bool has(const std::string& k) const { return kv_.count(k) > 0; }
  std::string str(const std::string& k) const { return require(kv_, k); }
  std::string str(const std::string& k, const std::string& fallback) const {
    return has(k) ? kv_.at(k) : fallback;
  }
  double real(const std::string& k, double fallback) const { return get_double(kv_, k, fallback); }
  long long integer(const std::string& k) const { return get_int(kv_, k); }
  long long integer(const std::string& k, long long fallback) const { return get_int(kv_, k, fallback); }
  std::uint64_t seed() const { return get_uint64(kv_, "seed", 1); }

 private:
  template <typename T>
  static std::string type_label() {
    if constexpr (std::is_same_v<T, double>) return "REAL";
    if constexpr (std::is_integral_v<T>) return "INT";
    return "TEXT";
  }

  CLI::App* app_;
  std::string config_;
  std::map<std::string, std::string> text_;
  std::vector<std::string> names_;
  KeyValues kv_;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

std::vector<TrainingSample> samples_of(const std::vector<DatasetEntry>& entries) {
  std::vector<TrainingSample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.sample);
  return out;
}

InferConfig infer_config(const Settings& s) {
  InferConfig c;
  c.hypothesis_count = static_cast<int>(s.integer("hypotheses", c.hypothesis_count));
  c.refine_top_k = static_cast<int>(s.integer("refine-top-k", c.refine_top_k));
  c.refine_rounds = static_cast<int>(s.integer("refine-rounds", c.refine_rounds));
  c.inlier_threshold = s.real("inlier-threshold", c.inlier_threshold);
  c.validate();
  return c;
}

void add_infer_flags(Settings& s) {
  s.flag<int>("hypotheses", "sampled pose hypotheses per image");
  s.flag<int>("refine-top-k", "hypotheses refined after scoring");
  s.flag<int>("refine-rounds", "inlier refinement rounds");
  s.flag<double>("inlier-threshold", "object-coordinate inlier distance, mm");
}

int run_synth(const Settings& s) {
  SceneGenConfig cfg;
  cfg.noise = NoiseParams::preset(s.str("noise-preset", "default"));
  cfg.occlusion_min = s.real("occlusion-min", 0.0);
  cfg.occlusion_max = s.real("occlusion-max", 0.0);
  if (!(cfg.occlusion_min >= 0.0 && cfg.occlusion_min <= cfg.occlusion_max && cfg.occlusion_max < 1.0)) {
    throw ConfigError("occlusion range must satisfy 0 <= min <= max < 1");
  }
  const long long scenes = s.integer("scenes");
  if (scenes < 1) throw ConfigError("scenes must be positive");
  const double scale = s.real("mesh-scale", 1.0);
  if (!(scale > 0.0)) throw ConfigError("mesh-scale must be positive");
  std::vector<TriangleMesh> meshes;
  for (const auto& m : split_list(s.str("meshes", "lblock,tee,step,wedge"))) meshes.push_back(resolve_mesh(m, scale));
  if (meshes.empty()) throw ConfigError("no meshes given");
  write_dataset(s.str("out"), meshes, cfg, static_cast<int>(scenes), s.seed());
  std::printf("wrote %lld scenes to %s\n", scenes, s.str("out").c_str());
  return 0;
}

int run_train(const Settings& s) {
  TrainConfig cfg;
  cfg.gamma0 = s.real("gamma0", cfg.gamma0);
  cfg.lambda = s.real("lambda", cfg.lambda);
  cfg.lr_scale = s.real("lr-scale", cfg.lr_scale);
  cfg.validate_every = static_cast<int>(s.integer("validate-every", cfg.validate_every));
  cfg.chain.total_iterations = static_cast<int>(s.integer("chain-iterations", cfg.chain.total_iterations));
  cfg.chain.burn_in = static_cast<int>(s.integer("burn-in", cfg.chain.burn_in));
  cfg.proposal.sigma_t = s.real("sigma-t", 0.0);
  cfg.proposal.sigma_r = s.real("sigma-r", 0.0);
  cfg.max_steps = s.integer("max-steps", cfg.max_steps);
  cfg.seed = s.seed();
  cfg.infer = infer_config(s);
  if (s.has("checkpoints")) cfg.checkpoint_dir = s.str("checkpoints");
  cfg.validate();

  std::optional<EnergyNetParams> initial;
  if (s.has("init")) initial = load_params(s.str("init"));
  const auto train = load_dataset(s.str("data"));
  const auto val = load_dataset(s.str("val"));
  const auto train_samples = samples_of(train);
  const auto val_samples = samples_of(val);

  cfg.progress = [](const LogRecord& r) {
    if (r.kind == LogRecord::Kind::Validation) {
      std::printf("step %ld validation %.2f%%\n", r.step, r.validation_score);
      std::fflush(stdout);
    }
  };
  if (s.has("init-out")) {
    Rng rng = make_stream(cfg.seed, "train");
    save_params(initial ? *initial : init_params(rng), s.str("init-out"));
  }
  const TrainResult res = sgd_train(train_samples, val_samples, cfg, initial);
  save_params(res.best, s.str("out"));
  if (s.has("log")) {
    auto out = open_output(s.str("log"));
    write_training_log(out, res.log);
  }
  std::printf("initial %.2f%% best %.2f%% at step %ld\n", res.initial_score, res.best_score, res.best_step);
  return 0;
}

int run_infer(const Settings& s) {
  const InferConfig cfg = infer_config(s);
  const EnergyNetParams params = load_params(s.str("model"));
  const auto entries = load_dataset(s.str("data"));
  const auto rows = infer_dataset(entries, params, cfg, s.seed());
  auto out = open_output(s.str("out"));
  write_results_csv(out, rows);
  int correct = 0;
  for (const auto& r : rows) correct += r.correct ? 1 : 0;
  std::printf("%d/%zu correct\n", correct, rows.size());
  return 0;
}

int run_eval(const Settings& s) {
  std::ifstream in(s.str("results"), std::ios::binary);
  if (!in) throw DataError("cannot read " + s.str("results"));
  const auto rows = read_results_csv(in);
  if (rows.empty()) throw DataError("results file has no rows");
  std::ostringstream report;
  write_report_csv(report, rows);
  if (s.has("report")) {
    auto out = open_output(s.str("report"));
    out << report.str();
  }
  std::cout << report.str();
  return 0;
}

int run_chain(const Settings& s) {
  const EnergyNetParams params = load_params(s.str("model"));
  const auto entries = load_dataset(s.str("data"));
  const std::string id = s.str("scene");
  const DatasetEntry* entry = nullptr;
  for (const auto& e : entries) {
    if (e.sample.id == id) entry = &e;
  }
  if (!entry) throw DataError("no scene " + id + " in " + s.str("data"));
  const TrainingSample& sample = entry->sample;

  ChainConfig ccfg;
  ccfg.total_iterations = static_cast<int>(s.integer("chain-iterations", ccfg.total_iterations));
  ccfg.burn_in = static_cast<int>(s.integer("burn-in", ccfg.burn_in));
  if (ccfg.burn_in < 0 || ccfg.burn_in >= ccfg.total_iterations) {
    throw ConfigError("chain requires 0 <= burn-in < chain-iterations");
  }
  ProposalConfig pcfg = ProposalConfig::for_diameter(sample.mesh->diameter);
  pcfg.sigma_t = s.real("sigma-t", pcfg.sigma_t);
  pcfg.sigma_r = s.real("sigma-r", pcfg.sigma_r);
  if (!(pcfg.sigma_t >= 0.0 && pcfg.sigma_r >= 0.0)) throw ConfigError("proposal sigmas must be non-negative");
  const std::string start = s.str("start", "infer");
  if (start != "infer" && start != "gt") throw ConfigError("start must be infer or gt");

  const EnergyNet net(params);
  const GibbsPosterior post(sample.observation, *sample.mesh, net);
  const EnergyFn energy = [&](const Pose& H) { return post.energy(H); };
  Rng rng = make_stream(s.seed(), "chain");
  Pose init = sample.gt_pose;
  if (start == "infer") init = estimate(sample.observation, *sample.mesh, energy, infer_config(s), rng).pose;
  const PoseChain chain = run_chain(energy, init, pcfg, ccfg, rng);
  auto out = open_output(s.str("dump"));
  write_chain_csv(out, chain);
  std::printf("acceptance %.4f\n", chain.acceptance_rate());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned-energy 6D pose estimation on synthetic RGB-D scenes"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  Settings synth_s(synth);
  synth_s.flag<std::string>("out", "output directory");
  synth_s.flag<int>("scenes", "number of scenes");
  synth_s.flag<std::string>("meshes", "comma-separated built-in names or OBJ paths");
  synth_s.flag<double>("mesh-scale", "scale applied to OBJ coordinates (to mm)");
  synth_s.flag<std::string>("noise-preset", "default, zero or hard");
  synth_s.flag<double>("occlusion-min", "lowest target occlusion");
  synth_s.flag<double>("occlusion-max", "highest target occlusion");
  synth_s.flag<std::uint64_t>("seed", "random seed");

  auto* train = app.add_subcommand("train", "maximum-likelihood training");
  Settings train_s(train);
  train_s.flag<std::string>("data", "training dataset directory");
  train_s.flag<std::string>("val", "validation dataset directory");
  train_s.flag<std::string>("out", "output weight file (best validation snapshot)");
  train_s.flag<std::string>("init", "start from this weight file instead of a random init");
  train_s.flag<std::string>("init-out", "also write the initial weights here");
  train_s.flag<std::string>("log", "training log CSV");
  train_s.flag<std::string>("checkpoints", "directory for per-validation checkpoints");
  train_s.flag<long>("max-steps", "SGD steps");
  train_s.flag<double>("gamma0", "schedule gamma0");
  train_s.flag<double>("lambda", "schedule lambda");
  train_s.flag<double>("lr-scale", "schedule proportionality constant");
  train_s.flag<int>("validate-every", "steps between validations");
  train_s.flag<int>("chain-iterations", "Metropolis iterations per step");
  train_s.flag<int>("burn-in", "discarded chain iterations");
  train_s.flag<double>("sigma-t", "translation proposal std, mm (default 5% of diameter)");
  train_s.flag<double>("sigma-r", "rotation proposal std, rad (default 0.1)");
  train_s.flag<std::uint64_t>("seed", "random seed");
  add_infer_flags(train_s);

  auto* infer = app.add_subcommand("infer", "estimate poses for a dataset");
  Settings infer_s(infer);
  infer_s.flag<std::string>("data", "dataset directory");
  infer_s.flag<std::string>("model", "weight file");
  infer_s.flag<std::string>("out", "results CSV");
  infer_s.flag<std::uint64_t>("seed", "random seed");
  add_infer_flags(infer_s);

  auto* eval = app.add_subcommand("eval", "accuracy and occlusion report");
  Settings eval_s(eval);
  eval_s.flag<std::string>("results", "results CSV from infer");
  eval_s.flag<std::string>("report", "report CSV");

  auto* chain = app.add_subcommand("chain", "dump one Metropolis chain");
  Settings chain_s(chain);
  chain_s.flag<std::string>("data", "dataset directory");
  chain_s.flag<std::string>("model", "weight file");
  chain_s.flag<std::string>("scene", "scene id, e.g. scene_0003");
  chain_s.flag<std::string>("dump", "chain CSV");
  chain_s.flag<std::string>("start", "infer (default) or gt");
  chain_s.flag<int>("chain-iterations", "Metropolis iterations");
  chain_s.flag<int>("burn-in", "discarded iterations");
  chain_s.flag<double>("sigma-t", "translation proposal std, mm");
  chain_s.flag<double>("sigma-r", "rotation proposal std, rad");
  chain_s.flag<std::uint64_t>("seed", "random seed");
  add_infer_flags(chain_s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*synth) {
      synth_s.resolve();
      return run_synth(synth_s);
    }
    if (*train) {
      train_s.resolve();
      return run_train(train_s);
    }
    if (*infer) {
      infer_s.resolve();
      return run_infer(infer_s);
    }
    if (*eval) {
      eval_s.resolve();
      return run_eval(eval_s);
    }
    chain_s.resolve();
    return run_chain(chain_s);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const CorruptModel& e) {
    std::fprintf(stderr, "model error: %s\n", e.what());
    return kExitModel;
  } catch (const ContractViolation& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const Error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  }
}
