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

// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Usage: abspose_acceptance [OUT_DIR] [--only N]...

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "abspose/dataset.hpp"
#include "abspose/energynet.hpp"
#include "abspose/harness.hpp"
#include "abspose/keyvalue.hpp"
#include "abspose/raster_io.hpp"
#include "abspose/render.hpp"
#include "abspose/train.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace abspose;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::string digest;  // everything the criterion computed, for rerun comparison
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

const std::vector<std::string> kMeshes = {"lblock", "tee", "step", "wedge"};

std::vector<TriangleMesh> builtin_meshes() {
  std::vector<TriangleMesh> out;
  for (const auto& n : kMeshes) out.push_back(builtin_mesh(n));
  return out;
}

// 1. Backward pass against finite differences on every layer.
Outcome gradient_check() {
  Rng rng(2024);
  const EnergyNetParams params = init_params(rng);
  std::vector<oracle::GradientProbe> probes;
  for (int k = 0; k < 3; ++k) {
    const ChannelStack s = oracle::random_stack(24, rng);
    const auto p = oracle::finite_difference_check(params, s, 10, 1e-6, rng);
    probes.insert(probes.end(), p.begin(), p.end());
  }
  double worst = 0.0;
  for (const auto& p : probes) worst = std::max(worst, p.relative_error());
  Outcome o;
  o.pass = probes.size() >= 200 && worst < 1e-4;
  o.detail = std::to_string(probes.size()) + " probes, worst relative error " + fmt("%.2e", worst);
  return o;
}

// 2. Metropolis NLL gradient against exact enumeration on a 41-pose family.
Outcome ml_gradient_oracle() {
  const TriangleMesh mesh = builtin_mesh("lblock");
  const GeneratedScene scene = generate_scene(SceneGenConfig{}, mesh, 5);
  Rng init_rng(42);
  const EnergyNetParams params = init_params(init_rng);
  const EnergyNet net(params);
  const GibbsPosterior post(scene.obs, mesh, net);

  constexpr int kFamily = 41;
  constexpr int kCenter = 20;
  const double spacing = 0.005 * mesh.diameter;
  std::vector<Pose> family;
  std::vector<double> energy;
  std::vector<Eigen::VectorXd> grads;
  for (int k = 0; k < kFamily; ++k) {
    Pose H = scene.gt;
    H.translation.x() += (k - kCenter) * spacing;
    ParamGradient g;
    family.push_back(H);
    energy.push_back(net.backward(post.stack(H), g));
    grads.push_back(g.flat());
  }
  const double lo = *std::min_element(energy.begin(), energy.end());
  double z = 0.0;
  for (const double e : energy) z += std::exp(lo - e);
  Eigen::VectorXd exact = grads[kCenter];
  for (int k = 0; k < kFamily; ++k) exact -= std::exp(lo - energy[k]) / z * grads[k];

  // Chains walk the family index; the proposal is the default translation
  // step expressed in grid units.
  const double sigma_steps = ProposalConfig::for_diameter(mesh.diameter).sigma_t / spacing;
  const auto index_energy = [&](int k) {
    return k < 0 || k >= kFamily ? std::numeric_limits<double>::infinity() : energy[k];
  };
  const auto propose_index = [&](int k, Rng& rng) {
    std::normal_distribution<double> step(0.0, sigma_steps);
    return k + static_cast<int>(std::lround(step(rng)));
  };
  const int start = static_cast<int>(std::min_element(energy.begin(), energy.end()) - energy.begin());
  constexpr int kChains = 20;
  Eigen::VectorXd estimate = Eigen::VectorXd::Zero(exact.size());
  std::ostringstream digest;
  for (int c = 0; c < kChains; ++c) {
    Rng rng = make_stream(2, "ml-chain", c);
    const auto chain = metropolis<int>(index_energy, propose_index, start, ChainConfig{}, rng);
    std::vector<Pose> samples;
    for (const auto& s : chain.samples()) {
      samples.push_back(family[s.state]);
      digest << s.state << ' ';
    }
    estimate += nll_gradient_from_samples(post, scene.gt, samples).grad.flat() / kChains;
  }
  const double err = (estimate - exact).lpNorm<1>() / exact.lpNorm<1>();
  digest << '\n' << format_exact(err) << '\n';
  for (Eigen::Index i = 0; i < estimate.size(); i += 997) digest << format_exact(estimate[i]) << '\n';
  Outcome o;
  o.pass = err < 0.02;
  o.detail = "mean relative error " + fmt("%.4f", err) + " (20 chains vs 41-point enumeration)";
  o.digest = digest.str();
  return o;
}

// 3. Sampler moments on a quadratic target and proposal symmetry.
Outcome sampler_statistics() {
  const Vec3 target(10, -20, 1000);
  const double sigma = 50.0;
  const EnergyFn quad = [&](const Pose& H) { return (H.translation - target).squaredNorm() / (2 * sigma * sigma); };
  Pose init;
  init.translation = target;
  const ProposalConfig pcfg{sigma, 1e-12};
  Eigen::Array3d sum = Eigen::Array3d::Zero(), sum2 = Eigen::Array3d::Zero();
  long n = 0;
  std::ostringstream digest;
  for (int c = 0; c < 200; ++c) {
    Rng rng = make_stream(17, "chain", static_cast<std::uint64_t>(c));
    const PoseChain chain = run_chain(quad, init, pcfg, ChainConfig{}, rng);
    for (const auto& s : chain.samples()) {
      sum += s.state.translation.array();
      sum2 += s.state.translation.array().square();
      ++n;
    }
    digest << format_exact(chain.steps.back().state.translation.x()) << ' ';
  }
  const Eigen::Array3d mean = sum / n;
  const Eigen::Array3d sd = (sum2 / n - mean * mean).sqrt();
  const double mean_err = (mean - target.array()).matrix().norm();
  const bool moments = mean_err < 5.0 && ((sd - sigma).abs() < 10.0).all();

  // Rotational increments of the proposal must be zero-mean.
  Rng rng = make_stream(17, "proposal");
  const Pose H = oracle::random_pose(rng);
  constexpr int kDraws = 100000;
  Eigen::Array3d se = Eigen::Array3d::Zero(), se2 = Eigen::Array3d::Zero();
  double asym = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const Pose P = propose(H, {5.0, 0.1}, rng);
    const Eigen::Array3d e = log_so3(P.rotation * H.rotation.transpose()).array();
    se += e;
    se2 += e * e;
    const double back = log_so3(H.rotation * P.rotation.transpose()).norm();
    asym = std::max(asym, std::abs(e.matrix().norm() - back));
  }
  const Eigen::Array3d em = se / kDraws;
  const Eigen::Array3d stderr_ = (se2 / kDraws - em * em).sqrt() / std::sqrt(double(kDraws));
  const bool symmetric = (em.abs() < 3 * stderr_).all() && asym < 1e-9;

  for (int i = 0; i < 3; ++i) digest << '\n' << format_exact(mean[i]) << ' ' << format_exact(sd[i]);
  for (int i = 0; i < 3; ++i) digest << '\n' << format_exact(em[i]);
  Outcome o;
  o.pass = moments && symmetric;
  o.detail = "mean error " + fmt("%.2f mm", mean_err) + ", std (" + fmt("%.1f", sd[0]) + ", " + fmt("%.1f", sd[1]) +
             ", " + fmt("%.1f", sd[2]) + ") mm, rotation increment mean/SE max " +
             fmt("%.2f", (em.abs() / stderr_).maxCoeff());
  o.digest = digest.str();
  return o;
}

// 4. Kabsch, exp/log and rasterizer oracles.
Outcome geometry_oracles() {
  Rng rng(5);
  double rot_err = 0.0, trans_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Pose truth = oracle::random_pose(rng);
    std::vector<Correspondence> c;
    for (int k = 0; k < 4; ++k) {
      const Vec3 p = 60.0 * oracle::random_unit(rng);
      c.push_back({p, transform_point(truth, p)});
    }
    const Pose H = rigid_from_correspondences(c);
    rot_err = std::max(rot_err, (H.rotation - truth.rotation).cwiseAbs().maxCoeff());
    trans_err = std::max(trans_err, (H.translation - truth.translation).norm());
  }
  double roundtrip = 0.0;
  std::uniform_real_distribution<double> angle(1e-6, M_PI - 1e-3);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 e = oracle::random_unit(rng) * angle(rng);
    roundtrip = std::max(roundtrip, (log_so3(exp_so3(e)) - e).norm());
  }
  const CameraIntrinsics cam{300, 300, 79.5, 59.5, 160, 120};
  double raster = 0.0;
  long compared = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const TriangleMesh m = oracle::random_micro_mesh(rng);
    const Pose H = oracle::random_view(rng);
    const RenderedImages r = render_full_frame(m, H, cam);
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        if (oracle::distance_to_edges(m, H, cam, x, y) <= 0.5) continue;
        raster = std::max(raster, std::abs(r.depth(y, x) - oracle::raycast_depth(m, H, cam, x, y)));
        ++compared;
      }
    }
  }
  Outcome o;
  o.pass = rot_err < 1e-9 && trans_err < 1e-6 && roundtrip < 1e-9 && raster < 1e-3;
  o.detail = "Kabsch " + fmt("%.1e", rot_err) + "/" + fmt("%.1e", trans_err) + ", exp/log " + fmt("%.1e", roundtrip) +
             ", raster " + fmt("%.1e mm", raster) + " over " + std::to_string(compared) + " pixels";
  return o;
}

// 5. The search scheme alone: oracle energy on zero-noise scenes.
Outcome search_isolation() {
  SceneGenConfig cfg;
  cfg.noise = NoiseParams::preset("zero");
  const auto meshes = builtin_meshes();
  int correct = 0;
  std::ostringstream digest;
  for (int i = 0; i < 50; ++i) {
    const TriangleMesh& mesh = meshes[i % meshes.size()];
    const GeneratedScene g = generate_scene(cfg, mesh, splitmix64(500 + i));
    const EnergyFn energy = [&](const Pose& H) { return oracle::vertex_distance_energy(H, g.gt, mesh); };
    Rng rng = make_stream(5, "infer", i);
    const Hypothesis h = estimate(g.obs, mesh, energy, InferConfig{}, rng);
    const PoseEvaluation ev = evaluate_pose(h.pose, g.gt, mesh);
    correct += ev.correct ? 1 : 0;
    digest << format_exact(ev.avg_vertex_distance) << '\n';
  }
  Outcome o;
  o.pass = correct == 50;
  o.detail = std::to_string(correct) + "/50 correct";
  o.digest = digest.str();
  return o;
}

double spearman_with_index(const std::vector<double>& v) {
  const auto ranks = [](const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
      i = j + 1;
    }
    return r;
  };
  std::vector<double> steps(v.size());
  std::iota(steps.begin(), steps.end(), 0.0);
  const auto a = ranks(v), b = ranks(steps);
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Benchmark settings for criterion 6.
constexpr long kTrainSteps = 150;
constexpr double kLrScale = 1e-5;

// 6. Trained energy against its own initialisation on a synthetic benchmark.
Outcome benchmark(const fs::path& out_dir, bool write_files) {
  SceneGenConfig cfg;
  cfg.occlusion_min = 0.2;
  cfg.occlusion_max = 0.6;
  const auto meshes = builtin_meshes();
  const auto train = generate_samples(meshes, cfg, 60, 111);
  const auto val = generate_samples(meshes, cfg, 20, 222);
  std::vector<double> occlusion;
  const auto test_samples = generate_samples(meshes, cfg, 60, 333, &occlusion);
  std::vector<DatasetEntry> test;
  for (std::size_t i = 0; i < test_samples.size(); ++i) test.push_back({test_samples[i], occlusion[i]});

  TrainConfig tc;
  tc.seed = 9;
  tc.max_steps = kTrainSteps;
  tc.lr_scale = kLrScale;
  Rng init_rng = make_stream(tc.seed, "init");
  const EnergyNetParams initial = init_params(init_rng);
  const TrainResult trained = sgd_train(train, val, tc, initial);

  const auto init_rows = infer_dataset(test, initial, InferConfig{}, 444);
  const auto trained_rows = infer_dataset(test, trained.best, InferConfig{}, 444);
  const auto rate = [](const std::vector<ResultRow>& rows) {
    int c = 0;
    for (const auto& r : rows) c += r.correct ? 1 : 0;
    return 100.0 * c / static_cast<double>(rows.size());
  };
  const double init_rate = rate(init_rows), trained_rate = rate(trained_rows);

  std::ostringstream log, init_csv, trained_csv, report;
  write_training_log(log, trained.log);
  write_results_csv(init_csv, init_rows);
  write_results_csv(trained_csv, trained_rows);
  write_report_csv(report, trained_rows);
  if (write_files) {
    fs::create_directories(out_dir);
    std::ofstream(out_dir / "training_log.csv") << log.str();
    std::ofstream(out_dir / "results_init.csv") << init_csv.str();
    std::ofstream(out_dir / "results_trained.csv") << trained_csv.str();
    std::ofstream(out_dir / "report_init.csv") << [&] {
      std::ostringstream r;
      write_report_csv(r, init_rows);
      return r.str();
    }();
    std::ofstream(out_dir / "report_trained.csv") << report.str();
    save_params(trained.best, out_dir / "trained.enet");
    std::printf("occlusion-binned report (trained energy), also in %s:\n%s", (out_dir / "report_trained.csv").c_str(),
                report.str().c_str());
    // Downward trend of the monitored data energy in every full 50-step window.
    std::vector<double> energy;
    for (const auto& r : trained.log) {
      if (r.kind == LogRecord::Kind::Step && !r.skipped) energy.push_back(r.data_energy);
    }
    for (std::size_t w = 0; w + 50 <= energy.size(); w += 50) {
      const std::vector<double> window(energy.begin() + w, energy.begin() + w + 50);
      std::printf("data energy steps %zu-%zu: Spearman %.3f\n", w + 1, w + 50, spearman_with_index(window));
    }
  }

  Outcome o;
  o.pass = trained_rate >= init_rate + 10.0;
  o.detail = "test correct " + fmt("%.1f%%", init_rate) + " at init, " + fmt("%.1f%%", trained_rate) +
             " trained (validation " + fmt("%.1f%%", trained.initial_score) + " -> " +
             fmt("%.1f%%", trained.best_score) + " at step " + std::to_string(trained.best_step) + ")";
  o.digest = log.str() + init_csv.str() + trained_csv.str() + report.str();
  return o;
}

// 7. Weight and raster files round-trip bit-exactly.
Outcome file_roundtrips(const fs::path& out_dir) {
  fs::create_directories(out_dir);
  Rng rng(77);
  const EnergyNetParams p = init_params(rng);
  save_params(p, out_dir / "roundtrip.enet");
  const EnergyNetParams q = load_params(out_dir / "roundtrip.enet");
  const bool weights = std::memcmp(p.flat().data(), q.flat().data(), sizeof(float) * p.flat().size()) == 0;

  Raster r;
  r.width = 37;
  r.height = 23;
  r.channels = 3;
  std::normal_distribution<float> n(0.0f, 1000.0f);
  for (std::uint32_t i = 0; i < r.width * r.height * r.channels; ++i) r.data.push_back(n(rng));
  r.data[5] = -0.0f;
  r.data[6] = std::numeric_limits<float>::denorm_min();
  write_raster(out_dir / "roundtrip.pgf", r);
  const Raster s = read_raster(out_dir / "roundtrip.pgf");
  const bool raster = s.width == r.width && s.height == r.height && s.channels == r.channels &&
                      std::memcmp(r.data.data(), s.data.data(), sizeof(float) * r.data.size()) == 0;
  Outcome o;
  o.pass = weights && raster;
  o.detail = std::string("weights ") + (weights ? "exact" : "differ") + ", raster " + (raster ? "exact" : "differ");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out_dir = "acceptance_out";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only.insert(std::stoi(argv[++i]));
    } else {
      out_dir = a;
    }
  }
  const auto wanted = [&](int c) { return only.empty() || only.count(c) > 0; };

  bool all = true;
  const auto report = [&](int id, const char* name, const Outcome& o, double seconds) {
    all = all && o.pass;
    std::printf("criterion %d %s: %s (%s; %.0f s)\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds);
    std::fflush(stdout);
  };
  std::vector<Outcome> first(8);
  const auto run = [&](int id, const char* name, const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    first[id] = f();
    report(id, name, first[id], std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  };
  if (wanted(1)) run(1, "gradient check", gradient_check);
  if (wanted(2)) run(2, "ML gradient oracle", ml_gradient_oracle);
  if (wanted(3)) run(3, "sampler statistics", sampler_statistics);
  if (wanted(4)) run(4, "geometry and renderer", geometry_oracles);
  if (wanted(5)) run(5, "search isolation", search_isolation);
  if (wanted(6)) run(6, "learned energy benchmark", [&] { return benchmark(out_dir, true); });

  if (wanted(7)) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = file_roundtrips(out_dir);
    std::vector<std::string> differing;
    const std::vector<std::pair<int, std::function<Outcome()>>> reruns = {
        {2, ml_gradient_oracle},
        {3, sampler_statistics},
        {5, search_isolation},
        {6, [&] { return benchmark(out_dir, false); }},
    };
    int rerun = 0;
    for (const auto& [id, f] : reruns) {
      if (!wanted(id)) continue;
      ++rerun;
      if (f().digest != first[id].digest) differing.push_back(std::to_string(id));
    }
    o.detail += ", " + std::to_string(rerun) + " criteria rerun";
    if (!differing.empty()) {
      o.pass = false;
      std::string ids;
      for (const auto& d : differing) ids += (ids.empty() ? "" : " ") + d;
      o.detail += ", outputs differ for " + ids;
    } else {
      o.detail += " byte-identical";
    }
    report(7, "reproducibility", o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return all ? 0 : 1;
}
