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

#include <cmath>
#include <vector>

#include "abspose/dataset.hpp"
#include "abspose/harness.hpp"
#include "abspose/infer.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace abspose;

namespace {

GeneratedScene zero_noise_scene(const std::string& mesh, std::uint64_t seed) {
  SceneGenConfig cfg;
  cfg.noise = NoiseParams::preset("zero");
  return generate_scene(cfg, builtin_mesh(mesh), seed);
}

bool close(const Pose& a, const Pose& b, double rot_tol, double trans_tol) {
  return rotation_angle(a.rotation, b.rotation) < rot_tol && (a.translation - b.translation).norm() < trans_tol;
}

}  // namespace

TEST_CASE("InferConfig validation") {
  InferConfig c;
  CHECK_NOTHROW(c.validate());
  c.refine_top_k = 300;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = InferConfig{};
  c.hypothesis_count = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = InferConfig{};
  c.inlier_threshold = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("hypotheses from exact correspondences") {
  for (const char* name : {"lblock", "tee", "step", "wedge"}) {
    const GeneratedScene g = zero_noise_scene(name, 10);
    Rng rng(1);
    const HypothesisSampler sampler(g.obs);
    for (int i = 0; i < 20; ++i) {
      const Pose H = sampler.sample(rng);
      CHECK(rotation_angle(H.rotation, g.gt.rotation) < 1e-6);
      CHECK((H.translation - g.gt.translation).norm() < 1e-3);
    }
  }
}

TEST_CASE("forced support picks the same three pixels") {
  GeneratedScene g = zero_noise_scene("lblock", 3);
  ObservationSet& obs = g.obs;
  const std::vector<std::pair<int, int>> px = {{70, 50}, {88, 52}, {76, 68}};
  ImageD prob = ImageD::Zero(obs.depth.rows(), obs.depth.cols());
  std::vector<Correspondence> corr;
  for (const auto& [x, y] : px) {
    REQUIRE(obs.depth_valid(y, x));
    prob(y, x) = 0.3;
    corr.push_back({obs.prediction.tree_object_coords[0].at(y, x), backproject(x, y, obs.depth(y, x), obs.intrinsics)});
  }
  obs.prediction.probability = prob;
  const Pose expected = rigid_from_correspondences(corr);
  Rng rng(9);
  for (int i = 0; i < 50; ++i) CHECK(close(sample_hypothesis(obs, rng), expected, 1e-9, 1e-6));
}

TEST_CASE("sampler errors") {
  GeneratedScene g = zero_noise_scene("tee", 4);
  SUBCASE("no probability mass") {
    g.obs.prediction.probability.setZero();
    CHECK_THROWS_AS(HypothesisSampler(g.obs), NoEvidence);
    Rng rng(1);
    CHECK_THROWS_AS(estimate(g.obs, builtin_mesh("tee"), EnergyNetParams{}, InferConfig{}, rng), NoEvidence);
  }
  SUBCASE("probability only where depth is missing") {
    g.obs.depth.setZero();
    g.obs.depth_valid.setZero();
    CHECK_THROWS_AS(HypothesisSampler(g.obs), NoEvidence);
  }
  SUBCASE("collinear support") {
    ImageD prob = ImageD::Zero(g.obs.depth.rows(), g.obs.depth.cols());
    for (int x = 0; x < 160; ++x) {
      prob(60, x) = 1.0;
      g.obs.depth(60, x) = 1000.0;
      g.obs.depth_valid(60, x) = 1;
    }
    g.obs.prediction.probability = prob;
    Rng rng(2);
    CHECK_THROWS_AS(HypothesisSampler(g.obs, 50).sample(rng), HypothesisFailure);
  }
}

TEST_CASE("refine") {
  const GeneratedScene g = zero_noise_scene("step", 21);
  const TriangleMesh mesh = builtin_mesh("step");
  const InferConfig cfg;
  SUBCASE("ground truth is a fixed point") {
    CHECK(close(refine(g.gt, g.obs, mesh, cfg), g.gt, 1e-6, 1e-6));
  }
  SUBCASE("5 mm offsets converge back") {
    for (const Vec3 d : {Vec3(5, 0, 0), Vec3(0, -5, 0), Vec3(0, 0, 5), Vec3(3, 3, -3)}) {
      Pose H = g.gt;
      H.translation += d;
      CHECK((refine(H, g.obs, mesh, cfg).translation - g.gt.translation).norm() < 0.1);
    }
  }
  SUBCASE("nothing rendered in frame") {
    Pose H = g.gt;
    H.translation.x() += 5000;
    const Pose R = refine(H, g.obs, mesh, cfg);
    CHECK(R.translation == H.translation);
    CHECK(R.rotation == H.rotation);
  }
}

TEST_CASE("estimate with the zero energy") {
  const GeneratedScene g = zero_noise_scene("wedge", 5);
  const TriangleMesh mesh = builtin_mesh("wedge");
  InferConfig cfg;
  cfg.hypothesis_count = 20;
  cfg.refine_top_k = 4;
  Rng rng(1);
  const Hypothesis h = estimate(g.obs, mesh, EnergyNetParams{}, cfg, rng);
  CHECK(h.energy == 0.0);
  CHECK(h.origin == HypothesisOrigin::Refined);
  CHECK(evaluate_pose(h.pose, g.gt, mesh).correct);
}

TEST_CASE("estimate keeps refinement only when it does not raise the energy") {
  const GeneratedScene g = zero_noise_scene("lblock", 8);
  const TriangleMesh mesh = builtin_mesh("lblock");
  InferConfig cfg;
  cfg.hypothesis_count = 1;
  cfg.refine_top_k = 1;

  // prefers poses far from the truth, so refinement is rejected
  const EnergyFn repel = [&](const Pose& H) { return -oracle::vertex_distance_energy(H, g.gt, mesh); };
  Rng a(3), b(3);
  const Pose sampled = sample_hypothesis(g.obs, b);
  const Hypothesis h = estimate(g.obs, mesh, repel, cfg, a);
  const Pose refined = refine(sampled, g.obs, mesh, cfg);
  if (repel(refined) <= repel(sampled)) {
    CHECK(h.origin == HypothesisOrigin::Refined);
    CHECK(close(h.pose, refined, 1e-12, 1e-9));
  } else {
    CHECK(h.origin == HypothesisOrigin::Sampled);
    CHECK(close(h.pose, sampled, 1e-12, 1e-9));
  }

  const EnergyFn attract = [&](const Pose& H) { return oracle::vertex_distance_energy(H, g.gt, mesh); };
  Rng c(3);
  const Hypothesis k = estimate(g.obs, mesh, attract, cfg, c);
  CHECK(k.energy <= attract(sampled));
}

TEST_CASE("estimate never beats its own sampled minimum from above") {
  GeneratedScene g = [] {
    SceneGenConfig cfg;
    cfg.occlusion_min = 0.2;
    cfg.occlusion_max = 0.5;
    return generate_scene(cfg, builtin_mesh("tee"), 31);
  }();
  const TriangleMesh mesh = builtin_mesh("tee");
  InferConfig cfg;
  cfg.hypothesis_count = 40;
  cfg.refine_top_k = 8;
  std::vector<double> seen;
  const EnergyFn recorded = [&](const Pose& H) {
    const double e = oracle::vertex_distance_energy(H, g.gt, mesh) + 5 * std::sin(H.translation.x());
    seen.push_back(e);
    return e;
  };
  Rng rng(4);
  const Hypothesis h = estimate(g.obs, mesh, recorded, cfg, rng);
  REQUIRE(seen.size() >= 40);
  const double best_sampled = *std::min_element(seen.begin(), seen.begin() + 40);
  CHECK(h.energy <= best_sampled);
  CHECK(h.energy == *std::min_element(seen.begin(), seen.end()));
}

TEST_CASE("estimate is deterministic") {
  const GeneratedScene g = [] {
    SceneGenConfig cfg;
    return generate_scene(cfg, builtin_mesh("step"), 77);
  }();
  const TriangleMesh mesh = builtin_mesh("step");
  Rng init(5);
  const EnergyNetParams params = init_params(init);
  InferConfig cfg;
  cfg.hypothesis_count = 12;
  cfg.refine_top_k = 3;
  Rng a(8), b(8);
  const Hypothesis x = estimate(g.obs, mesh, params, cfg, a);
  const Hypothesis y = estimate(g.obs, mesh, params, cfg, b);
  CHECK(x.energy == y.energy);
  CHECK(x.pose.translation == y.pose.translation);
  CHECK(x.pose.rotation == y.pose.rotation);
}

TEST_CASE("oracle energy solves zero-noise scenes") {
  const std::vector<std::string> names = {"lblock", "tee", "step", "wedge"};
  InferConfig cfg;
  cfg.hypothesis_count = 30;
  cfg.refine_top_k = 5;
  for (int i = 0; i < 8; ++i) {
    const std::string& name = names[i % 4];
    const TriangleMesh mesh = builtin_mesh(name);
    const GeneratedScene g = zero_noise_scene(name, 100 + i);
    const EnergyFn oracle_energy = [&](const Pose& H) { return oracle::vertex_distance_energy(H, g.gt, mesh); };
    Rng rng(i);
    const Hypothesis h = estimate(g.obs, mesh, oracle_energy, cfg, rng);
    CHECK(evaluate_pose(h.pose, g.gt, mesh).correct);
  }
}
