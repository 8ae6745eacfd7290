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

#include "abspose/infer.hpp"

#include <algorithm>
#include <numeric>

namespace abspose {

void InferConfig::validate() const {
  if (hypothesis_count <= 0 || refine_top_k <= 0 || refine_rounds <= 0 || min_correspondences <= 0 ||
      max_sample_retries <= 0 || !(inlier_threshold > 0.0)) {
    throw ConfigError("inference settings must be positive");
  }
  if (refine_top_k > hypothesis_count) throw ConfigError("refine_top_k exceeds hypothesis_count");
}

namespace {

bool near_collinear(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u = b - a;
  const Vec3 v = c - a;
  const double area2 = u.cross(v).norm();
  return area2 <= 1e-9 * u.norm() * v.norm() || area2 < 1e-6;
}

}  // namespace

HypothesisSampler::HypothesisSampler(const ObservationSet& obs, int max_retries)
    : obs_(&obs), max_retries_(max_retries) {
  const int w = obs.intrinsics.width;
  const int h = obs.intrinsics.height;
  std::vector<double> weights;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double p = obs.prediction.probability(y, x);
      if (obs.depth_valid(y, x) && p > 0.0) {
        pixels_.push_back(y * w + x);
        weights.push_back(p);
      }
    }
  }
  if (pixels_.size() < 3) throw NoEvidence("no measured pixels with object probability");
  dist_ = std::discrete_distribution<int>(weights.begin(), weights.end());
}

Pose HypothesisSampler::sample(Rng& rng) const {
  const ObservationSet& obs = *obs_;
  const int w = obs.intrinsics.width;
  for (int attempt = 0; attempt < max_retries_; ++attempt) {
    std::array<int, 3> px{};
    for (int k = 0; k < 3; ++k) {
      int cand = pixels_[dist_(rng)];
      // without replacement inside a triple
      for (int guard = 0; guard < 64 && std::find(px.begin(), px.begin() + k, cand) != px.begin() + k; ++guard) {
        cand = pixels_[dist_(rng)];
      }
      px[k] = cand;
    }
    if (px[0] == px[1] || px[1] == px[2] || px[0] == px[2]) continue;

    std::array<Correspondence, 3> corr;
    for (int k = 0; k < 3; ++k) {
      const int x = px[k] % w;
      const int y = px[k] / w;
      const int t = argmax_tree(obs.prediction, x, y);
      corr[k].object = obs.prediction.tree_object_coords[t].at(y, x);
      corr[k].camera = backproject(x, y, obs.depth(y, x), obs.intrinsics);
    }
    if (near_collinear(corr[0].object, corr[1].object, corr[2].object) ||
        near_collinear(corr[0].camera, corr[1].camera, corr[2].camera)) {
      continue;
    }
    try {
      return rigid_from_correspondences(corr);
    } catch (const DegenerateConfiguration&) {
      continue;
    }
  }
  throw HypothesisFailure("no non-degenerate pixel triple found");
}

Pose sample_hypothesis(const ObservationSet& obs, Rng& rng) { return HypothesisSampler(obs).sample(rng); }

Pose refine(const Pose& H, const ObservationSet& obs, const TriangleMesh& mesh, const InferConfig& cfg) {
  const CameraIntrinsics& K = obs.intrinsics;
  Pose cur = H;
  std::vector<Correspondence> inliers;
  for (int round = 0; round < cfg.refine_rounds; ++round) {
    if (!(cur.translation.z() > 0.0)) break;
    const RenderedImages r = render_full_frame(mesh, cur, K);
    inliers.clear();
    for (int y = 0; y < K.height; ++y) {
      for (int x = 0; x < K.width; ++x) {
        // predictions only exist where some tree gives positive probability
        if (!r.mask(y, x) || !obs.depth_valid(y, x) || !(obs.prediction.probability(y, x) > 0.0)) continue;
        const int t = argmax_tree(obs.prediction, x, y);
        const Vec3 predicted = obs.prediction.tree_object_coords[t].at(y, x);
        if ((predicted - r.object_coords.at(y, x)).norm() >= cfg.inlier_threshold) continue;
        inliers.push_back({predicted, backproject(x, y, obs.depth(y, x), K)});
      }
    }
    if (static_cast<int>(inliers.size()) < std::max(3, cfg.min_correspondences)) break;

    Pose next;
    try {
      next = rigid_from_correspondences(inliers);
    } catch (const DegenerateConfiguration&) {
      break;
    }
    const double dt = (next.translation - cur.translation).norm();
    const double dr = rotation_angle(next.rotation, cur.rotation);
    cur = next;
    if (dt < 1e-3 && dr < 1e-4) break;
  }
  return cur;
}

Hypothesis estimate(const ObservationSet& obs, const TriangleMesh& mesh, const EnergyFn& energy,
                    const InferConfig& cfg, Rng& rng) {
  cfg.validate();
  const HypothesisSampler sampler(obs, cfg.max_sample_retries);

  std::vector<Hypothesis> pool;
  pool.reserve(static_cast<std::size_t>(cfg.hypothesis_count));
  for (int i = 0; i < cfg.hypothesis_count; ++i) {
    Pose H;
    try {
      H = sampler.sample(rng);
    } catch (const HypothesisFailure&) {
      continue;
    }
    pool.push_back({H, energy(H), HypothesisOrigin::Sampled});
  }
  if (pool.empty()) throw NoEvidence("no pose hypothesis could be formed");

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pool[a].energy < pool[b].energy; });
  const std::size_t k = std::min(order.size(), static_cast<std::size_t>(cfg.refine_top_k));
  for (std::size_t j = 0; j < k; ++j) {
    Hypothesis& parent = pool[order[j]];
    const Pose refined = refine(parent.pose, obs, mesh, cfg);
    const double e = energy(refined);
    if (e <= parent.energy) parent = {refined, e, HypothesisOrigin::Refined};
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (pool[i].energy < pool[best].energy) best = i;
  }
  return pool[best];
}

Hypothesis estimate(const ObservationSet& obs, const TriangleMesh& mesh, const EnergyNetParams& params,
                    const InferConfig& cfg, Rng& rng) {
  const EnergyNet net(params);
  const GibbsPosterior post(obs, mesh, net);
  return estimate(obs, mesh, [&](const Pose& H) { return post.energy(H); }, cfg, rng);
}

}  // namespace abspose
