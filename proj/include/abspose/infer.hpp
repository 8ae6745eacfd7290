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

#pragma once

#include <random>
#include <vector>

#include "abspose/energynet.hpp"
#include "abspose/geometry.hpp"
#include "abspose/mesh.hpp"
#include "abspose/observation.hpp"
#include "abspose/posterior.hpp"
#include "abspose/random.hpp"

namespace abspose {

struct InferConfig {
  int hypothesis_count = 210;
  int refine_top_k = 25;
  int refine_rounds = 8;
  double inlier_threshold = 20.0;  // mm, object-coordinate distance
  int min_correspondences = 3;
  int max_sample_retries = 1000;

  /// Throws ConfigError.
  void validate() const;
};

enum class HypothesisOrigin { Sampled, Refined };

struct Hypothesis {
  Pose pose;
  double energy = 0.0;
  HypothesisOrigin origin = HypothesisOrigin::Sampled;
};

/// Draws pixel triples proportional to the combined object probability
/// (restricted to pixels with a depth measurement) and solves a pose from
/// their 3D-3D correspondences.
class HypothesisSampler {
 public:
  /// Throws NoEvidence when no measured pixel has positive probability.
  explicit HypothesisSampler(const ObservationSet& obs, int max_retries = 1000);

  /// Throws HypothesisFailure when `max_retries` triples in a row were degenerate.
  Pose sample(Rng& rng) const;

 private:
  const ObservationSet* obs_;
  std::vector<int> pixels_;  // support of the distribution, y * width + x
  mutable std::discrete_distribution<int> dist_;
  int max_retries_;
};

Pose sample_hypothesis(const ObservationSet& obs, Rng& rng);

/// Inlier-based refinement: inliers are rendered-mask pixels with measured depth
/// whose predicted coordinate (argmax tree) lies within the threshold of the
/// rendered coordinate; the pose is re-solved from all inliers each round.
Pose refine(const Pose& H, const ObservationSet& obs, const TriangleMesh& mesh, const InferConfig& cfg);

/// MAP estimate: sample, score, refine the best, rescore, pick the minimum.
/// A refined pose replaces its parent only when its energy is not higher;
/// energy ties go to the earliest generated hypothesis.
Hypothesis estimate(const ObservationSet& obs, const TriangleMesh& mesh, const EnergyFn& energy,
                    const InferConfig& cfg, Rng& rng);
Hypothesis estimate(const ObservationSet& obs, const TriangleMesh& mesh, const EnergyNetParams& params,
                    const InferConfig& cfg, Rng& rng);

}  // namespace abspose
