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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abspose/dataset.hpp"
#include "abspose/energynet.hpp"
#include "abspose/geometry.hpp"
#include "abspose/infer.hpp"
#include "abspose/mesh.hpp"
#include "abspose/observation.hpp"

namespace abspose {

struct PoseEvaluation {
  double avg_vertex_distance = 0.0;  // mm
  double threshold = 0.0;            // 0.1 * diameter
  bool correct = false;              // strictly below threshold
};

/// Mean distance between mesh vertices under the two poses.
PoseEvaluation evaluate_pose(const Pose& est, const Pose& gt, const TriangleMesh& mesh);

/// 1 - visible / unoccluded pixel count of `scene.target`.
/// Throws UndefinedOcclusion when the target covers no pixel.
double occlusion_fraction(const Scene& scene, const CameraIntrinsics& K);

struct OcclusionBin {
  double lo = 0.0;
  double hi = 0.0;
  int total = 0;
  int correct = 0;

  std::optional<double> accuracy() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(correct) / total;
  }
};

inline constexpr int kOcclusionBins = 10;

/// Ten left-closed bins of width 0.1; the last one also holds 1.0.
std::array<OcclusionBin, kOcclusionBins> bin_by_occlusion(std::span<const std::pair<double, bool>> results);

/// One row of results.csv.
struct ResultRow {
  std::string scene_id;
  std::string object;
  double occlusion = 0.0;
  double energy = 0.0;
  bool correct = false;
  double avg_vertex_distance = 0.0;
  Pose pose;
};

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
/// Throws DataError.
std::vector<ResultRow> read_results_csv(std::istream& in);

/// Runs estimate on every entry (stream "infer", index i of `seed`) and scores it.
/// A scene without usable evidence yields an incorrect row with infinite energy.
std::vector<ResultRow> infer_dataset(std::span<const DatasetEntry> entries, const EnergyNetParams& params,
                                     const InferConfig& cfg, std::uint64_t seed);

/// Per-object and overall accuracy followed by the non-empty occlusion bins.
void write_report_csv(std::ostream& out, const std::vector<ResultRow>& rows);

}  // namespace abspose
