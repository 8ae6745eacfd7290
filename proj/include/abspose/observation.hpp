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

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "abspose/geometry.hpp"
#include "abspose/mesh.hpp"
#include "abspose/random.hpp"
#include "abspose/render.hpp"

namespace abspose {

/// Forest-style per-pixel predictions over the full frame.
/// Coordinate maps are dense: every pixel carries a prediction.
struct ForestPrediction {
  ImageD probability;  // combined (mean over trees)
  std::vector<ImageD> tree_probabilities;
  std::vector<CoordImage> tree_object_coords;

  int tree_count() const { return static_cast<int>(tree_probabilities.size()); }
};

/// The observed input x: depth plus predictions.
struct ObservationSet {
  ImageD depth;  // mm, 0 = no measurement
  Mask depth_valid;
  ForestPrediction prediction;
  CameraIntrinsics intrinsics;

  /// Throws ContractViolation if shapes or the validity biconditional are broken.
  void check() const;
};

inline constexpr int kChannels = 6;

/// Network input: 6 x (S*S), row c is channel c in row-major pixel order.
///  0 observed depth - T_z   1 rendered depth - T_z   2 rendered mask (+1/-1)
///  3 depth measured (+1/-1) 4 2p - 1                 5 |coord error| / diameter
struct ChannelStack {
  int size = 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> data;

  ChannelStack() = default;
  explicit ChannelStack(int s) : size(s), data(kChannels, s * s) { data.setZero(); }

  double& at(int ch, int row, int col) { return data(ch, row * size + col); }
  double at(int ch, int row, int col) const { return data(ch, row * size + col); }
};

/// Index of the tree with the highest probability at (x, y); ties go to the lowest index.
int argmax_tree(const ForestPrediction& prediction, int x, int y);

ChannelStack assemble_channels(const ObservationSet& obs, const RenderedImages& rend, const Pose& H,
                               double diameter, const Window& w);

struct NoiseParams {
  double depth_sigma = 3.0;    // mm
  double coord_sigma = 15.0;   // mm
  double outlier_rate = 0.3;   // rho
  double flip_rate = 0.1;      // kappa
  int trees = 3;
  int dropout_patches = 3;     // rectangles with no depth
  int dropout_max_size = 12;   // px
  int smoothing = 1;           // box radius of the probability map

  /// "default", "zero" or "hard".
  static NoiseParams preset(const std::string& name);
};

struct SceneObject {
  TriangleMesh mesh;
  Pose pose;
};

struct Scene {
  std::vector<SceneObject> objects;
  int target = 0;
};

/// Z-buffer composite over all scene objects.
struct CompositeFrame {
  ImageD depth;
  Image<int> owner;  // index of the front-most object, -1 = empty
};

CompositeFrame render_composite(const Scene& scene, const CameraIntrinsics& K);

/// Synthetic stand-in for forest predictions plus noisy depth for `scene.target`.
std::pair<ObservationSet, Pose> synthesize_observation(const Scene& scene, const CameraIntrinsics& K,
                                                       const NoiseParams& noise, Rng& rng);

/// One scene on disk: rasters + manifest.txt.
struct ObservationRecord {
  ObservationSet obs;
  Pose gt;
  std::string scene_id;
  std::string mesh_path;  // relative to the scene directory, or absolute
  double mesh_scale = 1.0;
  std::uint64_t seed = 0;
  NoiseParams noise;
  double occlusion = 0.0;
};

void save_observation(const std::filesystem::path& dir, const ObservationRecord& rec);
/// Throws DataError on missing or inconsistent files.
ObservationRecord load_observation(const std::filesystem::path& dir);

}  // namespace abspose
