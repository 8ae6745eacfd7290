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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "abspose/observation.hpp"
#include "abspose/random.hpp"
#include "abspose/train.hpp"

namespace abspose {

/// 160x120 camera with f = 200 px; objects ~100 mm across at ~1.1 m give
/// windows of roughly 24 px.
CameraIntrinsics default_camera();

struct SceneGenConfig {
  CameraIntrinsics camera = default_camera();
  NoiseParams noise;
  double occlusion_min = 0.0;  // target occlusion range; [0, 0] places no occluder
  double occlusion_max = 0.0;
  double z_min = 950.0;        // target depth range, mm
  double z_max = 1250.0;
  int max_tries = 400;
};

struct GeneratedScene {
  Scene scene;
  ObservationSet obs;
  Pose gt;
  double occlusion = 0.0;
  std::uint64_t seed = 0;
};

/// Random target pose in front of a background plane plus occluder boxes until
/// the target's occlusion lies in range. Throws DataError if the range is not reached.
GeneratedScene generate_scene(const SceneGenConfig& cfg, const TriangleMesh& target, std::uint64_t seed);

/// Writes `count` scenes to dir/scene_NNNN, meshes to dir/meshes/<name>.obj.
/// Scene i uses meshes[i % meshes.size()] and sub-seed i of `seed`.
void write_dataset(const std::filesystem::path& dir, const std::vector<TriangleMesh>& meshes,
                   const SceneGenConfig& cfg, int count, std::uint64_t seed);

/// In-memory equivalent of write_dataset followed by load_dataset
/// (observations are not rounded to f32).
std::vector<TrainingSample> generate_samples(const std::vector<TriangleMesh>& meshes, const SceneGenConfig& cfg,
                                             int count, std::uint64_t seed, std::vector<double>* occlusions = nullptr);

struct DatasetEntry {
  TrainingSample sample;
  double occlusion = 0.0;
};

/// Loads every scene_* directory (sorted by name). Throws DataError.
std::vector<DatasetEntry> load_dataset(const std::filesystem::path& dir);

/// Resolves a --meshes entry: a built-in name or an OBJ path.
TriangleMesh resolve_mesh(const std::string& spec, double scale = 1.0);

}  // namespace abspose
