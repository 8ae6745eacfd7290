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

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "abspose/geometry.hpp"

namespace abspose {

/// Triangle mesh in object coordinates (mm), origin at the vertex centroid.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  double diameter = 0.0;  // max pairwise vertex distance
  std::string name;

  /// Validates indices, recomputes the diameter. Throws DataError.
  void finalize();

  /// Shift vertices so that their centroid is the origin.
  void recenter();

  Vec3 bbox_min() const;
  Vec3 bbox_max() const;
};

/// ASCII OBJ subset: `v` and `f` records; polygons are fan-triangulated.
/// Vertices are multiplied by `scale` and the mesh is recentered.
TriangleMesh load_obj(const std::filesystem::path& path, double scale = 1.0);
void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

/// Axis-aligned box with the given full extents, centered at the origin.
TriangleMesh make_box(const Vec3& extent, const Vec3& center = Vec3::Zero());

/// Union of meshes (no boolean ops, triangles are concatenated), recentered.
TriangleMesh merge(const std::vector<TriangleMesh>& parts, std::string name);

/// Built-in asymmetric test objects: "lblock", "tee", "step", "wedge".
TriangleMesh builtin_mesh(const std::string& name);
bool is_builtin_mesh(const std::string& name);

}  // namespace abspose
