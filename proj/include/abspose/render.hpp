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

#include "abspose/geometry.hpp"
#include "abspose/mesh.hpp"

namespace abspose {

/// Row-major raster, rows = image height. Pixel (x, y) is `img(y, x)`.
template <typename T>
using Image = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ImageD = Image<double>;
using Mask = Image<std::uint8_t>;

/// Three planar coordinate maps (mm).
struct CoordImage {
  ImageD x, y, z;

  CoordImage() = default;
  CoordImage(int height, int width)
      : x(ImageD::Zero(height, width)), y(ImageD::Zero(height, width)), z(ImageD::Zero(height, width)) {}

  Vec3 at(int row, int col) const { return {x(row, col), y(row, col), z(row, col)}; }
  void set(int row, int col, const Vec3& v) {
    x(row, col) = v.x();
    y(row, col) = v.y();
    z(row, col) = v.z();
  }
  int rows() const { return static_cast<int>(x.rows()); }
  int cols() const { return static_cast<int>(x.cols()); }
};

inline constexpr int kMinWindow = 16;
inline constexpr int kMaxWindow = 100;
inline constexpr double kWindowPad = 1.2;

/// Square cut-out around the projected object center, in full-frame pixels.
/// `size` is the raw side length; windows larger than kMaxWindow are sampled
/// down to kMaxWindow by nearest neighbour.
struct Window {
  int x0 = 0;
  int y0 = 0;
  int size = kMinWindow;

  int render_size() const { return size > kMaxWindow ? kMaxWindow : size; }

  /// Offset inside the raw window of output sample `i`.
  int source_offset(int i) const {
    if (size <= kMaxWindow) return i;
    return static_cast<int>((static_cast<long>(2 * i + 1) * size) / (2L * kMaxWindow));
  }
};

struct RenderedImages {
  ImageD depth;  // camera z in mm, 0 = background
  CoordImage object_coords;
  Mask mask;

  int size() const { return static_cast<int>(depth.rows()); }
};

/// Throws BehindCamera when T_z <= 0.
Window compute_window(const Pose& H, double diameter, const CameraIntrinsics& K);

/// Rasterizes the full-frame pixel rectangle [x0, x0+width) x [y0, y0+height).
/// Pixels may lie outside the camera frame; geometry is never cropped to it.
RenderedImages rasterize(const TriangleMesh& mesh, const Pose& H, const CameraIntrinsics& K, int x0,
                         int y0, int width, int height);

/// Window render, downsampled to kMaxWindow when the raw window is larger.
RenderedImages render(const TriangleMesh& mesh, const Pose& H, const CameraIntrinsics& K,
                      const Window& w);

RenderedImages render_full_frame(const TriangleMesh& mesh, const Pose& H, const CameraIntrinsics& K);

}  // namespace abspose
