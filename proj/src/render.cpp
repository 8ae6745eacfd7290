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

#include "abspose/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace abspose {

namespace {

constexpr double kNearPlane = 1.0;  // mm

struct ClipVertex {
  Vec3 cam;
  Vec3 obj;
};

// Sutherland-Hodgman against z >= near. Returns at most four vertices.
int clip_near(const std::array<ClipVertex, 3>& in, std::array<ClipVertex, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool a_in = a.cam.z() >= kNearPlane;
    const bool b_in = b.cam.z() >= kNearPlane;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double t = (kNearPlane - a.cam.z()) / (b.cam.z() - a.cam.z());
      out[n++] = {a.cam + t * (b.cam - a.cam), a.obj + t * (b.obj - a.obj)};
    }
  }
  return n;
}

bool top_left(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const double dx = b.x() - a.x();
  const double dy = b.y() - a.y();
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

double edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

void raster_triangle(std::array<ClipVertex, 3> v, const CameraIntrinsics& K, int x0, int y0,
                     RenderedImages& out) {
  std::array<Eigen::Vector2d, 3> p;
  for (int i = 0; i < 3; ++i) p[i] = project(v[i].cam, K);

  double area = edge(p[0], p[1], p[2].x(), p[2].y());
  if (area == 0.0 || !std::isfinite(area)) return;
  if (area < 0.0) {
    std::swap(v[1], v[2]);
    std::swap(p[1], p[2]);
    area = -area;
  }

  const int w = static_cast<int>(out.depth.cols());
  const int h = static_cast<int>(out.depth.rows());
  const double minx = std::min({p[0].x(), p[1].x(), p[2].x()});
  const double maxx = std::max({p[0].x(), p[1].x(), p[2].x()});
  const double miny = std::min({p[0].y(), p[1].y(), p[2].y()});
  const double maxy = std::max({p[0].y(), p[1].y(), p[2].y()});
  const int cx0 = std::max(x0, static_cast<int>(std::ceil(minx)));
  const int cx1 = std::min(x0 + w - 1, static_cast<int>(std::floor(maxx)));
  const int cy0 = std::max(y0, static_cast<int>(std::ceil(miny)));
  const int cy1 = std::min(y0 + h - 1, static_cast<int>(std::floor(maxy)));
  if (cx0 > cx1 || cy0 > cy1) return;

  const std::array<bool, 3> tl = {top_left(p[1], p[2]), top_left(p[2], p[0]), top_left(p[0], p[1])};
  const Eigen::Vector3d inv_z(1.0 / v[0].cam.z(), 1.0 / v[1].cam.z(), 1.0 / v[2].cam.z());

  for (int py = cy0; py <= cy1; ++py) {
    for (int px = cx0; px <= cx1; ++px) {
      // weight i belongs to the edge opposite vertex i
      const Eigen::Vector3d e(edge(p[1], p[2], px, py), edge(p[2], p[0], px, py),
                              edge(p[0], p[1], px, py));
      bool inside = true;
      for (int i = 0; i < 3 && inside; ++i) inside = e(i) > 0.0 || (e(i) == 0.0 && tl[i]);
      if (!inside) continue;

      const Eigen::Vector3d bary = e / area;
      const double z = 1.0 / bary.dot(inv_z);
      const int r = py - y0;
      const int c = px - x0;
      const double cur = out.depth(r, c);
      if (cur > 0.0 && cur <= z) continue;

      const Eigen::Vector3d wgt = bary.cwiseProduct(inv_z) * z;
      out.depth(r, c) = z;
      out.object_coords.set(r, c, wgt(0) * v[0].obj + wgt(1) * v[1].obj + wgt(2) * v[2].obj);
      out.mask(r, c) = 1;
    }
  }
}

}  // namespace

Window compute_window(const Pose& H, double diameter, const CameraIntrinsics& K) {
  const double tz = H.translation.z();
  if (!(tz > 0.0)) throw BehindCamera("compute_window: object center behind camera");
  const Eigen::Vector2d c = project(H.translation, K);
  const double raw = kWindowPad * diameter * std::max(K.fx, K.fy) / tz;
  // the 1e-9 slack keeps exact products such as 12.000000000000002 at 12
  int size = static_cast<int>(std::ceil(raw - 1e-9));
  size = std::max(size, kMinWindow);
  Window w;
  w.size = size;
  w.x0 = static_cast<int>(std::lround(c.x())) - size / 2;
  w.y0 = static_cast<int>(std::lround(c.y())) - size / 2;
  return w;
}

RenderedImages rasterize(const TriangleMesh& mesh, const Pose& H, const CameraIntrinsics& K, int x0,
                         int y0, int width, int height) {
  RenderedImages out;
  out.depth = ImageD::Zero(height, width);
  out.object_coords = CoordImage(height, width);
  out.mask = Mask::Zero(height, width);

  std::vector<Vec3> cam(mesh.vertices.size());
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = transform_point(H, mesh.vertices[i]);

  std::array<ClipVertex, 4> poly;
  for (const auto& t : mesh.triangles) {
    const std::array<ClipVertex, 3> tri = {ClipVertex{cam[t[0]], mesh.vertices[t[0]]},
                                           ClipVertex{cam[t[1]], mesh.vertices[t[1]]},
                                           ClipVertex{cam[t[2]], mesh.vertices[t[2]]}};
    const int n = clip_near(tri, poly);
    for (int k = 1; k + 1 < n; ++k) raster_triangle({poly[0], poly[k], poly[k + 1]}, K, x0, y0, out);
  }
  return out;
}

RenderedImages render(const TriangleMesh& mesh, const Pose& H, const CameraIntrinsics& K,
                      const Window& w) {
  RenderedImages raw = rasterize(mesh, H, K, w.x0, w.y0, w.size, w.size);
  if (w.size <= kMaxWindow) return raw;

  const int s = w.render_size();
  RenderedImages out;
  out.depth = ImageD::Zero(s, s);
  out.object_coords = CoordImage(s, s);
  out.mask = Mask::Zero(s, s);
  for (int r = 0; r < s; ++r) {
    const int sr = w.source_offset(r);
    for (int c = 0; c < s; ++c) {
      const int sc = w.source_offset(c);
      out.depth(r, c) = raw.depth(sr, sc);
      out.object_coords.set(r, c, raw.object_coords.at(sr, sc));
      out.mask(r, c) = raw.mask(sr, sc);
    }
  }
  return out;
}

RenderedImages render_full_frame(const TriangleMesh& mesh, const Pose& H, const CameraIntrinsics& K) {
  return rasterize(mesh, H, K, 0, 0, K.width, K.height);
}

}  // namespace abspose
