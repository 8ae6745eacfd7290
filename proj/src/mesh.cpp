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

#include "abspose/mesh.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace abspose {

void TriangleMesh::finalize() {
  if (triangles.empty()) throw DataError("mesh has no triangles");
  const int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles) {
    for (int idx : t) {
      if (idx < 0 || idx >= n) throw DataError("mesh triangle index out of range");
    }
  }
  double best = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    for (std::size_t j = i + 1; j < vertices.size(); ++j) {
      best = std::max(best, (vertices[i] - vertices[j]).squaredNorm());
    }
  }
  diameter = std::sqrt(best);
  if (!(diameter > 0.0)) throw DataError("mesh has zero diameter");
}

void TriangleMesh::recenter() {
  if (vertices.empty()) return;
  Vec3 c = Vec3::Zero();
  for (const auto& v : vertices) c += v;
  c /= static_cast<double>(vertices.size());
  for (auto& v : vertices) v -= c;
}

Vec3 TriangleMesh::bbox_min() const {
  Vec3 m = Vec3::Constant(std::numeric_limits<double>::infinity());
  for (const auto& v : vertices) m = m.cwiseMin(v);
  return m;
}

Vec3 TriangleMesh::bbox_max() const {
  Vec3 m = Vec3::Constant(-std::numeric_limits<double>::infinity());
  for (const auto& v : vertices) m = m.cwiseMax(v);
  return m;
}

TriangleMesh load_obj(const std::filesystem::path& path, double scale) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mesh " + path.string());

  TriangleMesh mesh;
  mesh.name = path.stem().string();
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) throw DataError("bad vertex line in " + path.string());
      mesh.vertices.push_back(scale * v);
    } else if (tag == "f") {
      std::vector<int> face;
      std::string tok;
      while (ls >> tok) {
        // "7", "7/1", "7//3", "7/1/3": the vertex index comes first
        int idx = 0;
        const auto head = tok.substr(0, tok.find('/'));
        const auto [end, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
        if (ec != std::errc() || end != head.data() + head.size() || idx == 0) {
          throw DataError("bad face index '" + tok + "' in " + path.string());
        }
        face.push_back(idx > 0 ? idx - 1 : static_cast<int>(mesh.vertices.size()) + idx);
      }
      if (face.size() < 3) throw DataError("face with fewer than 3 vertices in " + path.string());
      for (std::size_t k = 1; k + 1 < face.size(); ++k) {
        mesh.triangles.push_back({face[0], face[k], face[k + 1]});
      }
    }
  }
  mesh.recenter();
  mesh.finalize();
  return mesh;
}

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write mesh " + path.string());
  out << std::setprecision(17);
  out << "# " << mesh.name << "\n";
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

TriangleMesh make_box(const Vec3& extent, const Vec3& center) {
  TriangleMesh m;
  m.name = "box";
  const Vec3 h = extent / 2.0;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back(center + Vec3((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                                       (i & 4) ? h.z() : -h.z()));
  }
  // two triangles per face, outward winding
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  m.finalize();
  return m;
}

TriangleMesh merge(const std::vector<TriangleMesh>& parts, std::string name) {
  TriangleMesh m;
  m.name = std::move(name);
  for (const auto& p : parts) {
    const int base = static_cast<int>(m.vertices.size());
    m.vertices.insert(m.vertices.end(), p.vertices.begin(), p.vertices.end());
    for (const auto& t : p.triangles) m.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  }
  m.recenter();
  m.finalize();
  return m;
}

namespace {

TriangleMesh make_wedge() {
  // right-angled triangular prism with unequal legs
  TriangleMesh m;
  m.name = "wedge";
  const double a = 80.0, b = 45.0, depth = 35.0;
  for (double z : {-depth / 2, depth / 2}) {
    m.vertices.push_back(Vec3(-a / 2, -b / 2, z));
    m.vertices.push_back(Vec3(a / 2, -b / 2, z));
    m.vertices.push_back(Vec3(-a / 2, b / 2, z));
  }
  m.triangles = {{0, 2, 1}, {3, 4, 5}, {0, 1, 4}, {0, 4, 3}, {1, 2, 5}, {1, 5, 4}, {2, 0, 3}, {2, 3, 5}};
  m.recenter();
  m.finalize();
  return m;
}

}  // namespace

bool is_builtin_mesh(const std::string& name) {
  return name == "lblock" || name == "tee" || name == "step" || name == "wedge";
}

TriangleMesh builtin_mesh(const std::string& name) {
  if (name == "lblock") {
    return merge({make_box({80, 30, 30}), make_box({30, 30, 45}, {25, 0, 37.5})}, name);
  }
  if (name == "tee") {
    return merge({make_box({85, 22, 26}), make_box({22, 55, 26}, {-15, 38.5, 0})}, name);
  }
  if (name == "step") {
    return merge({make_box({75, 40, 22}), make_box({35, 40, 24}, {-20, 0, 23}),
                  make_box({15, 15, 15}, {30, 12, 18.5})},
                 name);
  }
  if (name == "wedge") return make_wedge();
  throw ConfigError("unknown built-in mesh '" + name + "'");
}

}  // namespace abspose
