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

#include "abspose/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "abspose/harness.hpp"
#include "abspose/keyvalue.hpp"

namespace abspose {

CameraIntrinsics default_camera() { return {200.0, 200.0, 79.5, 59.5, 160, 120}; }

namespace {

Mat3 random_rotation(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

SceneObject background_plane(const CameraIntrinsics& K, double z, Rng& rng) {
  std::uniform_real_distribution<double> tilt(-0.25, 0.25);
  const double half_w = 1.6 * K.width * z / K.fx;
  const double half_h = 1.6 * K.height * z / K.fy;
  SceneObject plane{make_box({2 * half_w, 2 * half_h, 2.0}), Pose{}};
  plane.mesh.name = "background";
  plane.pose.rotation = exp_so3(Vec3(tilt(rng), tilt(rng), 0.0));
  plane.pose.translation = Vec3(0.0, 0.0, z);
  return plane;
}

}  // namespace

GeneratedScene generate_scene(const SceneGenConfig& cfg, const TriangleMesh& target, std::uint64_t seed) {
  const CameraIntrinsics& K = cfg.camera;
  Rng rng = make_stream(seed, "scene");
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  GeneratedScene out;
  out.seed = seed;
  Pose gt;
  gt.rotation = random_rotation(rng);
  const double z = cfg.z_min + (cfg.z_max - cfg.z_min) * unit(rng);
  // keep the projected center within the middle of the frame
  const double u = K.cx + (unit(rng) - 0.5) * 0.5 * K.width;
  const double v = K.cy + (unit(rng) - 0.5) * 0.5 * K.height;
  gt.translation = backproject(u, v, z, K);
  out.gt = gt;

  Scene& scene = out.scene;
  scene.objects.push_back({target, gt});
  scene.target = 0;
  scene.objects.push_back(background_plane(K, z + target.diameter + 40.0 + 100.0 * unit(rng), rng));

  const bool occlude = cfg.occlusion_max > 0.0;
  if (occlude) {
    const double radius_px = 0.5 * target.diameter * K.fx / z;
    bool found = false;
    for (int attempt = 0; attempt < cfg.max_tries && !found; ++attempt) {
      const Vec3 extent(35.0 + 45.0 * unit(rng), 35.0 + 45.0 * unit(rng), 15.0 + 25.0 * unit(rng));
      const double zo = z - target.diameter * (0.8 + unit(rng));
      const double angle = 2.0 * M_PI * unit(rng);
      const double dist = radius_px * (0.2 + 1.2 * unit(rng));
      const Eigen::Vector2d c = project(gt.translation, K) + dist * Eigen::Vector2d(std::cos(angle), std::sin(angle));
      SceneObject occluder{make_box(extent), Pose{}};
      occluder.mesh.name = "occluder";
      occluder.pose.rotation = exp_so3(Vec3(0.3 * (unit(rng) - 0.5), 0.3 * (unit(rng) - 0.5), M_PI * unit(rng)));
      occluder.pose.translation = backproject(c.x(), c.y(), zo, K);

      scene.objects.push_back(occluder);
      const double f = occlusion_fraction(scene, K);
      if (f >= cfg.occlusion_min && f <= cfg.occlusion_max) {
        found = true;
      } else {
        scene.objects.pop_back();
      }
    }
    if (!found) throw DataError("could not reach the requested occlusion range");
  }
  out.occlusion = occlusion_fraction(scene, K);

  Rng noise_rng = make_stream(seed, "observation");
  auto [obs, pose] = synthesize_observation(scene, K, cfg.noise, noise_rng);
  out.obs = std::move(obs);
  return out;
}

namespace {

std::string scene_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d", i);
  return buf;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const std::vector<TriangleMesh>& meshes,
                   const SceneGenConfig& cfg, int count, std::uint64_t seed) {
  if (meshes.empty()) throw ConfigError("no meshes given");
  std::filesystem::create_directories(dir / "meshes");
  for (const auto& m : meshes) save_obj(m, dir / "meshes" / (m.name + ".obj"));

  for (int i = 0; i < count; ++i) {
    const TriangleMesh& mesh = meshes[static_cast<std::size_t>(i) % meshes.size()];
    const std::uint64_t sub = splitmix64(seed + static_cast<std::uint64_t>(i));
    const GeneratedScene g = generate_scene(cfg, mesh, sub);
    ObservationRecord rec;
    rec.obs = g.obs;
    rec.gt = g.gt;
    rec.scene_id = scene_name(i);
    rec.mesh_path = "../meshes/" + mesh.name + ".obj";
    rec.seed = sub;
    rec.noise = cfg.noise;
    rec.occlusion = g.occlusion;
    save_observation(dir / rec.scene_id, rec);
  }
}

std::vector<TrainingSample> generate_samples(const std::vector<TriangleMesh>& meshes, const SceneGenConfig& cfg,
                                             int count, std::uint64_t seed, std::vector<double>* occlusions) {
  if (meshes.empty()) throw ConfigError("no meshes given");
  std::vector<std::shared_ptr<const TriangleMesh>> shared;
  for (const auto& m : meshes) shared.push_back(std::make_shared<const TriangleMesh>(m));
  std::vector<TrainingSample> out;
  for (int i = 0; i < count; ++i) {
    const auto& mesh = shared[static_cast<std::size_t>(i) % shared.size()];
    GeneratedScene g = generate_scene(cfg, *mesh, splitmix64(seed + static_cast<std::uint64_t>(i)));
    out.push_back({std::move(g.obs), g.gt, mesh, scene_name(i)});
    if (occlusions) occlusions->push_back(g.occlusion);
  }
  return out;
}

std::vector<DatasetEntry> load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a dataset directory: " + dir.string());
  std::vector<std::filesystem::path> scenes;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_directory() && e.path().filename().string().rfind("scene_", 0) == 0) scenes.push_back(e.path());
  }
  std::sort(scenes.begin(), scenes.end());
  if (scenes.empty()) throw DataError("no scene_* directories in " + dir.string());

  std::map<std::string, std::shared_ptr<const TriangleMesh>> cache;
  std::vector<DatasetEntry> out;
  for (const auto& s : scenes) {
    ObservationRecord rec = load_observation(s);
    const std::filesystem::path mp = std::filesystem::path(rec.mesh_path).is_absolute()
                                         ? std::filesystem::path(rec.mesh_path)
                                         : s / rec.mesh_path;
    const std::string key = std::filesystem::weakly_canonical(mp).string() + "@" + format_exact(rec.mesh_scale);
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(key, std::make_shared<const TriangleMesh>(load_obj(mp, rec.mesh_scale))).first;
    }
    out.push_back({TrainingSample{std::move(rec.obs), rec.gt, it->second, rec.scene_id}, rec.occlusion});
  }
  return out;
}

TriangleMesh resolve_mesh(const std::string& spec, double scale) {
  if (is_builtin_mesh(spec)) {
    TriangleMesh m = builtin_mesh(spec);
    if (scale != 1.0) {
      for (auto& v : m.vertices) v *= scale;
      m.finalize();
    }
    return m;
  }
  return load_obj(spec, scale);
}

}  // namespace abspose
