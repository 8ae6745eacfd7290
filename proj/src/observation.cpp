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

#include "abspose/observation.hpp"

#include <sstream>

#include "abspose/keyvalue.hpp"
#include "abspose/raster_io.hpp"

namespace abspose {

void ObservationSet::check() const {
  const auto h = depth.rows();
  const auto w = depth.cols();
  if (h != intrinsics.height || w != intrinsics.width) throw ContractViolation("depth does not match intrinsics");
  if (depth_valid.rows() != h || depth_valid.cols() != w) throw ContractViolation("depth mask size mismatch");
  if (prediction.probability.rows() != h || prediction.probability.cols() != w) {
    throw ContractViolation("probability map size mismatch");
  }
  if (prediction.tree_count() < 1 ||
      prediction.tree_object_coords.size() != prediction.tree_probabilities.size()) {
    throw ContractViolation("tree maps inconsistent");
  }
  for (int t = 0; t < prediction.tree_count(); ++t) {
    if (prediction.tree_probabilities[t].rows() != h || prediction.tree_probabilities[t].cols() != w ||
        prediction.tree_object_coords[t].rows() != h || prediction.tree_object_coords[t].cols() != w) {
      throw ContractViolation("tree map size mismatch");
    }
  }
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      if ((depth_valid(y, x) != 0) != (depth(y, x) > 0.0)) throw ContractViolation("depth_valid disagrees with depth");
    }
  }
}

int argmax_tree(const ForestPrediction& prediction, int x, int y) {
  int best = 0;
  double best_p = prediction.tree_probabilities[0](y, x);
  for (int t = 1; t < prediction.tree_count(); ++t) {
    const double p = prediction.tree_probabilities[t](y, x);
    if (p > best_p) {
      best_p = p;
      best = t;
    }
  }
  return best;
}

ChannelStack assemble_channels(const ObservationSet& obs, const RenderedImages& rend, const Pose& H,
                               double diameter, const Window& w) {
  const int s = w.render_size();
  if (rend.size() != s || rend.depth.cols() != s) throw ContractViolation("rendering does not match window");
  if (obs.depth.rows() != obs.intrinsics.height || obs.depth.cols() != obs.intrinsics.width) {
    throw ContractViolation("observation does not match intrinsics");
  }

  const double tz = H.translation.z();
  const int width = obs.intrinsics.width;
  const int height = obs.intrinsics.height;
  ChannelStack st(s);
  for (int r = 0; r < s; ++r) {
    const int fy = w.y0 + w.source_offset(r);
    for (int c = 0; c < s; ++c) {
      const int fx = w.x0 + w.source_offset(c);
      const bool rendered = rend.mask(r, c) != 0;
      st.at(1, r, c) = rendered ? rend.depth(r, c) - tz : 0.0;
      st.at(2, r, c) = rendered ? 1.0 : -1.0;

      if (fx < 0 || fy < 0 || fx >= width || fy >= height) {
        st.at(0, r, c) = 0.0;
        st.at(3, r, c) = -1.0;
        st.at(4, r, c) = -1.0;
        st.at(5, r, c) = 0.0;
        continue;
      }
      const bool measured = obs.depth_valid(fy, fx) != 0;
      st.at(0, r, c) = measured ? obs.depth(fy, fx) - tz : 0.0;
      st.at(3, r, c) = measured ? 1.0 : -1.0;
      st.at(4, r, c) = 2.0 * obs.prediction.probability(fy, fx) - 1.0;
      if (rendered) {
        const int t = argmax_tree(obs.prediction, fx, fy);
        const Vec3 predicted = obs.prediction.tree_object_coords[t].at(fy, fx);
        st.at(5, r, c) = (rend.object_coords.at(r, c) - predicted).norm() / diameter;
      } else {
        st.at(5, r, c) = 0.0;
      }
    }
  }
  return st;
}

NoiseParams NoiseParams::preset(const std::string& name) {
  NoiseParams p;
  if (name == "default") return p;
  if (name == "zero") {
    p.depth_sigma = 0.0;
    p.coord_sigma = 0.0;
    p.outlier_rate = 0.0;
    p.flip_rate = 0.0;
    p.trees = 1;
    p.dropout_patches = 0;
    p.smoothing = 0;
    return p;
  }
  if (name == "hard") {
    p.depth_sigma = 5.0;
    p.coord_sigma = 20.0;
    p.outlier_rate = 0.5;
    p.flip_rate = 0.2;
    p.dropout_patches = 6;
    return p;
  }
  throw ConfigError("unknown noise preset '" + name + "'");
}

CompositeFrame render_composite(const Scene& scene, const CameraIntrinsics& K) {
  CompositeFrame f;
  f.depth = ImageD::Zero(K.height, K.width);
  f.owner = Image<int>::Constant(K.height, K.width, -1);
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const RenderedImages r = render_full_frame(scene.objects[i].mesh, scene.objects[i].pose, K);
    for (int y = 0; y < K.height; ++y) {
      for (int x = 0; x < K.width; ++x) {
        if (!r.mask(y, x)) continue;
        if (f.owner(y, x) < 0 || r.depth(y, x) < f.depth(y, x)) {
          f.depth(y, x) = r.depth(y, x);
          f.owner(y, x) = static_cast<int>(i);
        }
      }
    }
  }
  return f;
}

namespace {

ImageD box_smooth(const ImageD& in, int radius) {
  if (radius <= 0) return in;
  const int h = static_cast<int>(in.rows());
  const int w = static_cast<int>(in.cols());
  ImageD out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
      const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
      out(y, x) = in.block(y0, x0, y1 - y0 + 1, x1 - x0 + 1).mean();
    }
  }
  return out;
}

}  // namespace

std::pair<ObservationSet, Pose> synthesize_observation(const Scene& scene, const CameraIntrinsics& K,
                                                       const NoiseParams& noise, Rng& rng) {
  if (scene.target < 0 || scene.target >= static_cast<int>(scene.objects.size())) {
    throw ContractViolation("scene target index out of range");
  }
  if (noise.trees < 1) throw ConfigError("noise.trees must be positive");
  const SceneObject& target = scene.objects[scene.target];
  const CompositeFrame comp = render_composite(scene, K);
  const RenderedImages tgt = render_full_frame(target.mesh, target.pose, K);
  const int h = K.height;
  const int w = K.width;

  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  ObservationSet obs;
  obs.intrinsics = K;
  obs.depth = comp.depth;
  if (noise.depth_sigma > 0.0) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (obs.depth(y, x) > 0.0) obs.depth(y, x) = std::max(0.0, obs.depth(y, x) + noise.depth_sigma * unit(rng));
      }
    }
  }
  for (int k = 0; k < noise.dropout_patches; ++k) {
    std::uniform_int_distribution<int> side(2, std::max(2, noise.dropout_max_size));
    const int pw = side(rng), ph = side(rng);
    const int px = std::uniform_int_distribution<int>(0, std::max(0, w - pw))(rng);
    const int py = std::uniform_int_distribution<int>(0, std::max(0, h - ph))(rng);
    obs.depth.block(py, px, std::min(ph, h - py), std::min(pw, w - px)).setZero();
  }
  obs.depth_valid = (obs.depth > 0.0).cast<std::uint8_t>();

  ImageD visible = ImageD::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) visible(y, x) = comp.owner(y, x) == scene.target ? 1.0 : 0.0;
  }
  const ImageD smooth = box_smooth(visible, noise.smoothing);
  const Vec3 lo = target.mesh.bbox_min();
  const Vec3 extent = target.mesh.bbox_max() - lo;

  ForestPrediction& pred = obs.prediction;
  pred.probability = ImageD::Zero(h, w);
  for (int t = 0; t < noise.trees; ++t) {
    ImageD prob = smooth;
    CoordImage coords(h, w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (noise.flip_rate > 0.0 && uniform(rng) < noise.flip_rate) prob(y, x) = 0.0;
        const bool inlier = visible(y, x) > 0.0 && !(noise.outlier_rate > 0.0 && uniform(rng) < noise.outlier_rate);
        Vec3 c;
        if (inlier) {
          c = tgt.object_coords.at(y, x);
          if (noise.coord_sigma > 0.0) c += noise.coord_sigma * Vec3(unit(rng), unit(rng), unit(rng));
        } else {
          c = lo + Vec3(uniform(rng), uniform(rng), uniform(rng)).cwiseProduct(extent);
        }
        coords.set(y, x, c);
      }
    }
    pred.probability += prob;
    pred.tree_probabilities.push_back(std::move(prob));
    pred.tree_object_coords.push_back(std::move(coords));
  }
  pred.probability /= static_cast<double>(noise.trees);
  return {std::move(obs), target.pose};
}

namespace {

std::string pose_text(const Pose& H) {
  std::ostringstream os;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) os << format_exact(H.rotation(r, c)) << ' ';
  }
  os << format_exact(H.translation.x()) << ' ' << format_exact(H.translation.y()) << ' '
     << format_exact(H.translation.z());
  return os.str();
}

Pose parse_pose(const std::string& s) {
  std::istringstream is(s);
  Pose H;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) is >> H.rotation(r, c);
  }
  is >> H.translation.x() >> H.translation.y() >> H.translation.z();
  if (!is) throw DataError("gt_pose needs 12 numbers");
  return H;
}

}  // namespace

void save_observation(const std::filesystem::path& dir, const ObservationRecord& rec) {
  const ObservationSet& obs = rec.obs;
  std::filesystem::create_directories(dir);

  const ImageD valid = obs.depth_valid.cast<double>();
  write_raster(dir / "depth.pgf", pack({&obs.depth}));
  write_raster(dir / "depth_valid.pgf", pack({&valid}));
  write_raster(dir / "probability.pgf", pack({&obs.prediction.probability}));
  std::vector<const ImageD*> probs;
  std::vector<const ImageD*> coords;
  for (int t = 0; t < obs.prediction.tree_count(); ++t) {
    probs.push_back(&obs.prediction.tree_probabilities[t]);
    const CoordImage& c = obs.prediction.tree_object_coords[t];
    coords.insert(coords.end(), {&c.x, &c.y, &c.z});
  }
  write_raster(dir / "tree_probabilities.pgf", pack(probs));
  write_raster(dir / "tree_coords.pgf", pack(coords));

  const CameraIntrinsics& K = obs.intrinsics;
  const NoiseParams& n = rec.noise;
  KeyValues kv{
      {"format", "abspose-observation-1"},
      {"scene_id", rec.scene_id},
      {"files", "depth.pgf depth_valid.pgf probability.pgf tree_probabilities.pgf tree_coords.pgf"},
      {"width", std::to_string(K.width)},
      {"height", std::to_string(K.height)},
      {"fx", format_exact(K.fx)},
      {"fy", format_exact(K.fy)},
      {"cx", format_exact(K.cx)},
      {"cy", format_exact(K.cy)},
      {"trees", std::to_string(obs.prediction.tree_count())},
      {"gt_pose", pose_text(rec.gt)},
      {"mesh", rec.mesh_path},
      {"mesh_scale", format_exact(rec.mesh_scale)},
      {"seed", std::to_string(rec.seed)},
      {"occlusion", format_exact(rec.occlusion)},
      {"noise.depth_sigma", format_exact(n.depth_sigma)},
      {"noise.coord_sigma", format_exact(n.coord_sigma)},
      {"noise.outlier_rate", format_exact(n.outlier_rate)},
      {"noise.flip_rate", format_exact(n.flip_rate)},
      {"noise.trees", std::to_string(n.trees)},
      {"noise.dropout_patches", std::to_string(n.dropout_patches)},
      {"noise.dropout_max_size", std::to_string(n.dropout_max_size)},
      {"noise.smoothing", std::to_string(n.smoothing)},
  };
  write_key_values(dir / "manifest.txt", kv);
}

ObservationRecord load_observation(const std::filesystem::path& dir) {
  KeyValues kv;
  try {
    kv = read_key_values(dir / "manifest.txt");
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  try {
    ObservationRecord rec;
    if (require(kv, "format") != "abspose-observation-1") throw DataError("unknown observation format");
    rec.scene_id = require(kv, "scene_id");
    CameraIntrinsics& K = rec.obs.intrinsics;
    K.width = static_cast<int>(get_int(kv, "width"));
    K.height = static_cast<int>(get_int(kv, "height"));
    K.fx = get_double(kv, "fx");
    K.fy = get_double(kv, "fy");
    K.cx = get_double(kv, "cx");
    K.cy = get_double(kv, "cy");
    if (!K.valid()) throw DataError("invalid intrinsics in " + dir.string());
    const int trees = static_cast<int>(get_int(kv, "trees"));
    rec.gt = parse_pose(require(kv, "gt_pose"));
    rec.mesh_path = require(kv, "mesh");
    rec.mesh_scale = get_double(kv, "mesh_scale", 1.0);
    rec.seed = get_uint64(kv, "seed", 0);
    rec.occlusion = get_double(kv, "occlusion", 0.0);
    NoiseParams& n = rec.noise;
    n.depth_sigma = get_double(kv, "noise.depth_sigma", n.depth_sigma);
    n.coord_sigma = get_double(kv, "noise.coord_sigma", n.coord_sigma);
    n.outlier_rate = get_double(kv, "noise.outlier_rate", n.outlier_rate);
    n.flip_rate = get_double(kv, "noise.flip_rate", n.flip_rate);
    n.trees = static_cast<int>(get_int(kv, "noise.trees", n.trees));
    n.dropout_patches = static_cast<int>(get_int(kv, "noise.dropout_patches", n.dropout_patches));
    n.dropout_max_size = static_cast<int>(get_int(kv, "noise.dropout_max_size", n.dropout_max_size));
    n.smoothing = static_cast<int>(get_int(kv, "noise.smoothing", n.smoothing));

    const auto expect = [&](const Raster& r, std::uint32_t channels, const char* what) {
      if (r.width != static_cast<std::uint32_t>(K.width) || r.height != static_cast<std::uint32_t>(K.height) ||
          r.channels != channels) {
        throw DataError(std::string("raster shape mismatch: ") + what);
      }
    };
    ObservationSet& obs = rec.obs;
    const Raster depth = read_raster(dir / "depth.pgf");
    expect(depth, 1, "depth");
    obs.depth = unpack(depth, 0);
    const Raster valid = read_raster(dir / "depth_valid.pgf");
    expect(valid, 1, "depth_valid");
    obs.depth_valid = (unpack(valid, 0) > 0.5).cast<std::uint8_t>();
    const Raster prob = read_raster(dir / "probability.pgf");
    expect(prob, 1, "probability");
    obs.prediction.probability = unpack(prob, 0);
    const Raster tp = read_raster(dir / "tree_probabilities.pgf");
    expect(tp, static_cast<std::uint32_t>(trees), "tree_probabilities");
    const Raster tc = read_raster(dir / "tree_coords.pgf");
    expect(tc, static_cast<std::uint32_t>(3 * trees), "tree_coords");
    for (int t = 0; t < trees; ++t) {
      obs.prediction.tree_probabilities.push_back(unpack(tp, t));
      CoordImage c;
      c.x = unpack(tc, 3 * t);
      c.y = unpack(tc, 3 * t + 1);
      c.z = unpack(tc, 3 * t + 2);
      obs.prediction.tree_object_coords.push_back(std::move(c));
    }
    obs.check();
    return rec;
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  } catch (const ContractViolation& e) {
    throw DataError(e.what());
  }
}

}  // namespace abspose
