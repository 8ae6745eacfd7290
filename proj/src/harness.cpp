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

#include "abspose/harness.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "abspose/keyvalue.hpp"

namespace abspose {

PoseEvaluation evaluate_pose(const Pose& est, const Pose& gt, const TriangleMesh& mesh) {
  PoseEvaluation ev;
  const Mat3 dr = est.rotation - gt.rotation;
  const Vec3 dt = est.translation - gt.translation;
  long double sum = 0.0L;  // keeps the mean of equal distances exact
  for (const auto& v : mesh.vertices) sum += (dr * v + dt).norm();
  ev.avg_vertex_distance = static_cast<double>(sum / static_cast<long double>(mesh.vertices.size()));
  ev.threshold = 0.1 * mesh.diameter;
  ev.correct = ev.avg_vertex_distance < ev.threshold;
  return ev;
}

double occlusion_fraction(const Scene& scene, const CameraIntrinsics& K) {
  const SceneObject& target = scene.objects.at(static_cast<std::size_t>(scene.target));
  const RenderedImages alone = render_full_frame(target.mesh, target.pose, K);
  const long unoccluded = alone.mask.cast<long>().sum();
  if (unoccluded == 0) throw UndefinedOcclusion("target covers no pixel");
  const CompositeFrame comp = render_composite(scene, K);
  const long visible = (comp.owner == scene.target).cast<long>().sum();
  return 1.0 - static_cast<double>(visible) / static_cast<double>(unoccluded);
}

std::array<OcclusionBin, kOcclusionBins> bin_by_occlusion(std::span<const std::pair<double, bool>> results) {
  std::array<OcclusionBin, kOcclusionBins> bins;
  for (int i = 0; i < kOcclusionBins; ++i) {
    bins[i].lo = i / 10.0;
    bins[i].hi = (i + 1) / 10.0;
  }
  for (const auto& [fraction, correct] : results) {
    const int idx = std::clamp(static_cast<int>(std::floor(fraction * kOcclusionBins)), 0, kOcclusionBins - 1);
    ++bins[idx].total;
    if (correct) ++bins[idx].correct;
  }
  return bins;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "scene_id,occlusion,energy,correct,avg_vertex_distance_mm,"
         "r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz,object\n";
  for (const auto& r : rows) {
    out << r.scene_id << ',' << format_exact(r.occlusion) << ',' << format_exact(r.energy) << ','
        << (r.correct ? 1 : 0) << ',' << format_exact(r.avg_vertex_distance);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) out << ',' << format_exact(r.pose.rotation(i, j));
    }
    for (int i = 0; i < 3; ++i) out << ',' << format_exact(r.pose.translation(i));
    out << ',' << r.object << '\n';
  }
}

std::vector<ResultRow> infer_dataset(std::span<const DatasetEntry> entries, const EnergyNetParams& params,
                                     const InferConfig& cfg, std::uint64_t seed) {
  const EnergyNet net(params);
  std::vector<ResultRow> rows;
  rows.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const TrainingSample& s = entries[i].sample;
    ResultRow row;
    row.scene_id = s.id;
    row.object = s.mesh->name;
    row.occlusion = entries[i].occlusion;
    Rng rng = make_stream(seed, "infer", i);
    const GibbsPosterior post(s.observation, *s.mesh, net);
    try {
      const Hypothesis h = estimate(s.observation, *s.mesh, [&](const Pose& H) { return post.energy(H); }, cfg, rng);
      row.pose = h.pose;
      row.energy = h.energy;
    } catch (const NoEvidence&) {
      row.energy = std::numeric_limits<double>::infinity();
    } catch (const HypothesisFailure&) {
      row.energy = std::numeric_limits<double>::infinity();
    }
    const PoseEvaluation ev = evaluate_pose(row.pose, s.gt_pose, *s.mesh);
    row.correct = std::isfinite(row.energy) && ev.correct;
    row.avg_vertex_distance = ev.avg_vertex_distance;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  if (!std::getline(in, line) || line.rfind("scene_id,", 0) != 0) throw DataError("results.csv: missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 18) throw DataError("results.csv: expected 18 columns, got " + std::to_string(f.size()));
    try {
      ResultRow r;
      r.scene_id = f[0];
      r.occlusion = std::stod(f[1]);
      r.energy = std::stod(f[2]);
      r.correct = f[3] == "1";
      r.avg_vertex_distance = std::stod(f[4]);
      for (int i = 0; i < 9; ++i) r.pose.rotation(i / 3, i % 3) = std::stod(f[5 + i]);
      for (int i = 0; i < 3; ++i) r.pose.translation(i) = std::stod(f[14 + i]);
      r.object = f[17];
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DataError("results.csv: unparsable row: " + line);
    }
  }
  return rows;
}

void write_report_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "section,key,total,correct,accuracy\n";
  std::map<std::string, std::pair<int, int>> per_object;
  for (const auto& r : rows) {
    auto& [n, c] = per_object[r.object];
    ++n;
    c += r.correct ? 1 : 0;
  }
  int n_all = 0, c_all = 0;
  for (const auto& [name, nc] : per_object) {
    out << "object," << name << ',' << nc.first << ',' << nc.second << ','
        << format_exact(static_cast<double>(nc.second) / nc.first) << '\n';
    n_all += nc.first;
    c_all += nc.second;
  }
  if (n_all > 0) {
    out << "overall,all," << n_all << ',' << c_all << ',' << format_exact(static_cast<double>(c_all) / n_all) << '\n';
  }

  std::vector<std::pair<double, bool>> occl;
  for (const auto& r : rows) occl.emplace_back(r.occlusion, r.correct);
  for (const auto& b : bin_by_occlusion(occl)) {
    if (b.total == 0) continue;
    out << "occlusion," << format_exact(b.lo) << '-' << format_exact(b.hi) << ',' << b.total << ',' << b.correct << ','
        << format_exact(*b.accuracy()) << '\n';
  }
}

}  // namespace abspose
