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

#include "abspose/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace abspose {

Vec3 backproject(double u, double v, double depth_mm, const CameraIntrinsics& K) {
  if (!(depth_mm > 0.0)) throw InvalidMeasurement("backproject: depth must be positive");
  return {(u - K.cx) * depth_mm / K.fx, (v - K.cy) * depth_mm / K.fy, depth_mm};
}

Pose rigid_from_correspondences(std::span<const Correspondence> pairs) {
  if (pairs.size() < 3) throw DegenerateConfiguration("need at least three correspondences");

  const double n = static_cast<double>(pairs.size());
  Vec3 obj_mean = Vec3::Zero();
  Vec3 cam_mean = Vec3::Zero();
  for (const auto& c : pairs) {
    obj_mean += c.object;
    cam_mean += c.camera;
  }
  obj_mean /= n;
  cam_mean /= n;

  Mat3 cross = Mat3::Zero();
  Mat3 obj_scatter = Mat3::Zero();
  for (const auto& c : pairs) {
    const Vec3 po = c.object - obj_mean;
    cross += (c.camera - cam_mean) * po.transpose();
    obj_scatter += po * po.transpose();
  }

  // Collinear (or coincident) object points leave the rotation about their line free.
  const Eigen::SelfAdjointEigenSolver<Mat3> spread(obj_scatter, Eigen::EigenvaluesOnly);
  const Vec3 ev = spread.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw DegenerateConfiguration("object points are collinear");
  }

  const Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 D = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) D(2, 2) = -1.0;

  Pose H;
  H.rotation = svd.matrixU() * D * svd.matrixV().transpose();
  H.translation = cam_mean - H.rotation * obj_mean;
  return H;
}

bool is_valid_pose(const Pose& H, double tol) {
  const Mat3 gram = H.rotation.transpose() * H.rotation;
  if (((gram - Mat3::Identity()).array().abs() > tol).any()) return false;
  if (std::abs(H.rotation.determinant() - 1.0) > tol) return false;
  return H.translation.allFinite();
}

}  // namespace abspose
