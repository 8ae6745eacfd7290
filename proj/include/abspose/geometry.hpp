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
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>

#include "abspose/errors.hpp"

namespace abspose {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vector3<double>;
using Mat3 = Matrix3<double>;

/// Pinhole camera. Pixel centers sit at integer coordinates.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  bool valid() const { return fx > 0.0 && fy > 0.0 && width > 0 && height > 0; }
};

/// Rigid transform from object coordinates to camera coordinates (mm).
template <typename Scalar>
struct PoseT {
  Matrix3<Scalar> rotation = Matrix3<Scalar>::Identity();
  Vector3<Scalar> translation = Vector3<Scalar>::Zero();

  static PoseT Identity() { return {}; }

  PoseT inverse() const {
    PoseT out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
  }

  /// (this ∘ other): applies `other` first.
  PoseT operator*(const PoseT& other) const {
    PoseT out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  template <typename Other>
  PoseT<Other> cast() const {
    PoseT<Other> out;
    out.rotation = rotation.template cast<Other>();
    out.translation = translation.template cast<Other>();
    return out;
  }
};

using Pose = PoseT<double>;

template <typename Scalar>
Matrix3<Scalar> skew(const Vector3<Scalar>& v) {
  Matrix3<Scalar> s;
  // clang-format off
  s << Scalar(0), -v.z(),     v.y(),
       v.z(),     Scalar(0), -v.x(),
      -v.y(),     v.x(),     Scalar(0);
  // clang-format on
  return s;
}

/// Rodrigues formula: rotation matrix of the Euler vector `e` (axis times angle).
template <typename Derived>
Matrix3<typename Derived::Scalar> exp_so3(const Eigen::MatrixBase<Derived>& e) {
  using Scalar = typename Derived::Scalar;
  const Vector3<Scalar> w = e;
  const Scalar theta = w.norm();
  const Matrix3<Scalar> W = skew(w);
  if (theta < Scalar(1e-8)) {
    // second order Taylor expansion, exact to machine precision here
    return Matrix3<Scalar>::Identity() + W + Scalar(0.5) * W * W;
  }
  const Scalar a = std::sin(theta) / theta;
  const Scalar b = (Scalar(1) - std::cos(theta)) / (theta * theta);
  return Matrix3<Scalar>::Identity() + a * W + b * W * W;
}

/// Inverse of exp_so3. Returns the canonical Euler vector with norm in [0, pi].
template <typename Derived>
Vector3<typename Derived::Scalar> log_so3(const Eigen::MatrixBase<Derived>& R) {
  using Scalar = typename Derived::Scalar;
  const Scalar c = std::clamp((R.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  const Vector3<Scalar> v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const Scalar s = Scalar(0.5) * v.norm();  // sin(theta)
  const Scalar theta = std::atan2(s, c);

  if (theta < Scalar(1e-8)) return Scalar(0.5) * v;
  if (c > Scalar(-0.99)) return (theta / (Scalar(2) * s)) * v;

  // Near pi the antisymmetric part vanishes; read the axis from the symmetric part
  // R = I + (1 - cos) n n^T + sin [n]x, so diag gives n_i^2.
  const Matrix3<Scalar> B = (R + R.transpose()) / Scalar(2) - c * Matrix3<Scalar>::Identity();
  Eigen::Index k = 0;
  B.diagonal().maxCoeff(&k);
  Vector3<Scalar> axis = B.col(k) / std::sqrt(std::max(B(k, k), Scalar(0)) * (Scalar(1) - c));
  axis.normalize();
  // Fix the sign with the (small) antisymmetric part when it carries information.
  if (axis.dot(v) < Scalar(0)) axis = -axis;
  return theta * axis;
}

/// Geodesic angle between two rotations, radians.
template <typename Scalar>
Scalar rotation_angle(const Matrix3<Scalar>& a, const Matrix3<Scalar>& b) {
  return log_so3(a * b.transpose()).norm();
}

template <typename Scalar, typename Derived>
Vector3<Scalar> transform_point(const PoseT<Scalar>& H, const Eigen::MatrixBase<Derived>& p) {
  return H.rotation * p + H.translation;
}

/// Camera-space point of pixel (u, v) at depth `depth_mm`.
/// Throws InvalidMeasurement when depth is not positive.
Vec3 backproject(double u, double v, double depth_mm, const CameraIntrinsics& K);

/// Pixel coordinates of a camera-space point (z must be positive).
inline Eigen::Vector2d project(const Vec3& p, const CameraIntrinsics& K) {
  return {K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy};
}

struct Correspondence {
  Vec3 object;
  Vec3 camera;
};

/// Least-squares rigid transform with camera ≈ R * object + T (Kabsch).
/// Throws DegenerateConfiguration for fewer than three pairs or collinear object points.
Pose rigid_from_correspondences(std::span<const Correspondence> pairs);

/// True when the rotation block is orthonormal with det +1 (to `tol`) and T is finite.
bool is_valid_pose(const Pose& H, double tol = 1e-9);

}  // namespace abspose
