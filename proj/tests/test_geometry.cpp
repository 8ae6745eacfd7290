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

#include <cmath>
#include <vector>

#include "abspose/geometry.hpp"
#include "abspose/random.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace abspose;

using oracle::random_pose;
using oracle::random_unit;

TEST_CASE("exp_so3 closed forms") {
  CHECK(exp_so3(Vec3::Zero()).isApprox(Mat3::Identity()));
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((exp_so3(Vec3(0, 0, M_PI / 2)) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("exp_so3 output is a rotation") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    Pose H;
    H.rotation = exp_so3(random_unit(rng) * 3.1);
    CHECK(is_valid_pose(H, 1e-12));
  }
}

TEST_CASE("log_so3 special cases") {
  CHECK(log_so3(Mat3::Identity()).norm() == 0.0);
  CHECK((log_so3(exp_so3(Vec3(0.3, 0, 0))) - Vec3(0.3, 0, 0)).norm() < 1e-9);

  Mat3 rz_pi;
  rz_pi << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  const Vec3 e = log_so3(rz_pi);
  CHECK(std::abs(e.norm() - M_PI) < 1e-6);
  CHECK(std::abs(std::abs(e.z()) - M_PI) < 1e-6);
  CHECK(std::abs(e.x()) < 1e-9);
  CHECK(std::abs(e.y()) < 1e-9);
}

TEST_CASE("exp/log roundtrip on SO(3)") {
  Rng rng(11);
  std::uniform_real_distribution<double> angle(1e-6, M_PI - 1e-3);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 e = random_unit(rng) * angle(rng);
    CHECK((log_so3(exp_so3(e)) - e).norm() < 1e-9);
  }
  for (int i = 0; i < 200; ++i) {  // unit-norm vectors
    const Vec3 e = random_unit(rng);
    CHECK((log_so3(exp_so3(e)) - e).norm() < 1e-9);
  }
}

TEST_CASE("transform_point") {
  CHECK(transform_point(Pose{}, Vec3(1, 2, 3)) == Vec3(1, 2, 3));
  Pose t;
  t.translation = Vec3(10, 0, 0);
  CHECK(transform_point(t, Vec3::Zero()) == Vec3(10, 0, 0));

  Pose H;
  H.rotation = exp_so3(Vec3(0, 0, M_PI / 2));
  H.translation = Vec3(0, 0, 5);
  CHECK((transform_point(H, Vec3(1, 0, 0)) - Vec3(0, 1, 5)).norm() < 1e-9);
}

TEST_CASE("composition consistency") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng);
    const Vec3 p = 50.0 * random_unit(rng);
    CHECK((transform_point(a * b, p) - transform_point(a, transform_point(b, p))).norm() < 1e-9);
    CHECK((transform_point(a.inverse(), transform_point(a, p)) - p).norm() < 1e-9);
  }
}

TEST_CASE("backproject") {
  const CameraIntrinsics K{500, 520, 320, 240, 640, 480};
  CHECK(backproject(320, 240, 1000, K) == Vec3(0, 0, 1000));
  CHECK((backproject(320 + 500, 240, 500, K) - Vec3(500, 0, 500)).norm() < 1e-12);
  CHECK_THROWS_AS(backproject(10, 10, 0.0, K), InvalidMeasurement);
  CHECK_THROWS_AS(backproject(10, 10, -3.0, K), InvalidMeasurement);
  // projection is the inverse
  const Vec3 p = backproject(17.25, 99.5, 1234.5, K);
  CHECK((project(p, K) - Eigen::Vector2d(17.25, 99.5)).norm() < 1e-9);
}

TEST_CASE("rigid_from_correspondences") {
  SUBCASE("identity") {
    std::vector<Correspondence> c = {{Vec3(0, 0, 0), Vec3(0, 0, 0)},
                                     {Vec3(10, 0, 0), Vec3(10, 0, 0)},
                                     {Vec3(0, 7, 1), Vec3(0, 7, 1)}};
    const Pose H = rigid_from_correspondences(c);
    CHECK((H.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(H.translation.norm() < 1e-12);
  }
  SUBCASE("recovers a known pose") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const Pose truth = random_pose(rng);
      std::vector<Correspondence> c;
      for (int k = 0; k < 4; ++k) {
        const Vec3 o = 60.0 * random_unit(rng);
        c.push_back({o, transform_point(truth, o)});
      }
      const Pose H = rigid_from_correspondences(c);
      CHECK((H.rotation - truth.rotation).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((H.translation - truth.translation).norm() < 1e-6);
    }
  }
  SUBCASE("degenerate inputs") {
    std::vector<Correspondence> collinear = {{Vec3(0, 0, 0), Vec3(1, 1, 1)},
                                             {Vec3(1, 1, 1), Vec3(2, 2, 2)},
                                             {Vec3(2, 2, 2), Vec3(3, 3, 0)}};
    CHECK_THROWS_AS(rigid_from_correspondences(collinear), DegenerateConfiguration);
    std::vector<Correspondence> two = {{Vec3(0, 0, 0), Vec3(0, 0, 0)}, {Vec3(1, 0, 0), Vec3(1, 0, 0)}};
    CHECK_THROWS_AS(rigid_from_correspondences(two), DegenerateConfiguration);
  }
  SUBCASE("mirrored targets never yield a reflection") {
    Rng rng(9);
    std::normal_distribution<double> n;
    Mat3 mirror = Mat3::Identity();
    mirror(0, 0) = -1;
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Correspondence> c;
      for (int k = 0; k < 6; ++k) {
        const Vec3 o = 40.0 * random_unit(rng);
        c.push_back({o, mirror * o + Vec3(n(rng), n(rng), n(rng))});
      }
      const Pose H = rigid_from_correspondences(c);
      CHECK(std::abs(H.rotation.determinant() - 1.0) < 1e-9);
      CHECK(is_valid_pose(H));
    }
  }
}
