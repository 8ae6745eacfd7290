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
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "abspose/observation.hpp"
#include "abspose/random.hpp"

namespace abspose {

enum class LayerKind : std::uint32_t { Conv = 1, Dense = 2, Output = 3 };

struct LayerShape {
  LayerKind kind;
  int out;
  int in;
  int kernel;  // 3 for convolutions, 1 otherwise

  int weight_count() const { return out * in * kernel * kernel; }
  int fan_in() const { return in * kernel * kernel; }
};

/// C1 128x3x3x6, C2 128x3x3x128 (+pool), C3 = C2 (+pool), C4 256x3x3x128
/// (+global max), FC 256, FC 256, linear output.
inline constexpr std::array<LayerShape, 7> kArchitecture = {{
    {LayerKind::Conv, 128, kChannels, 3},
    {LayerKind::Conv, 128, 128, 3},
    {LayerKind::Conv, 128, 128, 3},
    {LayerKind::Conv, 256, 128, 3},
    {LayerKind::Dense, 256, 256, 1},
    {LayerKind::Dense, 256, 256, 1},
    {LayerKind::Output, 1, 256, 1},
}};
inline constexpr int kLayers = static_cast<int>(kArchitecture.size());

/// All weights and biases of the network in one flat vector, layer by layer
/// (weights row-major [out][in][ky][kx], then biases). Layer accessors are views.
template <typename Scalar>
class NetTensors {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  NetTensors() : flat_(Vector::Zero(total_size())) {}

  static constexpr Eigen::Index total_size() {
    Eigen::Index n = 0;
    for (const auto& l : kArchitecture) n += l.weight_count() + l.out;
    return n;
  }
  static constexpr Eigen::Index weight_offset(int layer) {
    Eigen::Index n = 0;
    for (int i = 0; i < layer; ++i) n += kArchitecture[i].weight_count() + kArchitecture[i].out;
    return n;
  }
  static constexpr Eigen::Index bias_offset(int layer) {
    return weight_offset(layer) + kArchitecture[layer].weight_count();
  }

  /// Weights of `layer` as out x fan_in.
  Eigen::Map<RowMatrix> weights(int layer) {
    const auto& l = kArchitecture[layer];
    return {flat_.data() + weight_offset(layer), l.out, l.fan_in()};
  }
  Eigen::Map<const RowMatrix> weights(int layer) const {
    const auto& l = kArchitecture[layer];
    return {flat_.data() + weight_offset(layer), l.out, l.fan_in()};
  }
  Eigen::Map<Vector> bias(int layer) { return {flat_.data() + bias_offset(layer), kArchitecture[layer].out}; }
  Eigen::Map<const Vector> bias(int layer) const {
    return {flat_.data() + bias_offset(layer), kArchitecture[layer].out};
  }

  Vector& flat() { return flat_; }
  const Vector& flat() const { return flat_; }

 private:
  Vector flat_;
};

/// Network parameters theta; single precision storage.
using EnergyNetParams = NetTensors<float>;
/// d(energy)/d(theta), accumulated in double precision.
using ParamGradient = NetTensors<double>;

/// Smallest and largest admissible stack side length.
inline constexpr int kMinStack = 16;
inline constexpr int kMaxStack = 100;

/// Evaluator bound to one parameter snapshot. Weights are widened to double once;
/// forward/backward are const and may run concurrently.
class EnergyNet {
 public:
  explicit EnergyNet(const EnergyNetParams& params);
  /// Double-precision parameters, used for finite-difference checks.
  explicit EnergyNet(ParamGradient params) : params_(std::move(params)) {}

  double forward(const ChannelStack& s) const;
  /// Energy and its gradient with respect to every parameter.
  double backward(const ChannelStack& s, ParamGradient& grad) const;

 private:
  struct Trace;
  double run(const ChannelStack& s, Trace* trace) const;

  ParamGradient params_;
};

double forward(const EnergyNetParams& params, const ChannelStack& s);
std::pair<double, ParamGradient> backward(const EnergyNetParams& params, const ChannelStack& s);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, output weights x1000.
EnergyNetParams init_params(Rng& rng, double output_scale = 1000.0);

/// ENET weight file. Throws CorruptModel on bad magic, shape, truncation or CRC.
namespace detail {

using PoolMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 2x2 stride-2 max pooling of each row of `a` (one h*w channel per row). Odd trailing
/// rows/columns are dropped; ties go to the first cell in row-major order.
PoolMatrix maxpool2(const PoolMatrix& a, int h, int w, std::vector<int>& arg);
PoolMatrix unpool(const PoolMatrix& dp, const std::vector<int>& arg, int h, int w);

}  // namespace detail

void save_params(const EnergyNetParams& params, const std::filesystem::path& path);
EnergyNetParams load_params(const std::filesystem::path& path);

}  // namespace abspose
