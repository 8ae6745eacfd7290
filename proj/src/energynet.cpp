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

#include "abspose/energynet.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace abspose {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// 3x3 patches with zero padding: (C*9) x (h*w), row index c*9 + ky*3 + kx.
RowMat im2col(const RowMat& x, int h, int w) {
  const int channels = static_cast<int>(x.rows());
  RowMat col(channels * 9, h * w);
  for (int c = 0; c < channels; ++c) {
    const double* src = x.row(c).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = col.row(c * 9 + ky * 3 + kx).data();
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          double* row = dst + y * w;
          if (sy < 0 || sy >= h) {
            std::fill(row, row + w, 0.0);
            continue;
          }
          for (int x0 = 0; x0 < w; ++x0) {
            const int sx = x0 + kx - 1;
            row[x0] = (sx < 0 || sx >= w) ? 0.0 : src[sy * w + sx];
          }
        }
      }
    }
  }
  return col;
}

// Adjoint of im2col.
RowMat col2im(const RowMat& dcol, int channels, int h, int w) {
  RowMat dx = RowMat::Zero(channels, h * w);
  for (int c = 0; c < channels; ++c) {
    double* dst = dx.row(c).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = dcol.row(c * 9 + ky * 3 + kx).data();
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int x0 = 0; x0 < w; ++x0) {
            const int sx = x0 + kx - 1;
            if (sx >= 0 && sx < w) dst[sy * w + sx] += src[y * w + x0];
          }
        }
      }
    }
  }
  return dx;
}

// 2x2 max pooling, stride 2; a trailing odd row/column is dropped.
// `arg` receives the source pixel index of every pooled cell (first maximum in row-major order).
}  // namespace

namespace detail {

PoolMatrix maxpool2(const RowMat& a, int h, int w, std::vector<int>& arg) {
  const int ph = h / 2;
  const int pw = w / 2;
  const int channels = static_cast<int>(a.rows());
  RowMat p(channels, ph * pw);
  arg.resize(static_cast<std::size_t>(channels) * ph * pw);
  for (int c = 0; c < channels; ++c) {
    const double* src = a.row(c).data();
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) {
        int best = (2 * y) * w + 2 * x;
        for (const int cand : {best + 1, best + w, best + w + 1}) {
          if (src[cand] > src[best]) best = cand;
        }
        p(c, y * pw + x) = src[best];
        arg[static_cast<std::size_t>(c) * ph * pw + y * pw + x] = best;
      }
    }
  }
  return p;
}

PoolMatrix unpool(const RowMat& dp, const std::vector<int>& arg, int h, int w) {
  RowMat da = RowMat::Zero(dp.rows(), h * w);
  const auto cells = dp.cols();
  for (Eigen::Index c = 0; c < dp.rows(); ++c) {
    for (Eigen::Index k = 0; k < cells; ++k) da(c, arg[c * cells + k]) += dp(c, k);
  }
  return da;
}

}  // namespace detail

using detail::maxpool2;
using detail::unpool;

struct EnergyNet::Trace {
  std::array<RowMat, 4> col;   // conv inputs as patches
  std::array<RowMat, 4> act;   // tanh outputs
  std::array<std::vector<int>, 2> pool_arg;  // after C2 and C3
  std::array<int, 4> h{};
  std::array<int, 4> w{};
  std::vector<int> global_arg;
  Eigen::VectorXd g, h1, h2;
};

EnergyNet::EnergyNet(const EnergyNetParams& params) { params_.flat() = params.flat().cast<double>(); }

double EnergyNet::run(const ChannelStack& s, Trace* tr) const {
  if (s.size < kMinStack || s.size > kMaxStack) throw ContractViolation("stack size outside [16, 100]");
  if (s.data.rows() != kChannels || s.data.cols() != static_cast<Eigen::Index>(s.size) * s.size) {
    throw ContractViolation("stack shape mismatch");
  }

  RowMat x = s.data;
  int h = s.size;
  int w = s.size;
  for (int layer = 0; layer < 4; ++layer) {
    RowMat col = im2col(x, h, w);
    RowMat a = params_.weights(layer) * col;
    a.colwise() += params_.bias(layer);
    a = a.array().tanh();

    RowMat next;
    if (layer == 1 || layer == 2) {
      std::vector<int> arg;
      next = maxpool2(a, h, w, arg);
      if (tr) tr->pool_arg[layer - 1] = std::move(arg);
    }
    if (tr) {
      tr->col[layer] = std::move(col);
      tr->h[layer] = h;
      tr->w[layer] = w;
    }
    if (layer == 1 || layer == 2) {
      if (tr) tr->act[layer] = std::move(a);
      x = std::move(next);
      h /= 2;
      w /= 2;
    } else if (layer == 3) {
      // global max over the remaining spatial extent
      Eigen::VectorXd g(a.rows());
      std::vector<int> arg(a.rows());
      for (Eigen::Index c = 0; c < a.rows(); ++c) {
        Eigen::Index k = 0;
        g(c) = a.row(c).maxCoeff(&k);
        arg[c] = static_cast<int>(k);
      }
      if (tr) {
        tr->act[layer] = std::move(a);
        tr->global_arg = std::move(arg);
      }
      x = g;
    } else {
      x = a;
      if (tr) tr->act[layer] = std::move(a);
    }
  }

  const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  const Eigen::VectorXd h1 = (params_.weights(4) * g + params_.bias(4)).array().tanh();
  const Eigen::VectorXd h2 = (params_.weights(5) * h1 + params_.bias(5)).array().tanh();
  const double energy = params_.weights(6).row(0).dot(h2) + params_.bias(6)(0);
  if (tr) {
    tr->g = g;
    tr->h1 = h1;
    tr->h2 = h2;
  }
  return energy;
}

double EnergyNet::forward(const ChannelStack& s) const { return run(s, nullptr); }

double EnergyNet::backward(const ChannelStack& s, ParamGradient& grad) const {
  Trace tr;
  const double energy = run(s, &tr);
  grad.flat().setZero();

  // output unit
  grad.weights(6).row(0) = tr.h2.transpose();
  grad.bias(6)(0) = 1.0;
  Eigen::VectorXd dz = params_.weights(6).row(0).transpose().cwiseProduct((1.0 - tr.h2.array().square()).matrix());

  // fully connected layers
  grad.weights(5) = dz * tr.h1.transpose();
  grad.bias(5) = dz;
  dz = (params_.weights(5).transpose() * dz).cwiseProduct((1.0 - tr.h1.array().square()).matrix());
  grad.weights(4) = dz * tr.g.transpose();
  grad.bias(4) = dz;
  const Eigen::VectorXd dg = params_.weights(4).transpose() * dz;

  // global max routes to one pixel per channel
  RowMat da = RowMat::Zero(tr.act[3].rows(), tr.act[3].cols());
  for (Eigen::Index c = 0; c < da.rows(); ++c) da(c, tr.global_arg[c]) = dg(c);

  for (int layer = 3; layer >= 0; --layer) {
    const RowMat dzc = da.array() * (1.0 - tr.act[layer].array().square());
    grad.weights(layer) = dzc * tr.col[layer].transpose();
    grad.bias(layer) = dzc.rowwise().sum();
    if (layer == 0) break;

    const RowMat dcol = params_.weights(layer).transpose() * dzc;
    const int in_ch = kArchitecture[layer].in;
    RowMat dx = col2im(dcol, in_ch, tr.h[layer], tr.w[layer]);
    // dx is the gradient at the input of `layer`; undo the pooling that produced it
    const int below = layer - 1;
    if (below == 1 || below == 2) {
      da = unpool(dx, tr.pool_arg[below - 1], tr.h[below], tr.w[below]);
    } else {
      da = std::move(dx);
    }
  }
  return energy;
}

double forward(const EnergyNetParams& params, const ChannelStack& s) { return EnergyNet(params).forward(s); }

std::pair<double, ParamGradient> backward(const EnergyNetParams& params, const ChannelStack& s) {
  ParamGradient g;
  const double e = EnergyNet(params).backward(s, g);
  return {e, std::move(g)};
}

EnergyNetParams init_params(Rng& rng, double output_scale) {
  EnergyNetParams p;
  for (int layer = 0; layer < kLayers; ++layer) {
    const double a = 1.0 / std::sqrt(static_cast<double>(kArchitecture[layer].fan_in()));
    std::uniform_real_distribution<double> dist(-a, a);
    const double scale = kArchitecture[layer].kind == LayerKind::Output ? output_scale : 1.0;
    auto W = p.weights(layer);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = static_cast<float>(scale * dist(rng));
    }
    p.bias(layer).setZero();
  }
  return p;
}

namespace {

constexpr char kMagic[4] = {'E', 'N', 'E', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "weight files assume a little-endian host");

template <typename T>
void put(std::string& buf, const T& v) {
  buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > buf_.size()) throw CorruptModel("weight file truncated");
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& buf_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::string& buf, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(n)));
}

}  // namespace

void save_params(const EnergyNetParams& params, const std::filesystem::path& path) {
  std::string buf(kMagic, 4);
  put(buf, kFormatVersion);
  put(buf, static_cast<std::uint32_t>(kLayers));
  for (int layer = 0; layer < kLayers; ++layer) {
    const LayerShape& l = kArchitecture[layer];
    put(buf, static_cast<std::uint32_t>(l.kind));
    for (int d : {l.out, l.in, l.kernel, l.kernel}) put(buf, static_cast<std::uint32_t>(d));
    const float* w = params.flat().data() + EnergyNetParams::weight_offset(layer);
    buf.append(reinterpret_cast<const char*>(w), sizeof(float) * static_cast<std::size_t>(l.weight_count() + l.out));
  }
  put(buf, crc_of(buf, buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorruptModel("cannot write weight file " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw CorruptModel("short write on " + path.string());
}

EnergyNetParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptModel("cannot open weight file " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) throw CorruptModel("bad weight file magic");
  Reader rd(buf);
  rd.get<std::uint32_t>();  // magic
  if (rd.get<std::uint32_t>() != kFormatVersion) throw CorruptModel("unsupported weight file version");
  if (rd.get<std::uint32_t>() != static_cast<std::uint32_t>(kLayers)) throw CorruptModel("layer count mismatch");

  EnergyNetParams params;
  for (int layer = 0; layer < kLayers; ++layer) {
    const LayerShape& l = kArchitecture[layer];
    if (rd.get<std::uint32_t>() != static_cast<std::uint32_t>(l.kind)) throw CorruptModel("layer kind mismatch");
    for (int d : {l.out, l.in, l.kernel, l.kernel}) {
      if (rd.get<std::uint32_t>() != static_cast<std::uint32_t>(d)) throw CorruptModel("layer shape mismatch");
    }
    float* dst = params.flat().data() + EnergyNetParams::weight_offset(layer);
    for (int i = 0; i < l.weight_count() + l.out; ++i) dst[i] = rd.get<float>();
  }
  const std::size_t body = rd.pos();
  if (rd.get<std::uint32_t>() != crc_of(buf, body)) throw CorruptModel("weight file checksum mismatch");
  if (rd.pos() != buf.size()) throw CorruptModel("trailing bytes in weight file");
  if (!params.flat().allFinite()) throw CorruptModel("non-finite weights");
  return params;
}

}  // namespace abspose
