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

#include "abspose/raster_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace abspose {

static_assert(std::endian::native == std::endian::little, "raster I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'P', 'G', 'F', '1'};

}  // namespace

void write_raster(const std::filesystem::path& path, const Raster& r) {
  if (r.data.size() != static_cast<std::size_t>(r.width) * r.height * r.channels) {
    throw ContractViolation("raster payload does not match its header");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write raster " + path.string());
  out.write(kMagic, 4);
  const std::uint32_t dims[3] = {r.width, r.height, r.channels};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(r.data.data()),
            static_cast<std::streamsize>(r.data.size() * sizeof(float)));
  if (!out) throw DataError("short write on raster " + path.string());
}

Raster read_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open raster " + path.string());
  char magic[4];
  std::uint32_t dims[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DataError("bad raster header in " + path.string());

  Raster r{dims[0], dims[1], dims[2], {}};
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height * r.channels;
  r.data.resize(n);
  in.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) throw DataError("truncated raster " + path.string());
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in raster " + path.string());
  return r;
}

Raster pack(const std::vector<const ImageD*>& channels) {
  if (channels.empty()) throw ContractViolation("pack: no channels");
  Raster r;
  r.height = static_cast<std::uint32_t>(channels.front()->rows());
  r.width = static_cast<std::uint32_t>(channels.front()->cols());
  r.channels = static_cast<std::uint32_t>(channels.size());
  r.data.resize(static_cast<std::size_t>(r.width) * r.height * r.channels);
  for (std::uint32_t c = 0; c < r.channels; ++c) {
    const ImageD& img = *channels[c];
    if (img.rows() != r.height || img.cols() != r.width) throw ContractViolation("pack: size mismatch");
    for (std::uint32_t y = 0; y < r.height; ++y) {
      for (std::uint32_t x = 0; x < r.width; ++x) r.at(y, x, c) = static_cast<float>(img(y, x));
    }
  }
  return r;
}

ImageD unpack(const Raster& r, std::uint32_t ch) {
  if (ch >= r.channels) throw DataError("raster channel out of range");
  ImageD img(r.height, r.width);
  for (std::uint32_t y = 0; y < r.height; ++y) {
    for (std::uint32_t x = 0; x < r.width; ++x) img(y, x) = r.at(y, x, ch);
  }
  return img;
}

}  // namespace abspose
