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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "abspose/render.hpp"

namespace abspose {

/// PGF1 raster: 16-byte header ("PGF1", u32 width, u32 height, u32 channels)
/// followed by little-endian f32 samples, row-major with channels interleaved.
struct Raster {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 0;
  std::vector<float> data;

  float& at(std::uint32_t row, std::uint32_t col, std::uint32_t ch) {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  float at(std::uint32_t row, std::uint32_t col, std::uint32_t ch) const {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
};

void write_raster(const std::filesystem::path& path, const Raster& r);
/// Throws DataError on a bad magic, truncation or trailing bytes.
Raster read_raster(const std::filesystem::path& path);

/// Packs single-channel images of identical size into one raster.
Raster pack(const std::vector<const ImageD*>& channels);
/// Channel `ch` of a raster as an image (float values widened to double).
ImageD unpack(const Raster& r, std::uint32_t ch);

}  // namespace abspose
