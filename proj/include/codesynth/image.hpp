// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace codesynth {

using Rgb = std::array<std::uint8_t, 3>;

/// Decoded 8-bit RGBA raster, row-major, top row first.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;

  Image() = default;
  Image(int w, int h, Rgb fill = {255, 255, 255});

  Rgb rgb_at(int x, int y) const noexcept {
    const auto* p = &rgba[(static_cast<std::size_t>(y) * width + x) * 4];
    return {p[0], p[1], p[2]};
  }
  void set_rgb(int x, int y, Rgb c) noexcept {
    auto* p = &rgba[(static_cast<std::size_t>(y) * width + x) * 4];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
    p[3] = 255;
  }
};

/// Reads any PNG libpng understands, converted to RGBA8.
/// Throws Error(kUndecodableImage) on failure.
Image read_png(const std::filesystem::path& path);

/// Decodes PNG bytes already in memory.
Image decode_png(std::span<const std::uint8_t> bytes);

/// Writes RGBA8 PNG. Output bytes are a pure function of the pixels.
void write_png(const std::filesystem::path& path, const Image& image);

/// Squared Euclidean distance in RGB space.
inline int rgb_distance_sq(Rgb a, Rgb b) noexcept {
  const int dr = int(a[0]) - int(b[0]);
  const int dg = int(a[1]) - int(b[1]);
  const int db = int(a[2]) - int(b[2]);
  return dr * dr + dg * dg + db * db;
}

}  // namespace codesynth
