#pragma once

#include "semreg/core.hpp"

#include <filesystem>

namespace semreg {

/// Row-major float image, channel fastest, values nominally in [0,1].
/// Pixel (row r, col c) covers [c, c+1) x [r, r+1); its center is (c+0.5, r+0.5).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  float& at(int r, int c, int ch) { return data[(static_cast<std::size_t>(r) * width + c) * channels + ch]; }
  float at(int r, int c, int ch) const { return data[(static_cast<std::size_t>(r) * width + c) * channels + ch]; }

  /// Bilinear sample at continuous pixel coordinates (x right, y down) with
  /// edge clamping. Returns false (and leaves `out` untouched) outside [0,W]x[0,H].
  bool sample(double x, double y, float* out) const;
};

/// Reads an 8- or 16-bit PNG converted to `channels` (1 = gray, 3 = RGB).
Image read_png(const std::filesystem::path& path, int channels = 3);

/// Writes an 8-bit PNG (1 or 3 channels), values clamped to [0,1] and rounded.
void write_png(const std::filesystem::path& path, const Image& image);

} // namespace semreg
