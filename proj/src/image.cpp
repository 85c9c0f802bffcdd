#include "semreg/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

namespace semreg {

bool Image::sample(double x, double y, float* out) const {
  if (!(x >= 0.0 && y >= 0.0 && x <= width && y <= height)) return false;
  const double fx = std::clamp(x - 0.5, 0.0, width - 1.0);
  const double fy = std::clamp(y - 0.5, 0.0, height - 1.0);
  const int c0 = std::min(static_cast<int>(fx), width - 1);
  const int r0 = std::min(static_cast<int>(fy), height - 1);
  const int c1 = std::min(c0 + 1, width - 1);
  const int r1 = std::min(r0 + 1, height - 1);
  const double ax = fx - c0, ay = fy - r0;
  for (int ch = 0; ch < channels; ++ch) {
    const double top = (1 - ax) * at(r0, c0, ch) + ax * at(r0, c1, ch);
    const double bottom = (1 - ax) * at(r1, c0, ch) + ax * at(r1, c1, ch);
    out[ch] = static_cast<float>((1 - ay) * top + ay * bottom);
  }
  return true;
}

Image read_png(const std::filesystem::path& path, int channels) {
  if (channels != 1 && channels != 3) throw Error("read_png supports 1 or 3 channels");
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error("cannot decode PNG " + path.string() + ": " + img.message);
  }
  Image out(static_cast<int>(img.width), static_cast<int>(img.height), channels);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = buffer[i] / 255.0f;
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw Error("write_png supports 1 or 3 channels");
  if (image.width <= 0 || image.height <= 0) throw Error("write_png: empty image");
  std::vector<png_byte> buffer(image.data.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    buffer[i] = static_cast<png_byte>(std::lround(std::clamp(image.data[i], 0.0f, 1.0f) * 255.0f));
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw Error("cannot write PNG " + path.string() + ": " + img.message);
  }
}

} // namespace semreg
