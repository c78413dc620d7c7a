// SPDX-License-Identifier: Apache-2.0
#include "codesynth/image.hpp"

#include <png.h>

#include <cstring>

#include "codesynth/error.hpp"

namespace codesynth {

Image::Image(int w, int h, Rgb fill) : width(w), height(h) {
  rgba.resize(static_cast<std::size_t>(w) * h * 4);
  for (std::size_t i = 0; i < rgba.size(); i += 4) {
    rgba[i] = fill[0];
    rgba[i + 1] = fill[1];
    rgba[i + 2] = fill[2];
    rgba[i + 3] = 255;
  }
}

namespace {

Image finish_read(png_image& img, const std::string& what) {
  img.format = PNG_FORMAT_RGBA;
  if (img.width == 0 || img.height == 0 || img.width > 1u << 15 || img.height > 1u << 15) {
    png_image_free(&img);
    throw Error(ErrorCode::kUndecodableImage, what + ": unsupported dimensions");
  }
  Image out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.rgba.resize(PNG_IMAGE_SIZE(img));
  if (png_image_finish_read(&img, nullptr, out.rgba.data(), 0, nullptr) == 0) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kUndecodableImage, what + ": " + msg);
  }
  return out;
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&img, path.c_str()) == 0) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kUndecodableImage, path.string() + ": " + msg);
  }
  return finish_read(img, path.string());
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()) == 0) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kUndecodableImage, "memory: " + msg);
  }
  return finish_read(img, "memory");
}

void write_png(const std::filesystem::path& path, const Image& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGBA;
  if (png_image_write_to_file(&img, path.c_str(), 0, image.rgba.data(), 0, nullptr) == 0) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kIoError, path.string() + ": " + msg);
  }
}

}  // namespace codesynth
