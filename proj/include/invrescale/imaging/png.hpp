#pragma once

// 8-bit RGB image buffers and PNG I/O through the libpng simplified API.

#include <png.h>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "invrescale/errors.hpp"

namespace invrescale {

struct ImageBuffer {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> samples;  // row-major RGB, 3·width·height

  ImageBuffer() = default;
  ImageBuffer(std::size_t w, std::size_t h) : width(w), height(h), samples(3 * w * h) {}

  bool valid() const { return width > 0 && height > 0 && samples.size() == 3 * width * height; }
  bool operator==(const ImageBuffer&) const = default;
};

namespace detail {

class PngImage {
 public:
  PngImage() {
    image_.version = PNG_IMAGE_VERSION;
    image_.opaque = nullptr;
  }
  ~PngImage() { png_image_free(&image_); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;

  png_image* operator->() { return &image_; }
  png_image* get() { return &image_; }
  std::string message() const { return image_.message; }

 private:
  png_image image_{};
};

inline ImageBuffer finish_png_read(PngImage& img, const std::string& what) {
  const auto fmt = img->format;
  if (fmt & PNG_FORMAT_FLAG_LINEAR) throw UnsupportedImageError(what + ": unsupported bit depth (16-bit PNG)");
  if ((fmt & PNG_FORMAT_FLAG_COLORMAP) || !(fmt & PNG_FORMAT_FLAG_COLOR))
    throw UnsupportedImageError(what + ": unsupported color type (need 8-bit RGB or RGBA)");
  const bool alpha = (fmt & PNG_FORMAT_FLAG_ALPHA) != 0;
  if (alpha) std::cerr << "warning: " << what << ": alpha channel dropped\n";
  img->format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  const std::size_t w = img->width, h = img->height;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(*img.get()));
  if (!png_image_finish_read(img.get(), nullptr, raw.data(), 0, nullptr))
    throw CorruptFileError(what + ": " + img.message());
  ImageBuffer out(w, h);
  if (!alpha) {
    out.samples = std::move(raw);
  } else {
    for (std::size_t i = 0; i < w * h; ++i)
      for (int c = 0; c < 3; ++c) out.samples[3 * i + c] = raw[4 * i + c];
  }
  return out;
}

inline void require_valid(const ImageBuffer& img, const std::string& what) {
  if (!img.valid()) throw ShapeError(what + ": sample count does not match 3·width·height");
}

}  // namespace detail

inline ImageBuffer png_read(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("cannot open " + path.string());
  detail::PngImage img;
  if (!png_image_begin_read_from_file(img.get(), path.c_str()))
    throw CorruptFileError(path.string() + ": " + img.message());
  return detail::finish_png_read(img, path.string());
}

inline ImageBuffer png_decode(const std::vector<std::uint8_t>& bytes) {
  detail::PngImage img;
  if (!png_image_begin_read_from_memory(img.get(), bytes.data(), bytes.size()))
    throw CorruptFileError("png: " + img.message());
  return detail::finish_png_read(img, "png");
}

inline std::vector<std::uint8_t> png_encode(const ImageBuffer& buf) {
  detail::require_valid(buf, "png_encode");
  detail::PngImage img;
  img->width = static_cast<png_uint_32>(buf.width);
  img->height = static_cast<png_uint_32>(buf.height);
  img->format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(img.get(), nullptr, &size, 0, buf.samples.data(), 0, nullptr))
    throw IoError("png_encode: " + img.message());
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(img.get(), out.data(), &size, 0, buf.samples.data(), 0, nullptr))
    throw IoError("png_encode: " + img.message());
  out.resize(size);
  return out;
}

inline void png_write(const std::filesystem::path& path, const ImageBuffer& buf) {
  detail::require_valid(buf, "png_write");
  detail::PngImage img;
  img->width = static_cast<png_uint_32>(buf.width);
  img->height = static_cast<png_uint_32>(buf.height);
  img->format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(img.get(), path.c_str(), 0, buf.samples.data(), 0, nullptr))
    throw IoError(path.string() + ": " + img.message());
}

}  // namespace invrescale
