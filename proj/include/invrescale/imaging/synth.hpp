#pragma once

// Seeded synthetic images: a colour gradient, a low-frequency sinusoid and a
// few flat-coloured rectangles and discs. Values are 8-bit quantized so that a
// PNG round trip is exact.

#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "invrescale/imaging/convert.hpp"
#include "invrescale/numerics/rng.hpp"

namespace invrescale {

template <class T = float>
BasicTensor<T> synth_image(std::size_t h, std::size_t w, SeededRng& rng) {
  BasicTensor<double> img({3, h, w});
  double c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = rng.uniform(0.1, 0.9);
    c1[c] = rng.uniform(0.1, 0.9);
  }
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double freq = rng.uniform(1.0, 3.0) * 2.0 * std::numbers::pi / static_cast<double>(std::max(h, w));
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double amp = rng.uniform(0.02, 0.08);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const double u = (static_cast<double>(i) + static_cast<double>(j)) / static_cast<double>(h + w);
      const double wave = amp * std::sin(freq * (std::cos(angle) * j + std::sin(angle) * i) + phase);
      for (std::size_t c = 0; c < 3; ++c) img(c, i, j) = (1.0 - u) * c0[c] + u * c1[c] + wave;
    }

  const std::size_t shapes = 2 + rng.below(4);
  for (std::size_t n = 0; n < shapes; ++n) {
    double col[3];
    for (auto& v : col) v = rng.uniform(0.0, 1.0);
    const double cy = rng.uniform(0.0, static_cast<double>(h)), cx = rng.uniform(0.0, static_cast<double>(w));
    const double ry = rng.uniform(0.1, 0.35) * h, rx = rng.uniform(0.1, 0.35) * w;
    const bool disc = rng.below(2) == 1;
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const double dy = (static_cast<double>(i) + 0.5 - cy) / ry, dx = (static_cast<double>(j) + 0.5 - cx) / rx;
        const bool inside = disc ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
        if (inside)
          for (std::size_t c = 0; c < 3; ++c) img(c, i, j) = col[c];
      }
  }
  return to_tensor<T>(from_tensor(img));
}

template <class T = float>
std::vector<BasicTensor<T>> synth_dataset(std::size_t count, std::size_t h, std::size_t w, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<BasicTensor<T>> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) out.push_back(synth_image<T>(h, w, rng));
  return out;
}

// PNG files of a directory in lexicographic order.
inline std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    auto ext = e.path().extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no PNG files in " + dir.string());
  return files;
}

template <class T = float>
std::vector<BasicTensor<T>> load_png_dir(const std::filesystem::path& dir) {
  std::vector<BasicTensor<T>> out;
  for (const auto& f : list_png_files(dir)) out.push_back(to_tensor<T>(png_read(f)));
  return out;
}

}  // namespace invrescale
