#pragma once

#include <vector>

#include "invrescale/numerics/rng.hpp"
#include "invrescale/numerics/tensor.hpp"

namespace invrescale {

template <class T>
BasicTensor<T> crop(const BasicTensor<T>& img, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
  if (img.rank() != 3 || top + h > img.dim(1) || left + w > img.dim(2))
    throw ShapeError("crop window exceeds image " + shape_string(img.dims()));
  const std::size_t c = img.dim(0);
  BasicTensor<T> out({c, h, w});
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) out(k, i, j) = img(k, top + i, left + j);
  return out;
}

struct CropWindow {
  std::size_t image = 0, top = 0, left = 0;
};

// Seeded crop placement; draws image index, then row, then column.
template <class T>
CropWindow draw_crop(const std::vector<BasicTensor<T>>& images, std::size_t size, SeededRng& rng) {
  if (images.empty()) throw ShapeError("crop_batch: no images");
  CropWindow win;
  win.image = rng.below(images.size());
  const auto& img = images[win.image];
  if (img.rank() != 3 || img.dim(1) < size || img.dim(2) < size)
    throw ShapeError("crop_batch: image " + std::to_string(win.image) + " " + shape_string(img.dims()) +
                     " is smaller than the crop " + std::to_string(size));
  win.top = rng.below(img.dim(1) - size + 1);
  win.left = rng.below(img.dim(2) - size + 1);
  return win;
}

template <class T>
std::vector<BasicTensor<T>> crop_batch(const std::vector<BasicTensor<T>>& images, std::size_t size, std::size_t count,
                                       SeededRng& rng) {
  if (size == 0) throw ShapeError("crop_batch: crop size must be positive");
  std::vector<BasicTensor<T>> batch;
  batch.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const auto win = draw_crop(images, size, rng);
    batch.push_back(crop(images[win.image], win.top, win.left, size, size));
  }
  return batch;
}

}  // namespace invrescale
