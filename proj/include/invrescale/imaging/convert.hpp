#pragma once

#include "invrescale/imaging/png.hpp"
#include "invrescale/invnet/quantize.hpp"
#include "invrescale/numerics/tensor.hpp"

namespace invrescale {

// (3,H,W) tensor with v = sample/255.
template <class T = float>
BasicTensor<T> to_tensor(const ImageBuffer& img) {
  detail::require_valid(img, "to_tensor");
  const std::size_t plane = img.width * img.height;
  BasicTensor<T> out({3, img.height, img.width});
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      out[c * plane + i] = static_cast<T>(static_cast<double>(img.samples[3 * i + c]) / 255.0);
  return out;
}

// Clamp to [0,1] and round half away from zero, as the LR quantizer does.
template <class T>
ImageBuffer from_tensor(const BasicTensor<T>& x) {
  if (x.rank() != 3 || x.dim(0) != 3) throw ShapeError("from_tensor expects (3,H,W), got " + shape_string(x.dims()));
  const std::size_t h = x.dim(1), w = x.dim(2), plane = h * w;
  ImageBuffer out(w, h);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) out.samples[3 * i + c] = quantize_level(x[c * plane + i]);
  return out;
}

}  // namespace invrescale
