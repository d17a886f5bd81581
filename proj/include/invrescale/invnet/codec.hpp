#pragma once

// Latent codec standing in for a pretrained image autoencoder. The identity
// codec makes the latent equal to the pixels; the tiny autoencoder reduces
// each spatial extent by 4 with two stride-2 convolutions and mirrors that
// with two pixel-shuffle stages.

#include <memory>
#include <string>

#include "invrescale/invnet/parameters.hpp"
#include "invrescale/transforms/pixel_shuffle.hpp"

namespace invrescale {

enum class CodecKind { kIdentity, kTinyAutoencoder };

inline const char* codec_kind_name(CodecKind k) {
  return k == CodecKind::kIdentity ? "identity" : "tiny-ae";
}

inline CodecKind parse_codec_kind(const std::string& s) {
  if (s == "identity") return CodecKind::kIdentity;
  if (s == "tiny-ae") return CodecKind::kTinyAutoencoder;
  throw ConfigError("unknown codec '" + s + "' (expected identity|tiny-ae)");
}

template <class T>
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;
  virtual std::size_t latent_channels() const = 0;
  // Spatial reduction factor between image and latent.
  virtual std::size_t reduction() const = 0;
  virtual Var<T> encode(const ParameterSet<T>& params, const Var<T>& image) const = 0;
  virtual Var<T> decode(const ParameterSet<T>& params, const Var<T>& latent) const = 0;
  // Parameter name prefix owned by this codec ("" when it has none).
  virtual std::string prefix() const = 0;
};

template <class T>
class IdentityCodec final : public LatentCodec<T> {
 public:
  std::size_t latent_channels() const override { return 3; }
  std::size_t reduction() const override { return 1; }
  Var<T> encode(const ParameterSet<T>&, const Var<T>& image) const override { return image; }
  Var<T> decode(const ParameterSet<T>&, const Var<T>& latent) const override { return latent; }
  std::string prefix() const override { return ""; }
};

template <class T>
class TinyAutoencoder final : public LatentCodec<T> {
 public:
  TinyAutoencoder(std::size_t latent_channels, std::size_t hidden) : latent_(latent_channels), hidden_(hidden) {}

  static void add_parameters(ParameterSet<T>& params, std::size_t latent, std::size_t hidden, SeededRng& rng) {
    add_conv(params, "codec.enc1", hidden, 3, 3, rng);
    add_conv(params, "codec.enc2", latent, hidden, 3, rng, 0.5);
    add_conv(params, "codec.dec1", hidden * 4, latent, 3, rng);
    add_conv(params, "codec.dec2", 3 * 4, hidden, 3, rng, 0.5);
  }

  std::size_t latent_channels() const override { return latent_; }
  std::size_t reduction() const override { return 4; }
  std::string prefix() const override { return "codec."; }

  Var<T> encode(const ParameterSet<T>& params, const Var<T>& image) const override {
    auto h = ad::relu(apply_conv(params, "codec.enc1", image, 2, 1));
    return apply_conv(params, "codec.enc2", h, 2, 1);
  }

  Var<T> decode(const ParameterSet<T>& params, const Var<T>& latent) const override {
    auto h = ad::relu(ad::pixel_shuffle(apply_conv(params, "codec.dec1", latent), 2));
    return ad::pixel_shuffle(apply_conv(params, "codec.dec2", h), 2);
  }

 private:
  std::size_t latent_;
  std::size_t hidden_;
};

}  // namespace invrescale
