#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "invrescale/invnet/adp.hpp"
#include "invrescale/invnet/codec.hpp"
#include "invrescale/invnet/coupling.hpp"
#include "invrescale/invnet/parameters.hpp"
#include "invrescale/invnet/quantize.hpp"
#include "invrescale/refiner/predictor.hpp"
#include "invrescale/refiner/pse.hpp"
#include "invrescale/refiner/schedule.hpp"
#include "invrescale/transforms/lrt.hpp"

namespace invrescale {

// Number of latent channels that form the LR image.
inline constexpr std::size_t kLrChannels = 3;

struct ModelConfig {
  std::size_t scale = 4;  // latent rescaling factor s
  CodecKind codec = CodecKind::kIdentity;
  std::size_t codec_latent = 4;
  std::size_t codec_hidden = 16;
  std::size_t coupling_hidden = 32;
  std::size_t coupling_blocks = 3;
  double coupling_clamp = 1.0;
  double coupling_init_gain = 0.1;
  double lr_gain = 0.0;  // LR branch divisor; 0 selects s
  AdpKind adp = AdpKind::kLearnable;
  std::size_t adp_tile = 8;
  std::size_t pse_hidden = 32;
  std::size_t pse_dim = 64;
  std::size_t predictor_hidden = 16;
  int t_max = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::uint64_t seed = 0;

  void validate() const {
    if (scale != 2 && scale != 4 && scale != 8) throw ConfigError("scale must be 2, 4 or 8");
    if (coupling_hidden == 0 || pse_hidden == 0 || pse_dim == 0 || predictor_hidden == 0 || adp_tile == 0)
      throw ConfigError("layer widths and tile size must be positive");
    if (codec == CodecKind::kTinyAutoencoder && (codec_latent < 1 || codec_hidden == 0))
      throw ConfigError("tiny-ae codec needs positive latent and hidden widths");
    if (!(coupling_clamp > 0.0)) throw ConfigError("coupling clamp must be positive");
    if (!(lr_gain >= 0.0) || !std::isfinite(lr_gain)) throw ConfigError("lr_gain must be finite and nonnegative");
  }
};

template <class T>
struct DownscaleResult {
  Var<T> lr;        // (3, h, w), quantized
  Var<T> hf_true;   // (C_hf, h, w); diagnostics and training only, never stored
  Var<T> latent;    // codec.encode(x)
};

// All trainable state of the rescaler: LRT kernel, coupling blocks, detail
// prior, semantic embedder, noise predictor and (optionally) the codec.
template <class T>
class RescalerModel {
 public:
  explicit RescalerModel(const ModelConfig& config) : config_(config), schedule_(config.t_max, config.beta_start, config.beta_end) {
    config_.validate();
    SeededRng rng(config_.seed);

    if (config_.codec == CodecKind::kTinyAutoencoder) {
      codec_ = std::make_unique<TinyAutoencoder<T>>(config_.codec_latent, config_.codec_hidden);
      auto codec_rng = rng.fork(1);
      TinyAutoencoder<T>::add_parameters(params_, config_.codec_latent, config_.codec_hidden, codec_rng);
      // The codec is frozen during joint training; pretrain_codec unfreezes it.
      for (const auto& name : params_.names()) params_.set_trainable(name, false);
    } else {
      codec_ = std::make_unique<IdentityCodec<T>>();
    }

    const std::size_t latent = codec_->latent_channels();
    auto lrt_rng = rng.fork(2);
    params_.add("lrt.w", OrthogonalKernel<T>::random(latent, config_.scale, lrt_rng).w);

    auto block_rng = rng.fork(3);
    for (std::size_t i = 0; i < config_.coupling_blocks; ++i) {
      CouplingBlock blk{"block" + std::to_string(i), kLrChannels, kernel_extent() - kLrChannels,
                        config_.coupling_hidden, config_.coupling_clamp};
      add_coupling_parameters(params_, blk, block_rng, config_.coupling_init_gain);
      blocks_.push_back(blk);
    }

    auto adp_rng = rng.fork(4);
    params_.add("adp.tile", make_adp_tile<T>(config_.adp, hf_channels(), config_.adp_tile, adp_rng),
                config_.adp == AdpKind::kLearnable);

    auto pse_rng = rng.fork(5);
    pse_ = PixelSemanticEmbedder{kLrChannels, config_.pse_hidden, config_.pse_dim};
    pse_.add_parameters(params_, pse_rng);

    auto pred_rng = rng.fork(6);
    auto pred = std::make_unique<ConditionedResidualNet<T>>(latent, config_.predictor_hidden, config_.pse_dim);
    pred->add_parameters(params_, pred_rng);
    predictor_ = std::move(pred);
  }

  RescalerModel(RescalerModel&&) = default;
  RescalerModel& operator=(RescalerModel&&) = default;

  // Deep copy, optionally at another precision.
  template <class U = T>
  RescalerModel<U> cast() const {
    RescalerModel<U> out(config_);
    out.parameters().assign_from(params_);
    return out;
  }

  const ModelConfig& config() const { return config_; }
  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const LatentCodec<T>& codec() const { return *codec_; }
  const EpsilonPredictor<T>& predictor() const { return *predictor_; }
  const std::vector<CouplingBlock>& blocks() const { return blocks_; }

  std::size_t latent_channels() const { return codec_->latent_channels(); }
  std::size_t kernel_extent() const { return latent_channels() * config_.scale * config_.scale; }
  std::size_t hf_channels() const { return kernel_extent() - kLrChannels; }
  std::size_t total_scale() const { return codec_->reduction() * config_.scale; }
  // Divisor of the LR branch before quantization. With the default s, a
  // constant row 1/s of the orthonormal kernel yields the block mean.
  T lr_gain() const { return static_cast<T>(config_.lr_gain > 0.0 ? config_.lr_gain : double(config_.scale)); }

  OrthogonalKernel<T> kernel() const {
    return OrthogonalKernel<T>{params_.get("lrt.w").value(), config_.scale, latent_channels()};
  }
  void set_kernel(const BasicTensor<T>& w) {
    kernel().validate();
    if (w.dims() != params_.get("lrt.w").dims()) throw ShapeError("set_kernel: wrong kernel extent");
    params_.get("lrt.w").mutable_value() = w;
  }
  void reproject_kernel() { params_.get("lrt.w").mutable_value() = orthogonal_project(params_.get("lrt.w").value()); }

  // Identity kernel, zero coupling outputs, zero refiner residual and zero
  // detail prior: downscale/upscale become a pure rearrangement.
  void make_pure_rearrangement() {
    params_.get("lrt.w").mutable_value() = BasicTensor<T>::identity(kernel_extent());
    for (auto& e : params_.entries()) {
      const bool coupling_out = e.name.rfind("block", 0) == 0 && e.name.find(".conv2.") != std::string::npos;
      if (coupling_out || e.name.rfind("pred.conv3.", 0) == 0 || e.name == "adp.tile") e.var.mutable_value().fill(T{0});
    }
  }

  void check_image_extents(const Shape& dims) const {
    if (dims.size() != 3 || dims[0] != 3) throw ShapeError("expected an RGB image tensor (3,H,W), got " + shape_string(dims));
    const std::size_t ts = total_scale();
    if (dims[1] % ts != 0 || dims[2] % ts != 0)
      throw ShapeError("image extents " + std::to_string(dims[2]) + "x" + std::to_string(dims[1]) +
                       " are not divisible by the total scale " + std::to_string(ts));
  }

  DownscaleResult<T> downscale(const Var<T>& x, bool quantize = true) const {
    check_image_extents(x.dims());
    auto latent = codec_->encode(params_, x);
    auto t = ad::lrt_forward(latent, params_.get("lrt.w"), config_.scale);
    for (const auto& blk : blocks_) t = coupling_forward(params_, blk, t);
    auto a = ad::scale(ad::slice_channels(t, 0, kLrChannels), T{1} / lr_gain());
    auto hf = ad::slice_channels(t, kLrChannels, kernel_extent());
    return {quantize ? ad::quantize_ste(a) : a, hf, latent};
  }

  Var<T> detail_prior(std::size_t h, std::size_t w) const { return ad::adp_map(params_.get("adp.tile"), h, w); }

  // Latent F_T from the LR image and either the detail prior or an explicit
  // high-frequency tensor.
  Var<T> upscale(const Var<T>& lr, const std::optional<Var<T>>& hf_override = std::nullopt) const {
    if (lr.value().rank() != 3 || lr.value().dim(0) != kLrChannels)
      throw ShapeError("upscale expects a (3,h,w) LR tensor, got " + shape_string(lr.dims()));
    const std::size_t h = lr.value().dim(1), w = lr.value().dim(2);
    Var<T> hf = hf_override ? *hf_override : detail_prior(h, w);
    if (hf.dims() != Shape{hf_channels(), h, w})
      throw ShapeError("high-frequency override " + shape_string(hf.dims()) + " does not match " +
                       shape_string({hf_channels(), h, w}));
    auto t = ad::concat_channels(ad::scale(lr, lr_gain()), hf);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) t = coupling_inverse(params_, *it, t);
    return ad::lrt_inverse(t, params_.get("lrt.w"), config_.scale);
  }

  Var<T> embed(const Var<T>& lr) const { return pse_forward(params_, lr); }

  Var<T> refine(const Var<T>& f_t, const Var<T>& c_s) const {
    return invrescale::refine(params_, f_t, c_s, *predictor_, schedule_);
  }

  Var<T> decode(const Var<T>& latent) const { return codec_->decode(params_, latent); }

  // Full upscale path: latent upscaling, one-step refinement, decode.
  Var<T> reconstruct(const Var<T>& lr, const std::optional<Var<T>>& hf_override = std::nullopt) const {
    return decode(refine(upscale(lr, hf_override), embed(lr)));
  }

  // Inference conveniences on plain tensors.
  std::pair<BasicTensor<T>, BasicTensor<T>> downscale(const BasicTensor<T>& x, bool quantize = true) const {
    ad::NoGradGuard no_grad;
    auto r = downscale(Var<T>::constant(x), quantize);
    return {r.lr.value(), r.hf_true.value()};
  }

  BasicTensor<T> upscale(const BasicTensor<T>& lr, const std::optional<BasicTensor<T>>& hf = std::nullopt) const {
    ad::NoGradGuard no_grad;
    std::optional<Var<T>> hv;
    if (hf) hv = Var<T>::constant(*hf);
    return upscale(Var<T>::constant(lr), hv).value();
  }

  BasicTensor<T> reconstruct(const BasicTensor<T>& lr, const std::optional<BasicTensor<T>>& hf = std::nullopt) const {
    ad::NoGradGuard no_grad;
    std::optional<Var<T>> hv;
    if (hf) hv = Var<T>::constant(*hf);
    return reconstruct(Var<T>::constant(lr), hv).value();
  }

  BasicTensor<T> encode(const BasicTensor<T>& x) const {
    ad::NoGradGuard no_grad;
    return codec_->encode(params_, Var<T>::constant(x)).value();
  }

 private:
  ModelConfig config_;
  NoiseSchedule schedule_;
  ParameterSet<T> params_;
  std::unique_ptr<LatentCodec<T>> codec_;
  std::vector<CouplingBlock> blocks_;
  PixelSemanticEmbedder pse_;
  std::unique_ptr<EpsilonPredictor<T>> predictor_;
};

}  // namespace invrescale
