#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "invrescale/imaging/crop.hpp"
#include "invrescale/invnet/model.hpp"
#include "invrescale/training/losses.hpp"
#include "invrescale/training/optimizer.hpp"

namespace invrescale {

struct TrainConfig {
  std::uint64_t steps = 1000;
  std::size_t batch = 2;
  std::size_t crop = 64;
  LossWeights weights;
  AdamWConfig optimizer;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch == 0) throw ConfigError("batch must be positive");
    if (crop == 0) throw ConfigError("crop must be positive");
    weights.validate();
    optimizer.validate();
  }
};

struct StepReport {
  std::uint64_t step = 0;
  LossValues loss;
  double learning_rate = 0.0;
  double orthogonality = 0.0;  // ‖WᵀW − I‖∞ after reprojection
};

// Forward graph of one image through the full pipeline.
template <class T>
struct Forward {
  DownscaleResult<T> down;
  Var<T> f_t, c_s, f_0, x_hat;
  LossParts<T> parts;
  Var<T> total;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Joint training of all trainable model parameters against the four-part
// objective. Single writer over the model it references.
template <class T>
class Trainer {
 public:
  Trainer(RescalerModel<T>& model, TrainConfig config, std::unique_ptr<SemanticTeacher<T>> teacher = nullptr,
          std::unique_ptr<FeatureExtractor<T>> features = nullptr)
      : model_(model), config_(std::move(config)), teacher_(std::move(teacher)), features_(std::move(features)) {
    config_.validate();
    if (!teacher_)
      teacher_ = std::make_unique<FrozenRandomTeacher<T>>(mix_seed(config_.seed, 1), model_.config().pse_dim);
    if (!features_) features_ = std::make_unique<FrozenRandomFeatures<T>>(mix_seed(config_.seed, 2));
    if (teacher_->dim() != model_.config().pse_dim)
      throw ConfigError("teacher embedding dimension differs from the PSE dimension");
    if (config_.crop % model_.total_scale() != 0)
      throw ConfigError("crop " + std::to_string(config_.crop) + " is not divisible by the total scale " +
                        std::to_string(model_.total_scale()));
    state_.config = config_.optimizer;
  }

  const TrainConfig& config() const { return config_; }
  OptimizerState<T>& optimizer_state() { return state_; }
  const OptimizerState<T>& optimizer_state() const { return state_; }
  const SemanticTeacher<T>& teacher() const { return *teacher_; }
  const FeatureExtractor<T>& features() const { return *features_; }

  Forward<T> forward(const BasicTensor<T>& image) const {
    Forward<T> f;
    auto x = Var<T>::constant(image);
    f.down = model_.downscale(x, true);
    require_finite(f.down.latent.value(), "latent", "downscale");
    require_finite(f.down.lr.value(), "lr", "downscale");
    require_finite(f.down.hf_true.value(), "hf_true", "downscale");
    f.f_t = model_.upscale(f.down.lr);
    require_finite(f.f_t.value(), "f_t", "upscale");
    f.c_s = model_.embed(f.down.lr);
    require_finite(f.c_s.value(), "c_s", "pse_forward");
    f.f_0 = model_.refine(f.f_t, f.c_s);
    require_finite(f.f_0.value(), "f_0", "refine");
    f.x_hat = model_.decode(f.f_0);
    require_finite(f.x_hat.value(), "x_hat", "decode");
    f.parts = {loss_pixel(f.x_hat, x), loss_feat(f.x_hat, x, *features_),
               loss_lr(f.down.lr, image, model_.total_scale()), loss_sem(f.c_s, image, *teacher_)};
    f.total = loss_total(f.parts, config_.weights);
    return f;
  }

  // Loss values without touching gradients or parameters.
  LossValues evaluate(const std::vector<BasicTensor<T>>& batch) const {
    ad::NoGradGuard no_grad;
    LossValues acc;
    for (const auto& img : batch) accumulate(acc, forward(img));
    return scaled(acc, 1.0 / static_cast<double>(batch.size()));
  }

  // One optimizer update on an explicit batch.
  StepReport train_step(const std::vector<BasicTensor<T>>& batch) {
    if (batch.empty()) throw ShapeError("train_step: empty batch");
    model_.parameters().zero_grad();
    LossValues acc;
    const T seed = static_cast<T>(1.0 / static_cast<double>(batch.size()));
    for (const auto& img : batch) {
      auto f = forward(img);
      accumulate(acc, f);
      ad::backward(f.total, seed);
    }
    optimizer_step(model_.parameters(), state_);
    model_.reproject_kernel();
    StepReport rep;
    rep.step = state_.step;
    rep.loss = scaled(acc, 1.0 / static_cast<double>(batch.size()));
    rep.learning_rate = state_.config.rate_at(state_.step);
    rep.orthogonality = model_.kernel().orthogonality_error();
    return rep;
  }

  // Batch for update number `step` (1-based); depends only on (seed, step),
  // so a resumed run draws the same crops as an uninterrupted one.
  std::vector<BasicTensor<T>> sample_batch(const std::vector<BasicTensor<T>>& images, std::uint64_t step) const {
    SeededRng rng(mix_seed(config_.seed, 1000 + step));
    return crop_batch(images, config_.crop, config_.batch, rng);
  }

  StepReport step(const std::vector<BasicTensor<T>>& images) { return train_step(sample_batch(images, state_.step + 1)); }

  // Runs `config.steps` further updates, calling on_step after each.
  void run(const std::vector<BasicTensor<T>>& images, const std::function<void(const StepReport&)>& on_step = {}) {
    for (std::uint64_t i = 0; i < config_.steps; ++i) {
      const auto rep = step(images);
      if (on_step) on_step(rep);
    }
  }

 private:
  static void accumulate(LossValues& acc, const Forward<T>& f) {
    acc.pixel += static_cast<double>(f.parts.pixel.value()[0]);
    acc.feature += static_cast<double>(f.parts.feature.value()[0]);
    acc.lr += static_cast<double>(f.parts.lr.value()[0]);
    acc.semantic += static_cast<double>(f.parts.semantic.value()[0]);
    acc.total += static_cast<double>(f.total.value()[0]);
  }
  static LossValues scaled(LossValues v, double k) {
    v.pixel *= k;
    v.feature *= k;
    v.lr *= k;
    v.semantic *= k;
    v.total *= k;
    return v;
  }

  RescalerModel<T>& model_;
  TrainConfig config_;
  std::unique_ptr<SemanticTeacher<T>> teacher_;
  std::unique_ptr<FeatureExtractor<T>> features_;
  OptimizerState<T> state_;
};

namespace detail {

// Restores trainable flags on scope exit.
template <class T>
class TrainableScope {
 public:
  explicit TrainableScope(ParameterSet<T>& params) : params_(params) {
    for (const auto& e : params.entries()) saved_.push_back(e.trainable);
  }
  ~TrainableScope() {
    auto& es = params_.entries();
    for (std::size_t i = 0; i < es.size(); ++i) params_.set_trainable(es[i].name, saved_[i]);
  }
  TrainableScope(const TrainableScope&) = delete;
  TrainableScope& operator=(const TrainableScope&) = delete;

 private:
  ParameterSet<T>& params_;
  std::vector<bool> saved_;
};

}  // namespace detail

struct AdpFitConfig {
  std::uint64_t steps = 600;
  double lr = 0.02;
  std::uint64_t halve_every = 150;
};

// Fits only the detail prior by full-batch minimisation of the pixel loss
// over the whole dataset. The objective is the dataset-wide mean squared
// error, whose square root (reported) is the dataset RMS. Returns that RMS
// before every update.
template <class T>
std::vector<double> fit_adp(RescalerModel<T>& model, const std::vector<BasicTensor<T>>& images,
                            const AdpFitConfig& cfg = {}) {
  if (images.empty()) throw ShapeError("fit_adp: empty dataset");
  auto& params = model.parameters();
  detail::TrainableScope<T> scope(params);
  params.train_only([](const std::string& n) { return n == "adp.tile"; });

  std::vector<BasicTensor<T>> lrs;
  for (const auto& img : images) lrs.push_back(model.downscale(img, true).first);

  OptimizerState<T> st;
  st.config.lr = cfg.lr;
  st.config.weight_decay = 0.0;
  st.config.halve_every = cfg.halve_every;
  std::vector<double> history;
  const double n = static_cast<double>(images.size());
  for (std::uint64_t s = 0; s < cfg.steps; ++s) {
    params.zero_grad();
    double mse = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
      auto rms = ad::rms_diff(model.reconstruct(Var<T>::constant(lrs[i])), Var<T>::constant(images[i]));
      const double r = static_cast<double>(rms.value()[0]);
      mse += r * r / n;
      ad::backward(rms, static_cast<T>(2.0 * r / n));
    }
    history.push_back(std::sqrt(mse));
    optimizer_step(params, st);
  }
  return history;
}

struct CodecPretrainConfig {
  std::uint64_t steps = 500;
  std::size_t batch = 4;
  std::size_t crop = 32;
  double lr = 2e-3;
  std::uint64_t seed = 0;
};

// Trains only the codec parameters on decode(encode(x)) ≈ x over random
// crops. Returns the mean batch RMS per update.
template <class T>
std::vector<double> pretrain_codec(RescalerModel<T>& model, const std::vector<BasicTensor<T>>& images,
                                   const CodecPretrainConfig& cfg = {}) {
  const std::string prefix = model.codec().prefix();
  if (prefix.empty()) return {};
  if (cfg.crop % model.codec().reduction() != 0) throw ConfigError("codec crop not divisible by the codec reduction");
  auto& params = model.parameters();
  detail::TrainableScope<T> scope(params);
  params.train_only([&](const std::string& n) { return n.rfind(prefix, 0) == 0; });
  OptimizerState<T> st;
  st.config.lr = cfg.lr;
  st.config.weight_decay = 0.0;
  st.config.halve_every = std::max<std::uint64_t>(cfg.steps / 4, 1);
  std::vector<double> history;
  for (std::uint64_t s = 0; s < cfg.steps; ++s) {
    SeededRng rng(mix_seed(cfg.seed, s));
    const auto batch = crop_batch(images, cfg.crop, cfg.batch, rng);
    params.zero_grad();
    double acc = 0.0;
    for (const auto& img : batch) {
      auto x = Var<T>::constant(img);
      auto rms = ad::rms_diff(model.decode(model.codec().encode(params, x)), x);
      acc += static_cast<double>(rms.value()[0]);
      ad::backward(rms, static_cast<T>(1.0 / static_cast<double>(batch.size())));
    }
    history.push_back(acc / static_cast<double>(batch.size()));
    optimizer_step(params, st);
  }
  return history;
}

}  // namespace invrescale
