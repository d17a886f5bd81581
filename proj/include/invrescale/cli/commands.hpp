#pragma once

// Command implementations behind the invrescale executable. Each returns a
// process exit code; machine output goes to files or `out`, diagnostics to
// `err`.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "invrescale/cli/config.hpp"
#include "invrescale/imaging/convert.hpp"
#include "invrescale/imaging/metrics.hpp"
#include "invrescale/imaging/resize.hpp"
#include "invrescale/imaging/synth.hpp"
#include "invrescale/refiner/denoise.hpp"
#include "invrescale/training/state.hpp"
#include "invrescale/training/trainer.hpp"

namespace invrescale::cli {

using json = nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;

struct LoadedModel {
  RunConfig config;
  RescalerModel<float> model;
  OptimizerState<float> optimizer;
};

inline LoadedModel load_model(const std::filesystem::path& ckpt) {
  const auto tensors = load_checkpoint(ckpt);
  const std::string text = checkpoint_config_text(tensors);
  if (text.empty()) throw CheckpointError(ckpt.string() + ": checkpoint carries no config");
  auto cfg = parse_run_config(text);
  LoadedModel lm{cfg, RescalerModel<float>(cfg.model), {}};
  lm.optimizer.config = cfg.train.optimizer;
  restore(lm.model.parameters(), &lm.optimizer, tensors);
  return lm;
}

inline void save_model(const std::filesystem::path& path, const RunConfig& cfg, const RescalerModel<float>& model,
                       const OptimizerState<float>* st) {
  save_checkpoint(path, snapshot(model.parameters(), st, to_text(cfg)));
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << std::setw(2) << j << "\n";
  if (!f) throw IoError("write failed for " + path.string());
}

// Metrics log: '#' header, then "step pixel feature lr semantic total
// orthogonality learning_rate" per update.
inline constexpr const char* kLogHeader = "# step pixel feature lr semantic total orthogonality learning_rate";

inline std::string log_row(const StepReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%llu %.9g %.9g %.9g %.9g %.9g %.3e %.6g", static_cast<unsigned long long>(r.step),
                r.loss.pixel, r.loss.feature, r.loss.lr, r.loss.semantic, r.loss.total, r.orthogonality,
                r.learning_rate);
  return buf;
}

struct TrainOptions {
  std::filesystem::path config, data, out;
  std::optional<std::filesystem::path> resume;
  std::optional<std::filesystem::path> log;  // default: <out>.log
};

inline int cmd_train(const TrainOptions& opt, std::ostream& err = std::cerr) {
  const RunConfig cfg = load_run_config(opt.config);
  const auto images = load_png_dir<float>(opt.data);
  RescalerModel<float> model(cfg.model);
  Trainer<float> trainer(model, cfg.train);
  const auto log_path = opt.log ? *opt.log : std::filesystem::path(opt.out.string() + ".log");
  std::ofstream log;
  if (opt.resume) {
    auto tensors = load_checkpoint(*opt.resume);
    restore(model.parameters(), &trainer.optimizer_state(), tensors);
    trainer.optimizer_state().config = cfg.train.optimizer;
    log.open(log_path, std::ios::app);
  } else {
    if (cfg.model.codec != CodecKind::kIdentity) {
      CodecPretrainConfig pc;
      pc.steps = cfg.codec_pretrain_steps;
      pc.seed = cfg.train.seed;
      pc.crop = cfg.train.crop;
      const auto hist = pretrain_codec(model, images, pc);
      if (!hist.empty()) err << "codec pretraining: final rms " << hist.back() << "\n";
    }
    log.open(log_path, std::ios::trunc);
    log << kLogHeader << "\n";
  }
  if (!log) throw IoError("cannot write log " + log_path.string());
  trainer.run(images, [&](const StepReport& r) {
    log << log_row(r) << "\n";
    if (r.orthogonality >= kOrthogonalityBudget)
      throw ConvergenceError("orthogonality budget exceeded at step " + std::to_string(r.step));
  });
  save_model(opt.out, cfg, model, &trainer.optimizer_state());
  return 0;
}

inline void check_downscale_extents(const RescalerModel<float>& model, const ImageBuffer& img) {
  const std::size_t ts = model.total_scale();
  if (img.width % ts != 0 || img.height % ts != 0)
    throw ShapeError("image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                     " is not divisible by the total scale " + std::to_string(ts));
}

inline int cmd_downscale(const std::filesystem::path& ckpt, const std::filesystem::path& in,
                         const std::filesystem::path& out) {
  const auto lm = load_model(ckpt);
  const auto img = png_read(in);
  check_downscale_extents(lm.model, img);
  png_write(out, from_tensor(lm.model.downscale(to_tensor<float>(img), true).first));
  return 0;
}

struct Extent {
  std::size_t width = 0, height = 0;
};

inline Extent parse_extent(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ConfigError("expected WxH, got '" + s + "'");
  const Extent e{detail::parse_int<std::size_t>("width", s.substr(0, x)),
                 detail::parse_int<std::size_t>("height", s.substr(x + 1))};
  if (e.width == 0 || e.height == 0) throw ConfigError("extent '" + s + "' must be positive");
  return e;
}

inline int cmd_upscale(const std::filesystem::path& ckpt, const std::filesystem::path& in,
                       const std::filesystem::path& out, std::optional<Extent> expect = std::nullopt) {
  const auto lm = load_model(ckpt);
  const auto lr = png_read(in);
  const std::size_t ts = lm.model.total_scale();
  if (expect && (expect->width != lr.width * ts || expect->height != lr.height * ts))
    throw ShapeError("scale mismatch: LR " + std::to_string(lr.width) + "x" + std::to_string(lr.height) +
                     " at total scale " + std::to_string(ts) + " gives " + std::to_string(lr.width * ts) + "x" +
                     std::to_string(lr.height * ts) + ", expected " + std::to_string(expect->width) + "x" +
                     std::to_string(expect->height));
  png_write(out, from_tensor(lm.model.reconstruct(to_tensor<float>(lr))));
  return 0;
}

// Downscale + upscale of one image held in memory.
struct RoundTrip {
  Tensor original, lr, reconstruction;
  std::size_t lr_bytes = 0;
};

inline RoundTrip round_trip(const RescalerModel<float>& model, const ImageBuffer& img, bool debug_true_hf) {
  check_downscale_extents(model, img);
  RoundTrip rt;
  rt.original = to_tensor<float>(img);
  auto [lr, hf] = model.downscale(rt.original, true);
  const auto lr_img = from_tensor(lr);
  rt.lr_bytes = png_encode(lr_img).size();
  rt.lr = to_tensor<float>(lr_img);
  std::optional<Tensor> inject;
  if (debug_true_hf) inject = hf;
  rt.reconstruction = to_tensor<float>(from_tensor(model.reconstruct(rt.lr, inject)));
  return rt;
}

inline json image_metrics(const RescalerModel<float>& model, const ImageBuffer& img, std::uintmax_t original_bytes,
                          bool debug_true_hf) {
  const auto rt = round_trip(model, img, debug_true_hf);
  const std::size_t ts = model.total_scale();
  const auto bicubic_lr = bicubic_downscale(rt.original, ts);
  const auto baseline =
      to_tensor<float>(from_tensor(bicubic_resize(to_tensor<float>(from_tensor(bicubic_lr)), img.height, img.width)));
  json j;
  j["width"] = img.width;
  j["height"] = img.height;
  j["psnr"] = psnr(rt.reconstruction, rt.original);
  j["ssim"] = ssim(rt.reconstruction, rt.original);
  j["bicubic_psnr"] = psnr(baseline, rt.original);
  j["lr_l2_vs_bicubic"] = std::sqrt(mean_squared_error(rt.lr, bicubic_lr));
  j["original_bytes"] = original_bytes;
  j["lr_bytes"] = rt.lr_bytes;
  j["cr"] = compression_ratio(original_bytes, rt.lr_bytes);
  return j;
}

inline int cmd_roundtrip(const std::filesystem::path& ckpt, const std::filesystem::path& in,
                         const std::filesystem::path& json_out, bool debug_true_hf = false) {
  const auto lm = load_model(ckpt);
  auto j = image_metrics(lm.model, png_read(in), file_bytes(in), debug_true_hf);
  j["schema_version"] = kReportSchemaVersion;
  j["debug_true_hf"] = debug_true_hf;
  write_json(json_out, j);
  return 0;
}

inline int cmd_eval(const std::filesystem::path& ckpt, const std::filesystem::path& data,
                    const std::filesystem::path& json_out) {
  const auto lm = load_model(ckpt);
  json images = json::array();
  const char* keys[] = {"psnr", "ssim", "bicubic_psnr", "lr_l2_vs_bicubic", "cr"};
  std::map<std::string, double> sums;
  const auto files = list_png_files(data);
  for (const auto& f : files) {
    auto j = image_metrics(lm.model, png_read(f), file_bytes(f), false);
    j["file"] = f.filename().string();
    for (const char* k : keys) sums[k] += j[k].get<double>();
    images.push_back(std::move(j));
  }
  json mean;
  for (const char* k : keys) mean[k] = sums[k] / static_cast<double>(files.size());
  write_json(json_out, {{"schema_version", kReportSchemaVersion}, {"images", images}, {"mean", mean}});
  return 0;
}

struct CheckResult {
  std::string name;
  double value = 0.0, limit = 0.0;
  bool passed = false;
};

inline constexpr double kCheckRoundTripLimit = 1e-4;

// Invariant suite over a model: orthogonality budget, LRT and coupling round
// trips on seeded random inputs, and the one-step denoise inversion.
inline std::vector<CheckResult> run_checks(const RescalerModel<float>& model, std::uint64_t seed = 7) {
  std::vector<CheckResult> out;
  const double ortho = model.kernel().orthogonality_error();
  out.push_back({"orthogonality", ortho, kOrthogonalityBudget, ortho < kOrthogonalityBudget});

  SeededRng rng(seed);
  const std::size_t s = model.config().scale, c = model.latent_channels();
  const auto latent = uniform_tensor<float>({c, 4 * s, 4 * s}, -1.0, 1.0, rng);
  const auto kernel = model.kernel();
  const double lrt_err = max_abs_diff(lrt_inverse(lrt_forward(latent, kernel), kernel), latent);
  out.push_back({"lrt_round_trip", lrt_err, kCheckRoundTripLimit, lrt_err < kCheckRoundTripLimit});

  double coupling_err = 0.0;
  const auto sites = uniform_tensor<float>({model.kernel_extent(), 4, 4}, -1.0, 1.0, rng);
  for (const auto& blk : model.blocks()) {
    const auto y = coupling_forward(model.parameters(), blk, sites);
    coupling_err = std::max(coupling_err, max_abs_diff(coupling_inverse(model.parameters(), blk, y), sites));
  }
  out.push_back({"coupling_round_trip", coupling_err, kCheckRoundTripLimit, coupling_err < kCheckRoundTripLimit});

  double denoise_err = 0.0;
  const auto& sched = model.schedule();
  for (int t : {1, sched.steps() / 2, sched.steps()}) {
    const auto z = uniform_tensor<double>({c, 4, 4}, -1.0, 1.0, rng);
    const auto n = normal_tensor<double>({c, 4, 4}, 1.0, rng);
    denoise_err = std::max(denoise_err, max_abs_diff(one_step_denoise(corrupt(z, n, sched, t), n, sched, t), z));
  }
  out.push_back({"denoise_inversion", denoise_err, kCheckRoundTripLimit, denoise_err < kCheckRoundTripLimit});

  bool finite = true;
  for (const auto& e : model.parameters().entries()) finite = finite && e.var.value().all_finite();
  out.push_back({"finite_parameters", finite ? 0.0 : 1.0, 0.5, finite});
  return out;
}

inline int cmd_check(const std::filesystem::path& ckpt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  const auto lm = load_model(ckpt);
  const auto results = run_checks(lm.model);
  json checks = json::array(), failed = json::array();
  std::string failed_names;
  for (const auto& r : results) {
    checks.push_back({{"name", r.name}, {"value", r.value}, {"limit", r.limit}, {"passed", r.passed}});
    if (!r.passed) {
      failed.push_back(r.name);
      failed_names += (failed_names.empty() ? "" : ", ") + r.name;
    }
  }
  out << json{{"schema_version", kReportSchemaVersion}, {"checks", checks}, {"failed", failed}}.dump() << "\n";
  if (failed.empty()) return 0;
  err << "failed invariants: " << failed_names << "\n";
  return 1;
}

inline int cmd_synth(const std::filesystem::path& out_dir, std::size_t count, std::size_t size, std::uint64_t seed) {
  std::filesystem::create_directories(out_dir);
  const auto images = synth_dataset<float>(count, size, size, seed);
  for (std::size_t i = 0; i < images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%04zu.png", i);
    png_write(out_dir / name, from_tensor(images[i]));
  }
  return 0;
}

}  // namespace invrescale::cli
