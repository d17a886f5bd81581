#pragma once

// Run configuration: plain-text `key = value` lines; '#' starts a comment.
// Every key is optional (defaults below) but unknown or repeated keys are
// errors.
//
//   scale               2 | 4 | 8                      (4)
//   codec               identity | tiny-ae            (identity)
//   codec_latent        latent channels of tiny-ae     (4)
//   codec_hidden        hidden width of tiny-ae        (16)
//   codec_pretrain_steps codec pretraining updates     (300)
//   coupling_hidden     subnet hidden width            (32)
//   coupling_clamp      α of the affine scale          (1.0)
//   lr_gain             LR branch divisor; 0 = s       (0)
//   adp                 zeros | random | learnable     (learnable)
//   adp_tile            tile extent P; 1 = per channel (8)
//   pse_hidden          PSE width D_h                  (32)
//   pse_dim             embedding dimension D          (64)
//   predictor_hidden    noise predictor width          (16)
//   t_max, beta_start, beta_end   noise schedule       (1000, 1e-4, 0.02)
//   w_pixel, w_feature, w_lr, w_semantic  loss weights (2, 5, 3, 3)
//   lr, weight_decay, halve_every  AdamW               (1e-4, 0.01, 5000)
//   steps, batch, crop  training loop                  (1000, 2, 64)
//   seed                                               (0)

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "invrescale/invnet/model.hpp"
#include "invrescale/training/trainer.hpp"

namespace invrescale {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::uint64_t codec_pretrain_steps = 300;

  void validate() const {
    model.validate();
    train.validate();
    const std::size_t total = model.scale * (model.codec == CodecKind::kTinyAutoencoder ? 4 : 1);
    if (train.crop % total != 0)
      throw ConfigError("crop " + std::to_string(train.crop) + " is not divisible by the total scale " +
                        std::to_string(total));
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("key '" + key + "': invalid integer '" + v + "'");
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("key '" + key + "': invalid number '" + v + "'");
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct ConfigKey {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define INVRESCALE_INT_KEY(name, field, type)                                                          \
  {                                                                                                   \
    name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_int<type>(k, v); }, \
           [](const RunConfig& c) { return std::to_string(c.field); } }                                      \
  }
#define INVRESCALE_REAL_KEY(name, field)                                                                  \
  {                                                                                                      \
    name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_double(k, v); }, \
           [](const RunConfig& c) { return format_double(c.field); } }                                    \
  }

inline const std::map<std::string, ConfigKey>& config_keys() {
  static const std::map<std::string, ConfigKey> keys = {
      INVRESCALE_INT_KEY("scale", model.scale, std::size_t),
      {"codec", {[](RunConfig& c, const std::string&, const std::string& v) { c.model.codec = parse_codec_kind(v); },
                 [](const RunConfig& c) { return std::string(codec_kind_name(c.model.codec)); }}},
      INVRESCALE_INT_KEY("codec_latent", model.codec_latent, std::size_t),
      INVRESCALE_INT_KEY("codec_hidden", model.codec_hidden, std::size_t),
      INVRESCALE_INT_KEY("codec_pretrain_steps", codec_pretrain_steps, std::uint64_t),
      INVRESCALE_INT_KEY("coupling_hidden", model.coupling_hidden, std::size_t),
      INVRESCALE_REAL_KEY("coupling_clamp", model.coupling_clamp),
      INVRESCALE_REAL_KEY("lr_gain", model.lr_gain),
      {"adp", {[](RunConfig& c, const std::string&, const std::string& v) { c.model.adp = parse_adp_kind(v); },
               [](const RunConfig& c) { return std::string(adp_kind_name(c.model.adp)); }}},
      INVRESCALE_INT_KEY("adp_tile", model.adp_tile, std::size_t),
      INVRESCALE_INT_KEY("pse_hidden", model.pse_hidden, std::size_t),
      INVRESCALE_INT_KEY("pse_dim", model.pse_dim, std::size_t),
      INVRESCALE_INT_KEY("predictor_hidden", model.predictor_hidden, std::size_t),
      INVRESCALE_INT_KEY("t_max", model.t_max, int),
      INVRESCALE_REAL_KEY("beta_start", model.beta_start),
      INVRESCALE_REAL_KEY("beta_end", model.beta_end),
      INVRESCALE_REAL_KEY("w_pixel", train.weights.pixel),
      INVRESCALE_REAL_KEY("w_feature", train.weights.feature),
      INVRESCALE_REAL_KEY("w_lr", train.weights.lr),
      INVRESCALE_REAL_KEY("w_semantic", train.weights.semantic),
      INVRESCALE_REAL_KEY("lr", train.optimizer.lr),
      INVRESCALE_REAL_KEY("weight_decay", train.optimizer.weight_decay),
      INVRESCALE_INT_KEY("halve_every", train.optimizer.halve_every, std::uint64_t),
      INVRESCALE_INT_KEY("steps", train.steps, std::uint64_t),
      INVRESCALE_INT_KEY("batch", train.batch, std::size_t),
      INVRESCALE_INT_KEY("crop", train.crop, std::size_t),
      {"seed", {[](RunConfig& c, const std::string& k, const std::string& v) {
                  c.model.seed = c.train.seed = parse_int<std::uint64_t>(k, v);
                },
                [](const RunConfig& c) { return std::to_string(c.model.seed); }}},
  };
  return keys;
}

#undef INVRESCALE_INT_KEY
#undef INVRESCALE_REAL_KEY

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    const auto& keys = detail::config_keys();
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": repeated key '" + key + "'");
    if (value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' has no value");
    it->second.set(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

// Canonical text with every key; parse_run_config(to_text(c)) reproduces c.
inline std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, k] : detail::config_keys()) out += key + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace invrescale
