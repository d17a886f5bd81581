#pragma once

// Mapping between model/optimizer state and checkpoint tensors. Besides the
// parameters themselves a checkpoint may carry
//   meta.config         config text, one byte per element
//   opt.step            update counter as four 16-bit limbs, low first
//   opt.m.<p>, opt.v.<p> AdamW moments of parameter p

#include <set>
#include <string>

#include "invrescale/invnet/parameters.hpp"
#include "invrescale/training/checkpoint.hpp"
#include "invrescale/training/optimizer.hpp"

namespace invrescale {

inline constexpr const char* kConfigTensor = "meta.config";
inline constexpr const char* kStepTensor = "opt.step";

inline Tensor encode_text(const std::string& text) {
  Tensor t({std::max<std::size_t>(text.size(), 1)});
  t.fill(-1.0f);  // pad marker for empty text
  for (std::size_t i = 0; i < text.size(); ++i) t[i] = static_cast<float>(static_cast<unsigned char>(text[i]));
  return t;
}

inline std::string decode_text(const Tensor& t) {
  std::string out;
  for (float v : t.values()) {
    if (v == -1.0f) continue;
    if (!(v >= 0.0f && v <= 255.0f) || v != static_cast<float>(static_cast<int>(v)))
      throw CheckpointError("text tensor holds a non-byte value");
    out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  return out;
}

inline Tensor encode_u64(std::uint64_t v) {
  Tensor t({4});
  for (int i = 0; i < 4; ++i) t[i] = static_cast<float>((v >> (16 * i)) & 0xFFFFu);
  return t;
}

inline std::uint64_t decode_u64(const Tensor& t) {
  if (t.size() != 4) throw CheckpointError("counter tensor must have 4 limbs");
  std::uint64_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const float limb = t[i];
    if (!(limb >= 0.0f && limb <= 65535.0f) || limb != static_cast<float>(static_cast<int>(limb)))
      throw CheckpointError("counter limb out of range");
    v |= static_cast<std::uint64_t>(limb) << (16 * i);
  }
  return v;
}

inline const Tensor* find_tensor(const NamedTensors& ts, const std::string& name) {
  for (const auto& [n, t] : ts)
    if (n == name) return &t;
  return nullptr;
}

// Parameters in registration order, then optimizer state, then config text.
inline NamedTensors snapshot(const ParameterSet<float>& params, const OptimizerState<float>* st = nullptr,
                             const std::string& config_text = {}) {
  NamedTensors out;
  for (const auto& e : params.entries()) out.emplace_back(e.name, e.var.value());
  if (st) {
    out.emplace_back(kStepTensor, encode_u64(st->step));
    for (const auto& [name, mom] : st->moments) {
      out.emplace_back("opt.m." + name, mom.m);
      out.emplace_back("opt.v." + name, mom.v);
    }
  }
  if (!config_text.empty()) out.emplace_back(kConfigTensor, encode_text(config_text));
  return out;
}

// Loads parameter values (all must be present with matching shapes) and, when
// st is given, the optimizer state. Unrecognised names are an error.
inline void restore(ParameterSet<float>& params, OptimizerState<float>* st, const NamedTensors& ts) {
  std::set<std::string> seen;
  for (const auto& [name, t] : ts) {
    if (!seen.insert(name).second) throw CheckpointError("duplicate tensor '" + name + "'");
    const bool meta = name == kConfigTensor || name == kStepTensor || name.rfind("opt.m.", 0) == 0 ||
                      name.rfind("opt.v.", 0) == 0;
    if (!meta && !params.contains(name)) throw CheckpointError("checkpoint has unknown tensor '" + name + "'");
  }
  for (auto& e : params.entries()) {
    const Tensor* t = find_tensor(ts, e.name);
    if (!t) throw CheckpointError("checkpoint is missing parameter '" + e.name + "'");
    if (t->dims() != e.var.value().dims())
      throw CheckpointError("parameter '" + e.name + "' has shape " + shape_string(t->dims()) + ", expected " +
                            shape_string(e.var.value().dims()));
    e.var.mutable_value() = *t;
  }
  if (!st) return;
  st->moments.clear();
  st->step = 0;
  if (const Tensor* s = find_tensor(ts, kStepTensor)) st->step = decode_u64(*s);
  for (const auto& [name, t] : ts) {
    if (name.rfind("opt.m.", 0) != 0) continue;
    const std::string p = name.substr(6);
    const Tensor* v = find_tensor(ts, "opt.v." + p);
    if (!params.contains(p) || !v || v->dims() != t.dims() || t.dims() != params.get(p).value().dims())
      throw CheckpointError("inconsistent optimizer moments for '" + p + "'");
    st->moments[p] = {t, *v};
  }
}

inline std::string checkpoint_config_text(const NamedTensors& ts) {
  const Tensor* t = find_tensor(ts, kConfigTensor);
  return t ? decode_text(*t) : std::string{};
}

}  // namespace invrescale
