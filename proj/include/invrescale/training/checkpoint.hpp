#pragma once

// Binary checkpoint layout (all integers little-endian):
//   "FEIR" | u32 version = 1 | u32 count |
//   count × { u32 name_len | name (UTF-8) | u8 dtype (0 = f32 LE) | u8 rank |
//             rank × u32 extent | row-major data }

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "invrescale/numerics/tensor.hpp"

namespace invrescale {

inline constexpr std::uint8_t kCheckpointMagic[4] = {0x46, 0x45, 0x49, 0x52};
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 0;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  void need(std::size_t n, const char* what) const {
    if (n > size_ - pos_)
      throw TruncatedError("checkpoint truncated while reading " + std::string(what) + " at byte " +
                           std::to_string(pos_));
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return data_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  const std::uint8_t* take(std::size_t n, const char* what) {
    need(n, what);
    const auto* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::size_t remaining() const { return size_ - pos_; }
  std::size_t position() const { return pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const NamedTensors& tensors) {
  static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);
  detail::ByteWriter w;
  w.raw(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (t.rank() > 255) throw ShapeError("checkpoint: rank above 255 for '" + name + "'");
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    w.u8(kDtypeF32);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.dims()) {
      if (d > UINT32_MAX) throw ShapeError("checkpoint: extent does not fit 32 bits in '" + name + "'");
      w.u32(static_cast<std::uint32_t>(d));
    }
    for (float v : t.values()) w.u32(std::bit_cast<std::uint32_t>(v));
  }
  return std::move(w.bytes());
}

inline NamedTensors decode_checkpoint(const std::uint8_t* data, std::size_t size) {
  detail::ByteReader r(data, size);
  if (size < 4 || std::memcmp(data, kCheckpointMagic, 4) != 0) {
    // A prefix of the magic is a truncated checkpoint, anything else is not one.
    if (size < 4 && std::memcmp(data, kCheckpointMagic, size) == 0)
      throw TruncatedError("checkpoint truncated inside the magic bytes");
    throw BadMagicError("not a checkpoint: bad magic bytes");
  }
  r.take(4, "magic");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) throw UnknownVersionError("unknown checkpoint version " + std::to_string(version));
  const std::uint32_t count = r.u32("tensor count");
  NamedTensors out;
  for (std::uint32_t n = 0; n < count; ++n) {
    const std::uint32_t name_len = r.u32("name length");
    const auto* name = r.take(name_len, "name");
    std::string key(reinterpret_cast<const char*>(name), name_len);
    const std::uint8_t dtype = r.u8("dtype");
    if (dtype != kDtypeF32)
      throw UnknownDtypeError("unknown dtype code " + std::to_string(dtype) + " for '" + key + "'");
    const std::uint8_t rank = r.u8("rank");
    if (rank == 0) throw CheckpointError("tensor '" + key + "' has rank 0");
    Shape dims(rank);
    std::uint64_t count_elems = 1;
    for (auto& d : dims) {
      d = r.u32("extent");
      if (d == 0) throw CheckpointError("tensor '" + key + "' has a zero extent");
      count_elems *= d;
      if (count_elems > r.remaining()) count_elems = r.remaining() + 1;  // saturate, reported below
    }
    const auto* raw = r.take(count_elems * 4, "tensor data");
    Tensor t(dims);
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[4 * i + b]) << (8 * b);
      t[i] = std::bit_cast<float>(bits);
    }
    out.emplace_back(std::move(key), std::move(t));
  }
  if (r.remaining() != 0) throw CheckpointError("checkpoint has " + std::to_string(r.remaining()) + " trailing bytes");
  return out;
}

inline NamedTensors decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  return decode_checkpoint(bytes.data(), bytes.size());
}

inline void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors) {
  const auto bytes = encode_checkpoint(tensors);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f), {});
}

inline NamedTensors load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

}  // namespace invrescale
