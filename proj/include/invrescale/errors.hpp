#pragma once

#include <stdexcept>
#include <string>

namespace invrescale {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& tensor_name, const std::string& context)
      : Error("non-finite value in '" + tensor_name + "' (" + context + ")"),
        tensor_name_(tensor_name) {}

  const std::string& tensor_name() const noexcept { return tensor_name_; }

 private:
  std::string tensor_name_;
};

// SVD did not reach the off-diagonal tolerance inside the sweep budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Image file with a bit depth or color type outside 8-bit RGB/RGBA.
class UnsupportedImageError : public IoError {
 public:
  using IoError::IoError;
};

class CorruptFileError : public IoError {
 public:
  using IoError::IoError;
};

// Checkpoint decoding failures; each cause has its own type.
class CheckpointError : public IoError {
 public:
  using IoError::IoError;
};

class BadMagicError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class UnknownVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class UnknownDtypeError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class TruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

}  // namespace invrescale
