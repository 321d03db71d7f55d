#pragma once

#include <stdexcept>
#include <string>

namespace jndlc {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit together (divisibility, mismatched dims).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a diverged computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An argument outside its documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Invalid combination of configuration keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed container: bad magic, version mismatch, schema violation.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Entropy-coded payload that cannot be decoded (truncated or corrupted).
class DecodeError : public Error {
 public:
  using Error::Error;
};

/// Latent in the wrong quantization mode for the requested operation.
class ModeError : public Error {
 public:
  using Error::Error;
};

/// File system failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A query outside the span of an interpolated curve, or curves that do not overlap.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

}  // namespace jndlc
