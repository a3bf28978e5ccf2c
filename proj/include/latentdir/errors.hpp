#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace latentdir {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of the operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on sizes or counts was violated (n = 0, empty list, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class SymmetryError : public Error {
 public:
  using Error::Error;
};

class NotPsdError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// Requested component count exceeds what the data supports.
class RankError : public Error {
 public:
  RankError(const std::string& what, std::size_t usable)
      : Error(what + " (usable components: " + std::to_string(usable) + ")"),
        usable_(usable) {}

  std::size_t usable() const noexcept { return usable_; }

 private:
  std::size_t usable_;
};

/// Malformed, truncated, tampered or version-mismatched file.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t byte_offset = 0)
      : Error(what), offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace latentdir
