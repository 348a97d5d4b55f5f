#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace setmember {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an operation touches a set whose bounds have crossed.
/// When the failure comes out of an estimator step, `node` and `instant`
/// identify the offending local set.
class EmptySetError : public Error {
 public:
  explicit EmptySetError(const std::string& what,
                         std::optional<std::size_t> node = std::nullopt,
                         std::optional<long> instant = std::nullopt)
      : Error(what), node_(node), instant_(instant) {}

  std::optional<std::size_t> node() const noexcept { return node_; }
  std::optional<long> instant() const noexcept { return instant_; }

 private:
  std::optional<std::size_t> node_;
  std::optional<long> instant_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class InvalidSize : public Error {
 public:
  using Error::Error;
};

class AsymmetricGraph : public Error {
 public:
  using Error::Error;
};

class BatchSizeMismatch : public Error {
 public:
  using Error::Error;
};

class WrongNode : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace setmember
