#pragma once

#include <stdexcept>
#include <string>

namespace risv2x {

/// Invalid or inconsistent configuration (bad key, out-of-range value).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Environment protocol misuse, e.g. stepping a finished episode.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite loss or gradient during training.
class TrainingFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two parties disagree on a vector or network dimension (e.g. checkpoint vs config).
class DimensionMismatch : public std::runtime_error {
 public:
  DimensionMismatch(const std::string& what, std::size_t expected, std::size_t actual)
      : std::runtime_error(what + ": expected dimension " + std::to_string(expected) +
                           ", got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

}  // namespace risv2x
