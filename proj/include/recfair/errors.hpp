#pragma once

#include <stdexcept>
#include <string>

namespace recfair {

/// Malformed or inconsistent input data (files, records, datasets).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid run configuration (bad JSON, missing paths, out-of-range values).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training produced non-finite loss or parameters. `epoch()` is the first
/// offending epoch, or -1 when the failure is not tied to a single epoch
/// (e.g. every grid configuration failed).
class TrainingDivergence : public std::runtime_error {
 public:
  TrainingDivergence(int epoch, const std::string& msg)
      : std::runtime_error(msg), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace recfair
