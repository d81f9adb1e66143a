#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ewer {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data: manifests, audio, feature and model files, labels.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value. `key()` names the offending setting.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace ewer
