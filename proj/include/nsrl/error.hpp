#pragma once

#include <stdexcept>
#include <string>

namespace nsrl {

/// Input violates a documented invariant (non-stochastic row, bad index, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Experiment or agent configuration is inconsistent.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested metric or operation is not defined for this setting.
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace nsrl
