#pragma once

#include <stdexcept>
#include <string>

namespace gfm {

/// Invalid or inconsistent scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The integrator could not continue: step-size underflow, non-finite state,
/// or step budget exhausted.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// exp(z) of an adaptive gain left the double range; Gamma or epsilon needs
/// retuning.
class GainBlowUp : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

}  // namespace gfm
