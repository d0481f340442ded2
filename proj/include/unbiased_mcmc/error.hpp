#pragma once

#include <stdexcept>
#include <string>

namespace umcmc {

/// Invalid distribution or kernel parameter (non-positive scale, bad
/// normalization, non-SPD covariance, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A precondition on run lengths or inputs was violated.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite gradient, log-density, or similar.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A kernel needs something the target does not provide (e.g. a gradient).
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The rejection loop of the maximal coupling exceeded its guard. Almost
/// always means the density and sampler handed in describe different laws.
class RunawayCouplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coupled chains did not meet within max_iter. Typed subclasses carry the
/// partial run; see estimator.hpp.
class TimeoutError : public std::runtime_error {
 public:
  TimeoutError(const std::string& what, long long iterations)
      : std::runtime_error(what), iterations_(iterations) {}
  long long iterations() const noexcept { return iterations_; }

 private:
  long long iterations_;
};

/// Malformed experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed data file.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace umcmc
