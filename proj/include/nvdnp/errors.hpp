#pragma once

#include <stdexcept>
#include <string>

namespace nvdnp {

// Invalid input or configuration: maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure during a computation: maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NotHermitianError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IntegratorStepError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConsistencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InfeasibleScheduleError : public ConfigError {
 public:
  InfeasibleScheduleError(const std::string& what, double minimum_rabi_mhz)
      : ConfigError(what), minimum_rabi_mhz_(minimum_rabi_mhz) {}
  double minimum_rabi_mhz() const { return minimum_rabi_mhz_; }

 private:
  double minimum_rabi_mhz_;
};

class UnsupportedHarmonicError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class StabilityError : public NumericalError {
 public:
  StabilityError(const std::string& what, double max_dt)
      : NumericalError(what), max_dt_(max_dt) {}
  double max_dt() const { return max_dt_; }

 private:
  double max_dt_;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace nvdnp
