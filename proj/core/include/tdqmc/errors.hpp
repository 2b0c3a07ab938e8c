#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdqmc {

// Base of every error raised by the library. Subclasses name the failure;
// the message carries the numbers needed to diagnose it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatchError : public Error {
 public:
  using Error::Error;
};

// A walker (or evaluation point) left the simulation box.
class WalkerEscapedError : public Error {
 public:
  WalkerEscapedError(double x, double x_min, double x_max);
  double position() const noexcept { return position_; }

 private:
  double position_;
};

// Division by a wave amplitude that is numerically zero.
class NodeError : public Error {
 public:
  NodeError(double x, double magnitude);
  double position() const noexcept { return position_; }

 private:
  double position_;
};

class DegenerateEnsembleError : public Error {
 public:
  using Error::Error;
};

// Linear solve produced non-finite values.
class UnstableStepError : public Error {
 public:
  using Error::Error;
};

// Iteration hit its step budget. Carries whatever trace was recorded.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

// Retained eigenstates cannot represent the requested temperature.
class TruncationError : public Error {
 public:
  TruncationError(double beta, double truncation_weight);
  double truncation_weight() const noexcept { return weight_; }

 private:
  double weight_;
};

class KrylovError : public Error {
 public:
  KrylovError(const std::string& what, std::size_t iterations, double max_residual)
      : Error(what), iterations_(iterations), max_residual_(max_residual) {}
  std::size_t iterations() const noexcept { return iterations_; }
  double max_residual() const noexcept { return max_residual_; }

 private:
  std::size_t iterations_;
  double max_residual_;
};

class BracketError : public Error {
 public:
  BracketError(double lo, double hi, const std::string& detail);
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Failure inside the self-consistent loop, tagged with where it happened.
class SimulationError : public Error {
 public:
  SimulationError(const std::string& phase, std::size_t step, std::size_t species,
                  std::size_t walker, const std::string& cause);
  std::size_t step() const noexcept { return step_; }
  std::size_t species() const noexcept { return species_; }
  std::size_t walker() const noexcept { return walker_; }

 private:
  std::size_t step_;
  std::size_t species_;
  std::size_t walker_;
};

}  // namespace tdqmc
