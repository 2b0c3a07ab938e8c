#include "tdqmc/errors.hpp"

#include <sstream>

namespace tdqmc {

namespace {

template <typename... Args>
std::string concat(const Args&... args) {
  std::ostringstream os;
  os.precision(10);
  (os << ... << args);
  return os.str();
}

}  // namespace

WalkerEscapedError::WalkerEscapedError(double x, double x_min, double x_max)
    : Error(concat("walker escaped the grid: x = ", x, " outside [", x_min, ", ", x_max, "]")),
      position_(x) {}

NodeError::NodeError(double x, double magnitude)
    : Error(concat("evaluation at a wave node: |psi(", x, ")| = ", magnitude)), position_(x) {}

TruncationError::TruncationError(double beta, double truncation_weight)
    : Error(concat("retained states insufficient for beta = ", beta,
                   ": truncation weight exp(-beta (E_max - E_0)) = ", truncation_weight,
                   " exceeds 1e-6; raise the energy cutoff or the state count")),
      weight_(truncation_weight) {}

BracketError::BracketError(double lo, double hi, const std::string& detail)
    : Error(concat("no sign change of the calibration residual on scale range [", lo, ", ", hi,
                   "]: ", detail)) {}

SimulationError::SimulationError(const std::string& phase, std::size_t step, std::size_t species,
                                 std::size_t walker, const std::string& cause)
    : Error(concat(phase, " failed at step ", step, " (species ", species, ", walker ", walker,
                   "): ", cause)),
      step_(step),
      species_(species),
      walker_(walker) {}

}  // namespace tdqmc
