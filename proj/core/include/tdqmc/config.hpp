#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tdqmc/bath.hpp"
#include "tdqmc/grid.hpp"
#include "tdqmc/oracle.hpp"
#include "tdqmc/potentials.hpp"

namespace tdqmc {

enum class PotentialId { soft_coulomb, harmonic, free };

std::string to_string(PotentialId id);
PotentialId parse_potential_id(const std::string& s);

struct SpeciesSpec {
  double mass = 1.0;
  PotentialId potential = PotentialId::soft_coulomb;
};

/// Unipolar kick E(t) = E0 exp(-((t - t0)/tau)^2), coupled as E(t) x.
struct PulseSpec {
  double amplitude = 0.05;
  double center = 1.5;
  double width = 0.5;

  double field(double t) const;
  /// Time after which the field is below 1e-8 of its peak.
  double end() const { return center + 4.3 * width; }
};

struct BathSettings {
  bool enabled = false;
  std::size_t L = 64;
  double omega_max = 0.6;
  double mass = 1.0;
  double scale = 0.0;
  BathMode mode = BathMode::quantum_per_walker;
  BathEngine engine = BathEngine::gaussian;
  PairingTopology topology = PairingTopology::all_oscillators;
};

struct PrepSettings {
  std::size_t max_steps = 6000;
  double tol = 1e-6;
  std::size_t window = 50;
  std::size_t metropolis_substeps = 10;
  // Initial guide waves exp(-x^2 / (2 w^2)); jitter shifts each walker's
  // centre by jitter * N(0, 1).
  double init_width = 1.5;
  double init_jitter = 0.0;
};

struct CalibrationSettings {
  double beta = 10.0;
  double scale_lo = 0.0;
  double scale_hi = 0.08;
  double scale_max = 1.0;
  double rel_tol = 0.002;
  std::size_t max_iterations = 12;
};

struct OracleSettings {
  double cutoff = 2.5;
  std::size_t points_2e = 201;
  // The 2e spectrum crowds above the bound pair; four states converge reliably.
  KrylovOptions krylov{4, 800, 1e-8, 7};
};

struct SimConfig {
  Grid grid{-10.0, 10.0, 401};
  std::vector<SpeciesSpec> species{SpeciesSpec{}};
  SoftCoulombParams soft_coulomb;
  double harmonic_omega = 1.0;
  PairPotentialParams pair;
  std::size_t M = 500;
  BathSettings bath;
  Temperature temp;
  KernelConfig kernel;
  double dt_imag = 0.01;
  double dt_real = 0.02;
  PrepSettings prep;
  std::size_t n_real_steps = 10000;
  std::uint64_t seed = 1;
  PulseSpec pulse;
  OracleSettings oracle;
  CalibrationSettings calibration;

  /// Throws ConfigError on any inconsistency.
  void validate() const;
  RealField static_potential(std::size_t species) const;
  BathSpec bath_spec() const;
};

/// Flat "key = value" text; '#' starts a comment. Duplicate keys are rejected.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& source = "<config>");
  static ConfigFile load(const std::filesystem::path& path);

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  std::map<std::string, std::string> values_;
};

/// Applies every key on top of the defaults. Unknown keys and malformed values
/// raise ConfigError naming the key.
SimConfig make_config(const ConfigFile& file);

/// Every recognized key with its current value, in schema order.
std::vector<std::pair<std::string, std::string>> echo_config(const SimConfig& cfg);

/// Names of the recognized keys, for documentation and error messages.
std::vector<std::string> config_keys();

}  // namespace tdqmc
