#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdqmc/bath.hpp"
#include "tdqmc/config.hpp"
#include "tdqmc/grid.hpp"
#include "tdqmc/rng.hpp"
#include "tdqmc/walkers.hpp"

namespace tdqmc {

struct EnergySample {
  std::size_t step = 0;
  double tau = 0.0;
  double energy = 0.0;
};

struct DipoleSample {
  double t = 0.0;
  double x_mean = 0.0;
  double envelope = 0.0;  // NaN before the first post-pulse maximum
};

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<EnergySample> energy_trace;
  RealField density;
  RealField oracle_density;
  std::vector<DipoleSample> dipole;
  std::map<std::string, double> timings;  // seconds per phase
  std::map<std::string, double> metrics;
  std::vector<std::pair<std::string, std::string>> config;
  std::optional<double> calibrated_scale;
};

/// Everything the self-consistent loop carries between steps.
struct PreparedState {
  std::vector<std::vector<GuideWave>> waves;  // [species][walker]
  WalkerEnsemble walkers{1, 1};
  std::optional<BathState> bath;
  std::vector<double> sigma;                   // per species
  std::vector<RealField> static_potential;     // per species
  std::vector<RngStream> rng;                  // [species * M + walker]
  RunReport report;
};

/// Wall-clock split of the stepping loop, accumulated in seconds.
struct StepTimings {
  double effective_potential = 0.0;
  double walker_loop = 0.0;
  double bath = 0.0;
  double observables = 0.0;
  std::size_t steps = 0;
};

/// One self-consistent time step at a time, over a PreparedState it does not own.
///
/// Imaginary step: potentials from the current walkers and bath, wave step,
/// Metropolis resampling, optional bath relaxation, correlation lengths, then
/// the ensemble energy. Real step: potentials (plus the pulse at the half
/// step), Crank-Nicolson wave step with Heun walker drift, bath advance with
/// midpoint walker positions, correlation lengths.
class Simulation {
 public:
  Simulation(const SimConfig& cfg, PreparedState& state);

  /// Returns the ensemble energy after the step.
  double imaginary_step(bool relax_bath);
  /// Advances by dt_real from time t; returns Tr(x rho) summed over species.
  double real_step(double t);

  double energy() const;
  /// (1/M) sum_k <phi^k|H^k|phi^k> with each wave's own assembled potential,
  /// as of the last imaginary step. Free of walker sampling noise, so it is
  /// the convergence signal of the preparation.
  double wave_energy() const noexcept { return wave_energy_; }
  double dipole() const;
  /// V_S + effective potentials + bath field + field * x for wave (species, k).
  RealField assembled_potential(std::size_t species, std::size_t k, double field = 0.0);

  const StepTimings& timings() const noexcept { return timings_; }
  std::size_t steps_taken() const noexcept { return step_; }

 private:
  void refresh_effective_potentials();
  void refresh_bath_coefficients();
  void update_sigma();
  void fill_potential(std::size_t species, std::size_t k, double field, std::span<double> out) const;

  const SimConfig& cfg_;
  PreparedState& st_;
  std::vector<Eigen::MatrixXd> veff_;         // per species, n x M; empty when N == 1
  std::vector<std::vector<double>> bath_coef_;  // [species][walker]
  StepTimings timings_;
  std::size_t step_ = 0;
  double wave_energy_ = 0.0;
  bool coef_fresh_ = false;  // bath_coef_ already written by the last bath advance
};

/// Fresh guide waves and walkers, bath sampled at cfg.temp; no stepping.
PreparedState initial_state(const SimConfig& cfg);

/// Imaginary-time preparation. Stage one relaxes waves, walkers and bath
/// together until the windowed wave energy settles. With a bath, its thermal part
/// is then re-sampled around the relaxed equilibrium and the waves settle
/// again under the frozen bath. Errors carry the step and walker.
PreparedState prepare_ground(const SimConfig& cfg);

struct ThermalResult {
  RunReport report;
  double fwhm_tdqmc = 0.0;
  double fwhm_oracle = 0.0;
  double peak_tdqmc = 0.0;
  double peak_oracle = 0.0;
  double relative_fwhm_error() const { return (fwhm_tdqmc - fwhm_oracle) / fwhm_oracle; }
};

/// Diagonal density of the prepared ensemble next to the oracle thermal
/// density at the same beta (one- or two-electron oracle by species count).
ThermalResult run_thermal_density(const SimConfig& cfg);
ThermalResult thermal_density_of(const SimConfig& cfg, PreparedState state);

/// Oracle thermal density for cfg's system on cfg's grid.
RealField oracle_density(const SimConfig& cfg, const Temperature& temp);

struct EnvelopeResult {
  double ratio = 0.0;  // last lobe maximum / first lobe maximum
  double first_peak = 0.0;
  double last_peak = 0.0;
  std::size_t lobes = 0;
  std::vector<double> running;  // per sample, NaN before the first lobe
};

/// Lobe maxima of y = x_mean - x_mean(0) after t_start, one maximum per
/// positive excursion between sign changes.
EnvelopeResult envelope(std::span<const double> t, std::span<const double> x_mean, double t_start);

struct DipoleResult {
  RunReport report;
  EnvelopeResult envelope;
};

DipoleResult run_dipole_dynamics(const SimConfig& cfg);
DipoleResult dipole_dynamics_of(const SimConfig& cfg, PreparedState state);

struct CalibrationResult {
  double scale = 0.0;
  double residual = 0.0;  // (FWHM_tdqmc - FWHM_oracle) / FWHM_oracle at the result
  std::size_t evaluations = 0;
  std::vector<std::pair<double, double>> probes;  // (scale, FWHM_tdqmc)
  double fwhm_oracle = 0.0;
};

/// Bisection on the coupling scale for the TDQMC FWHM to match the oracle at
/// beta_ref. Every probe reuses cfg.seed. The bracket is widened by doubling
/// up to calibration.scale_max; BracketError if no sign change is found.
CalibrationResult calibrate_coupling(const SimConfig& cfg, double beta_ref);

/// Largest L2 distance between any two waves; O(M^2 n).
double max_pairwise_distance(std::span<const GuideWave> waves);

/// Applies TDQMC_THREADS to the OpenMP runtime; returns the active thread count.
int configure_threads_from_env();

}  // namespace tdqmc
