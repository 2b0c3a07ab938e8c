#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tdqmc/grid.hpp"
#include "tdqmc/potentials.hpp"
#include "tdqmc/propagator.hpp"
#include "tdqmc/walkers.hpp"

namespace tdqmc {

enum class BathMode { quantum_per_walker, quantum_mean_field, classical_per_walker, classical_mean_field };
enum class BathEngine { grid, gaussian };
// all_oscillators: walker k couples to replica k of every oscillator.
// diagonal: L == M and walker k couples only to oscillator k.
enum class PairingTopology { all_oscillators, diagonal };

std::string to_string(BathMode m);
std::string to_string(BathEngine e);
std::string to_string(PairingTopology t);
BathMode parse_bath_mode(const std::string& s);
BathEngine parse_bath_engine(const std::string& s);
PairingTopology parse_pairing_topology(const std::string& s);

/// Inverse temperature in hartree^-1 (k_B = 1); beta = +inf is T = 0.
struct Temperature {
  double beta = std::numeric_limits<double>::infinity();

  static Temperature zero() { return {}; }
  static Temperature from_beta(double beta);
  static Temperature from_temperature(double temperature);  // T in hartree; 0 -> beta = inf

  bool is_zero() const noexcept { return beta == std::numeric_limits<double>::infinity(); }
  double temperature() const noexcept { return is_zero() ? 0.0 : 1.0 / beta; }
  /// Bose occupation 1 / (exp(beta omega) - 1).
  double occupation(double omega) const noexcept;
};

struct BathSpec {
  std::size_t L = 64;
  double omega_max = 0.6;
  std::vector<double> masses;  // one per oscillator
  CouplingMatrix coupling;
  BathMode mode = BathMode::quantum_per_walker;
  BathEngine engine = BathEngine::gaussian;
  PairingTopology topology = PairingTopology::all_oscillators;
  // grid engine: each oscillator mesh spans +-grid_widths ground widths plus room for displacements
  double grid_widths = 12.0;
  std::size_t grid_points = 241;

  /// Equidistant ladder Omega_j = j omega_max / L, j = 1..L (index 0..L-1 here).
  double frequency(std::size_t j) const noexcept {
    return static_cast<double>(j + 1) * omega_max / static_cast<double>(L);
  }
  std::vector<double> frequencies() const;
  bool quantum() const noexcept {
    return mode == BathMode::quantum_per_walker || mode == BathMode::quantum_mean_field;
  }
  bool per_walker() const noexcept {
    return mode == BathMode::quantum_per_walker || mode == BathMode::classical_per_walker;
  }

  /// Ohmic ladder with unit-shape couplings sqrt(M_j) Omega_j / sqrt(L) times scale.
  static BathSpec ohmic(std::size_t L, double omega_max, double mass, std::size_t n_species,
                        double scale, BathMode mode = BathMode::quantum_per_walker,
                        BathEngine engine = BathEngine::gaussian,
                        PairingTopology topology = PairingTopology::all_oscillators);

  void validate(std::size_t n_walkers) const;
};

struct Resonance {
  std::size_t oscillator;
  std::size_t lower_level;
  std::size_t upper_level;
  double mismatch;
};

/// Oscillator frequencies within margin of a level spacing E_m - E_n.
std::vector<Resonance> detuning_violations(const BathSpec& spec, std::span<const double> levels,
                                           double margin);

/// Coherent oscillator state; the width is pinned to the ground width 1/sqrt(2 M Omega).
/// Wave: exp(i phase + i p_mean (X - x_mean) - M Omega (X - x_mean)^2 / 2).
struct CoherentState {
  double x_mean = 0.0;
  double p_mean = 0.0;
  double phase = 0.0;
};

struct PhasePoint {
  double x = 0.0;
  double p = 0.0;
};

/// Implicit-midpoint step of X' = P/M, P' = -M Omega^2 X - c r with the system
/// coordinate r frozen. For a linear system this is the Cayley rotation by
/// 2 atan(Omega dt / 2) about the displaced equilibrium -c r / (M Omega^2); the
/// quadratic energy is conserved exactly.
CoherentState bath_step_gaussian(CoherentState s, double drive, double dt, double omega, double mass,
                                 double c);
PhasePoint classical_bath_step(PhasePoint s, double drive, double dt, double omega, double mass,
                               double c);

/// Grid-engine reference: one propagator step under bilinear_coupling(drive, X).
GuideWave bath_step_grid(const GuideWave& state, double drive, double dt, double omega, double mass,
                         double c, TimeMode mode = TimeMode::real_time);

GuideWave coherent_wave(const Grid& grid, const CoherentState& s, double omega, double mass);

/// Mean position and momentum of a wave on a bath grid.
PhasePoint wave_moments(const GuideWave& w, double mass);

/// Per-(replica, oscillator) state of the bath for every mode and engine.
///
/// Replica r pairs with system walker r in per-walker modes; mean-field modes
/// have a single replica. Slot s of replica r is oscillator `oscillator(r, s)`:
/// every oscillator for all_oscillators pairing, only oscillator r for diagonal.
class BathState {
 public:
  BathState(BathSpec spec, std::size_t n_walkers);

  const BathSpec& spec() const noexcept { return spec_; }
  std::size_t walkers() const noexcept { return m_; }
  std::size_t replicas() const noexcept { return replicas_; }
  std::size_t slots() const noexcept { return slots_; }
  std::size_t oscillator(std::size_t r, std::size_t s) const noexcept {
    return spec_.topology == PairingTopology::diagonal ? r : s;
  }
  std::size_t index(std::size_t r, std::size_t s) const noexcept { return r * slots_ + s; }
  /// Replica serving system walker k.
  std::size_t replica_of(std::size_t k) const noexcept { return spec_.per_walker() ? k : 0; }

  // Phase-space centres (gaussian engine, classical modes). Size replicas * slots.
  std::vector<double> x;
  std::vector<double> p;
  std::vector<double> phase;
  // Bohmian walker offsets from the coherent centre, quantum modes only.
  // Size walkers * slots for mean-field (one bath walker per system walker), else replicas * slots.
  std::vector<double> offset;
  // Grid engine.
  std::vector<Grid> grids;        // one per oscillator
  std::vector<GuideWave> waves;   // replicas * slots
  std::vector<double> walker;     // tracked bath walker positions, same layout as offset
  std::vector<double> offset_field;  // per replica sum_j C_j0 offset_j (gaussian, all-oscillator pairing)

  // Rotation constants for the last dt seen by advance_bath, reused while dt is unchanged.
  struct SweepConstants {
    double dt = 0.0;
    std::vector<double> cs, sn, mw, inv_mw, inv_mw2;
    std::vector<double> shift;     // -scale C_j0 / (M Omega^2)
    std::vector<double> sn_inv_mw;  // sin / (M Omega)
    std::vector<double> mw_sn;      // M Omega sin
  };
  SweepConstants sweep;

  std::size_t offset_rows() const noexcept {
    return spec_.mode == BathMode::quantum_mean_field ? m_ : replicas_;
  }

 private:
  BathSpec spec_;
  std::size_t m_;
  std::size_t replicas_;
  std::size_t slots_;
};

/// Thermal initial bath. Quantum modes draw coherent amplitudes from the
/// Glauber-P distribution with <|alpha|^2> = n(Omega, beta):
///   x_mean = sqrt(2/(M Omega)) Re alpha, p_mean = sqrt(2 M Omega) Im alpha,
/// and bath walker offsets from the coherent density (variance 1/(2 M Omega)).
/// Classical modes draw (X, P) from the classical Boltzmann distribution.
BathState sample_thermal_initial(const BathSpec& spec, const Temperature& temp,
                                 std::size_t n_walkers, std::uint64_t seed);

/// Re-draws the thermal part of every centre around the equilibrium set by the
/// current system walkers; offsets are kept.
void resample_thermal(BathState& state, const Temperature& temp, const WalkerEnsemble& system,
                      std::uint64_t seed);

/// sum_s scale c(osc, i) R^k_osc: the coefficient of x in the bath potential on
/// wave k of species i. Mean-field modes average the bath walkers over k.
double bath_field_coefficient(const BathState& state, std::size_t k, std::size_t species);

/// The additive potential coefficient * x on the system grid. The R^2 term is
/// constant in x and dropped.
RealField bath_force_on_system(const BathState& state, const Grid& system_grid, std::size_t k,
                               std::size_t species);

/// R_j^k: centre plus frozen offset (gaussian), tracked walker (grid), X (classical).
double bath_walker_position(const BathState& state, std::size_t j, std::size_t k);

/// Drive on oscillator `osc` from replica r's system walkers: sum_i c(osc, i) r_i.
/// (The effective coupling scale is folded in.)
double bath_drive(const BathState& state, const WalkerEnsemble& system, std::size_t r,
                  std::size_t osc);

/// Advance every replica one real-time step with the system walkers frozen at
/// `system` (pass the midpoint positions for second order).
/// When `field` is non-empty (one entry per replica) and the coupling is the
/// same for every species, the sweep also writes each replica's field
/// coefficient after the step and returns true; otherwise `field` is untouched.
bool advance_bath(BathState& state, const WalkerEnsemble& system, double dt,
                  std::span<double> field = {});

/// Imaginary-time relaxation: centres decay as exp(-Omega dtau) toward the
/// displaced minimum; grid waves take an imaginary-time propagator step.
void relax_bath(BathState& state, const WalkerEnsemble& system, double dtau, std::uint64_t seed,
                std::size_t step);

}  // namespace tdqmc
