#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tdqmc/grid.hpp"

namespace tdqmc {

enum class TimeMode { real_time, imaginary_time };

struct StepParams {
  double dt = 0.01;
  double mass = 1.0;
  TimeMode mode = TimeMode::real_time;
};

/// Scratch buffers for the tridiagonal solve; one per thread in hot loops.
struct StepWorkspace {
  ComplexField rhs;
  ComplexField c_prime;
};

/// One step of the one-body Schrodinger equation with H = -lap/(2m) + V.
///
/// Real time: Crank-Nicolson (implicit midpoint), exactly unitary on the
/// Dirichlet grid. Imaginary time: implicit Euler, (1 + dt H) w' = w, then
/// renormalized to unit norm; the damping factor 1/(1 + dt E) is monotone in E
/// so the energy never increases for a static potential.
///
/// A time-dependent potential should be sampled at the half-step time by the
/// caller. Throws UnstableStepError if the solve produces non-finite values.
GuideWave step(const GuideWave& w, std::span<const double> potential, const StepParams& p);
void step_in_place(GuideWave& w, std::span<const double> potential, const StepParams& p,
                   StepWorkspace& ws);

/// Re[-(1/2m) lap(w)/w](x) + V(x), with stencil values linearly interpolated.
/// Throws NodeError when |w(x)| < 1e-12.
double local_energy(const GuideWave& w, std::span<const double> potential, double x, double mass);

/// <w|H|w> / <w|w> on the grid.
double expectation_energy(const GuideWave& w, std::span<const double> potential, double mass);

/// Applies H = -lap/(2m) + V to a complex field.
void apply_hamiltonian(const Grid& grid, std::span<const double> potential, double mass,
                       std::span<const Complex> f, std::span<Complex> out);

using PotentialProvider = std::function<RealField(std::size_t step)>;

struct GroundStateResult {
  GuideWave wave;
  std::vector<double> energy_trace;  // entry 0 is the starting energy
  std::size_t steps = 0;
};

/// Imaginary-time relaxation until the window-averaged energy changes by less
/// than tol between windows ending window steps apart, or max_steps. The
/// average at step s runs over the last `window` trace entries up to s.
/// Throws ConvergenceError (carrying the trace) when max_steps is exhausted.
GroundStateResult converge_ground(GuideWave w0, const PotentialProvider& potential,
                                  const StepParams& p, double tol, std::size_t max_steps,
                                  std::size_t window = 50);

/// True once the windowed averages of the trace have settled to within tol.
bool window_converged(std::span<const double> trace, std::size_t window, double tol);

}  // namespace tdqmc
