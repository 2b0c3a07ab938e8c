#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tdqmc/bath.hpp"
#include "tdqmc/grid.hpp"
#include "tdqmc/potentials.hpp"

namespace tdqmc {

/// Eigenpairs of a finite-difference Hamiltonian. Column n of `states` is
/// psi_n sampled on the grid (n points for one particle, n*n with x1 fastest
/// for two), normalized so that dx^d * sum psi^2 = 1.
struct SpectralDecomposition {
  Grid grid;
  std::size_t particles = 1;
  std::vector<double> energies;
  Eigen::MatrixXd states;
  double max_residual = 0.0;

  std::size_t count() const noexcept { return energies.size(); }
};

/// All eigenpairs of the tridiagonal -lap/(2m) + V with E < cutoff, from a
/// direct symmetric tridiagonal eigensolve. The default cutoff keeps enough
/// continuum-like box states for thermal sums down to beta ~ 5.
SpectralDecomposition diagonalize_1e(const Grid& grid, std::span<const double> potential,
                                     double mass = 1.0, double cutoff = 2.5);

struct KrylovOptions {
  std::size_t states = 10;
  std::size_t max_iterations = 800;
  double tolerance = 1e-8;  // Ritz residual estimate
  std::uint64_t seed = 7;
};

/// Lowest eigenpairs of h(x1) + h(x2) + V_pair(x1, x2) on the product grid by
/// Lanczos with full reorthogonalization; the operator is applied matrix-free.
/// Throws KrylovError if the requested states have not converged in time.
SpectralDecomposition diagonalize_2e(const Grid& grid, std::span<const double> potential,
                                     const PairPotentialParams& pair, const KrylovOptions& opt = {},
                                     double mass = 1.0);

/// Matrix-free two-particle Hamiltonian; psi and out are n*n, x1 fastest.
void apply_hamiltonian_2e(const Grid& grid, std::span<const double> potential,
                          const PairPotentialParams& pair, double mass, std::span<const double> psi,
                          std::span<double> out);

/// Boltzmann-weighted diagonal density Z^-1 sum_n |psi_n(x)|^2 exp(-beta E_n).
/// Two-particle decompositions return the reduced single-coordinate density.
/// Throws TruncationError if exp(-beta (E_max - E_0)) >= 1e-6.
RealField thermal_density(const SpectralDecomposition& dec, const Temperature& temp);

/// Q^-1 sum_n E_n exp(-beta E_n) over the retained states.
double thermal_average_energy(const SpectralDecomposition& dec, const Temperature& temp);

/// Bloch-equation result for the oscillator: sqrt(a/pi) exp(-a x^2),
/// a = M Omega tanh(beta Omega / 2).
RealField harmonic_thermal_density(const Grid& grid, double omega, double mass,
                                   const Temperature& temp);

/// (Omega/2) coth(beta Omega / 2) = Omega (n + 1/2).
double harmonic_thermal_energy(double omega, const Temperature& temp);

}  // namespace tdqmc
