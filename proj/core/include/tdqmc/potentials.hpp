#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tdqmc/grid.hpp"

namespace tdqmc {

/// -depth / sqrt(softening + x^2), the 1D soft-core model atom.
struct SoftCoulombParams {
  double depth = 1.0;
  double softening = 1.0;
};

/// strength / sqrt(softening + (x1 - x2)^2), the soft electron-electron repulsion.
struct PairPotentialParams {
  double strength = 0.2;
  double softening = 1.0;
};

enum class KernelKind { gaussian };

/// Correlation length sigma = max(alpha * std(walkers), sigma_floor).
struct KernelConfig {
  double alpha = 1.0;
  double sigma_floor = 1e-3;
  KernelKind kind = KernelKind::gaussian;
};

/// L x N system-bath couplings; the effective constant is scale * c(j, i).
struct CouplingMatrix {
  Eigen::MatrixXd c;
  double scale = 0.0;

  double operator()(std::size_t oscillator, std::size_t species) const {
    return scale * c(static_cast<Eigen::Index>(oscillator), static_cast<Eigen::Index>(species));
  }
  std::size_t oscillators() const noexcept { return static_cast<std::size_t>(c.rows()); }
  std::size_t species() const noexcept { return static_cast<std::size_t>(c.cols()); }

  /// c(j, i) = sqrt(M_j) * Omega_j / sqrt(L), the same for every species.
  static CouplingMatrix ohmic(std::span<const double> omega, std::span<const double> masses,
                              std::size_t n_species, double scale);
};

double soft_coulomb(double x, const SoftCoulombParams& p = {});
double pair_potential(double x1, double x2, const PairPotentialParams& p = {});

/// (mass omega^2 / 2) X^2 + c x X
double bilinear_coupling(double x, double X, double omega, double mass, double c);

/// exp(-r^2 / (2 sigma^2)); unnormalized, only ever used in self-normalizing ratios.
double gaussian_kernel(double r, double sigma);

/// Throws DegenerateEnsembleError for fewer than two walkers.
double correlation_length(std::span<const double> walkers, const KernelConfig& cfg);

RealField soft_coulomb_field(const Grid& grid, const SoftCoulombParams& p = {});
RealField harmonic_field(const Grid& grid, double omega, double mass = 1.0);

/// Monte Carlo convolution of the pair potential with the kernel centred on
/// source walker k:
///   V_eff(x) = sum_l V(x, r_l) K(r_l - r_k, sigma) / sum_l K(r_l - r_k, sigma)
/// The self term keeps the denominator >= 1.
RealField effective_potential(const Grid& grid, std::span<const double> source_walkers,
                              std::size_t k, double sigma, const PairPotentialParams& pair);

/// All M columns of effective_potential at once (n x M), evaluated as one
/// dense product of the pair table with the normalized kernel weights.
Eigen::MatrixXd effective_potentials(const Grid& grid, std::span<const double> source_walkers,
                                     double sigma, const PairPotentialParams& pair);

}  // namespace tdqmc
