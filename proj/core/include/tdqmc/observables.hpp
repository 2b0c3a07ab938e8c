#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tdqmc/grid.hpp"
#include "tdqmc/potentials.hpp"
#include "tdqmc/walkers.hpp"

namespace tdqmc {

/// rho(x, x') = (1/M) sum_k conj(phi_k(x)) phi_k(x'), dense n x n.
class DensityMatrix {
 public:
  DensityMatrix(Grid grid, Eigen::MatrixXcd rho);

  const Grid& grid() const noexcept { return grid_; }
  const Eigen::MatrixXcd& matrix() const noexcept { return rho_; }

  /// dx * sum rho(x_i, x_i)
  double trace() const;
  /// dx^2 Tr(rho^2)
  double purity() const;
  /// max |rho - rho^dagger|
  double hermiticity_error() const;
  /// Smallest eigenvalue of dx * rho restricted to every stride-th point.
  double min_eigenvalue(std::size_t stride = 4) const;

 private:
  Grid grid_;
  Eigen::MatrixXcd rho_;
};

/// Throws GridMismatchError if the waves live on different grids.
DensityMatrix build_density_matrix(std::span<const GuideWave> waves);

RealField diagonal_density(const DensityMatrix& rho);
/// Streaming form: (1/M) sum_k |phi_k|^2 without materializing rho.
RealField diagonal_density(std::span<const GuideWave> waves);

/// dx * sum x rho(x, x)
double dipole_moment(const DensityMatrix& rho);
double dipole_moment(std::span<const GuideWave> waves);

/// Pair of species coupled through a pair potential in the energy estimator.
struct SpeciesTerms {
  double mass = 1.0;
  std::span<const GuideWave> waves;     // one per walker
  std::span<const double> potential;    // static one-body potential V_S on the grid
};

/// Walker-averaged estimator
///   E = (1/M) sum_k [ sum_i ( -(1/2m_i) lap(phi_i^k)/phi_i^k + V_S ) (r_i^k)
///                     + sum_{i>j} V_ee(r_i^k, r_j^k) ].
/// Node evaluations propagate as NodeError.
double ensemble_energy(const WalkerEnsemble& walkers, std::span<const SpeciesTerms> species,
                       const PairPotentialParams& pair);

/// Per-walker terms of ensemble_energy, in walker order.
std::vector<double> walker_energies(const WalkerEnsemble& walkers,
                                    std::span<const SpeciesTerms> species,
                                    const PairPotentialParams& pair);

using HamiltonianApply = std::function<void(std::span<const Complex>, std::span<Complex>)>;

/// Tr(rho H) with H supplied as an operator on grid functions.
double thermal_energy_from_dm(const DensityMatrix& rho, const HamiltonianApply& apply);

/// Full width at half maximum of a sampled density, half-max crossings
/// located by linear interpolation on either side of the peak.
double fwhm(const Grid& grid, std::span<const double> density);

/// Fixed-topology pairwise sum; the result does not depend on thread count.
double pairwise_sum(std::span<const double> values);

}  // namespace tdqmc
