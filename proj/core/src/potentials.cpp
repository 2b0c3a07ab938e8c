#include "tdqmc/potentials.hpp"

#include <algorithm>
#include <cmath>

#include "tdqmc/errors.hpp"
#include "tdqmc/walkers.hpp"

namespace tdqmc {

CouplingMatrix CouplingMatrix::ohmic(std::span<const double> omega, std::span<const double> masses,
                                     std::size_t n_species, double scale) {
  const auto L = static_cast<Eigen::Index>(omega.size());
  CouplingMatrix m;
  m.c.resize(L, static_cast<Eigen::Index>(n_species));
  const double inv_sqrt_l = 1.0 / std::sqrt(static_cast<double>(L));
  for (Eigen::Index j = 0; j < L; ++j) {
    const double cj = std::sqrt(masses[static_cast<std::size_t>(j)]) *
                      omega[static_cast<std::size_t>(j)] * inv_sqrt_l;
    m.c.row(j).setConstant(cj);
  }
  m.scale = scale;
  return m;
}

double soft_coulomb(double x, const SoftCoulombParams& p) {
  return -p.depth / std::sqrt(p.softening + x * x);
}

double pair_potential(double x1, double x2, const PairPotentialParams& p) {
  const double d = x1 - x2;
  return p.strength / std::sqrt(p.softening + d * d);
}

double bilinear_coupling(double x, double X, double omega, double mass, double c) {
  return 0.5 * mass * omega * omega * X * X + c * x * X;
}

double gaussian_kernel(double r, double sigma) { return std::exp(-r * r / (2.0 * sigma * sigma)); }

double correlation_length(std::span<const double> walkers, const KernelConfig& cfg) {
  const auto stats = ensemble_stats(walkers);
  return std::max(cfg.alpha * stats.std, cfg.sigma_floor);
}

RealField soft_coulomb_field(const Grid& grid, const SoftCoulombParams& p) {
  RealField v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = soft_coulomb(grid.x(i), p);
  return v;
}

RealField harmonic_field(const Grid& grid, double omega, double mass) {
  RealField v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = grid.x(i);
    v[i] = 0.5 * mass * omega * omega * x * x;
  }
  return v;
}

RealField effective_potential(const Grid& grid, std::span<const double> source_walkers,
                              std::size_t k, double sigma, const PairPotentialParams& pair) {
  const double rk = source_walkers[k];
  std::vector<double> weight(source_walkers.size());
  double z = 0.0;
  for (std::size_t l = 0; l < source_walkers.size(); ++l) {
    weight[l] = gaussian_kernel(source_walkers[l] - rk, sigma);
    z += weight[l];
  }
  RealField v(grid.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = grid.x(i);
    double s = 0.0;
    for (std::size_t l = 0; l < source_walkers.size(); ++l) {
      s += pair_potential(x, source_walkers[l], pair) * weight[l];
    }
    v[i] = s / z;
  }
  return v;
}

Eigen::MatrixXd effective_potentials(const Grid& grid, std::span<const double> source_walkers,
                                     double sigma, const PairPotentialParams& pair) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto m = static_cast<Eigen::Index>(source_walkers.size());
  Eigen::MatrixXd table(n, m);
  for (Eigen::Index l = 0; l < m; ++l) {
    const double rl = source_walkers[static_cast<std::size_t>(l)];
    for (Eigen::Index i = 0; i < n; ++i) {
      table(i, l) = pair_potential(grid.x(static_cast<std::size_t>(i)), rl, pair);
    }
  }
  // Column k of the weight matrix holds K(r_l - r_k) / Z_k.
  Eigen::MatrixXd weights(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double rk = source_walkers[static_cast<std::size_t>(k)];
    double z = 0.0;
    for (Eigen::Index l = 0; l < m; ++l) {
      const double w = gaussian_kernel(source_walkers[static_cast<std::size_t>(l)] - rk, sigma);
      weights(l, k) = w;
      z += w;
    }
    weights.col(k) /= z;
  }
  // Fixed 32-column panels keep every column's arithmetic identical for any
  // thread count.
  Eigen::MatrixXd out(n, m);
  const Eigen::Index panels = (m + 31) / 32;
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < panels; ++b) {
    const Eigen::Index c0 = b * 32;
    const Eigen::Index w = std::min<Eigen::Index>(32, m - c0);
    out.middleCols(c0, w).noalias() = table * weights.middleCols(c0, w);
  }
  return out;
}

}  // namespace tdqmc
