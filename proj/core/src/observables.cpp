#include "tdqmc/observables.hpp"

#include <algorithm>
#include <cmath>

#include "tdqmc/errors.hpp"
#include "tdqmc/propagator.hpp"

namespace tdqmc {

DensityMatrix::DensityMatrix(Grid grid, Eigen::MatrixXcd rho) : grid_(grid), rho_(std::move(rho)) {
  if (static_cast<std::size_t>(rho_.rows()) != grid_.size() || rho_.rows() != rho_.cols()) {
    throw GridMismatchError("density matrix shape does not match the grid");
  }
}

double DensityMatrix::trace() const { return rho_.diagonal().real().sum() * grid_.dx(); }

double DensityMatrix::purity() const {
  // Tr(rho^2) = sum_ab rho_ab rho_ba = sum_ab |rho_ab|^2 for Hermitian rho.
  const double dx = grid_.dx();
  return (rho_.array() * rho_.transpose().array()).sum().real() * dx * dx;
}

double DensityMatrix::hermiticity_error() const {
  return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue(std::size_t stride) const {
  const auto n = static_cast<Eigen::Index>((grid_.size() + stride - 1) / stride);
  Eigen::MatrixXcd sub(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      sub(a, b) = rho_(a * static_cast<Eigen::Index>(stride), b * static_cast<Eigen::Index>(stride));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sub, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() * grid_.dx();
}

namespace {

void require_same_grid(std::span<const GuideWave> waves) {
  if (waves.empty()) throw DegenerateEnsembleError("empty wave ensemble");
  for (const auto& w : waves) {
    if (!(w.grid() == waves.front().grid())) {
      throw GridMismatchError("guide waves of one ensemble live on different grids");
    }
  }
}

}  // namespace

DensityMatrix build_density_matrix(std::span<const GuideWave> waves) {
  require_same_grid(waves);
  const Grid& g = waves.front().grid();
  const auto n = static_cast<Eigen::Index>(g.size());
  const auto m = static_cast<Eigen::Index>(waves.size());
  Eigen::MatrixXcd phi(n, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto a = waves[static_cast<std::size_t>(k)].amplitude();
    phi.col(k) = Eigen::Map<const Eigen::VectorXcd>(a.data(), n);
  }
  // rho_ab = (1/M) sum_k conj(phi_ka) phi_kb
  Eigen::MatrixXcd rho = phi.conjugate() * phi.transpose();
  rho /= static_cast<double>(m);
  return DensityMatrix(g, std::move(rho));
}

RealField diagonal_density(const DensityMatrix& rho) {
  RealField d(rho.grid().size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  }
  return d;
}

RealField diagonal_density(std::span<const GuideWave> waves) {
  require_same_grid(waves);
  RealField d(waves.front().size(), 0.0);
  for (const auto& w : waves) {
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += std::norm(w[i]);
  }
  const double inv = 1.0 / static_cast<double>(waves.size());
  for (auto& v : d) v *= inv;
  return d;
}

double dipole_moment(const DensityMatrix& rho) {
  const Grid& g = rho.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    s += g.x(i) * rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  }
  return s * g.dx();
}

double dipole_moment(std::span<const GuideWave> waves) {
  require_same_grid(waves);
  const Grid& g = waves.front().grid();
  std::vector<double> per_wave(waves.size());
  for (std::size_t k = 0; k < waves.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g.x(i) * std::norm(waves[k][i]);
    per_wave[k] = s * g.dx();
  }
  return pairwise_sum(per_wave) / static_cast<double>(waves.size());
}

std::vector<double> walker_energies(const WalkerEnsemble& walkers,
                                    std::span<const SpeciesTerms> species,
                                    const PairPotentialParams& pair) {
  const std::size_t m = walkers.walkers();
  std::vector<double> e(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    double ek = 0.0;
    for (std::size_t i = 0; i < species.size(); ++i) {
      ek += local_energy(species[i].waves[k], species[i].potential, walkers(k, i), species[i].mass);
      for (std::size_t j = 0; j < i; ++j) ek += pair_potential(walkers(k, i), walkers(k, j), pair);
    }
    e[k] = ek;
  }
  return e;
}

double ensemble_energy(const WalkerEnsemble& walkers, std::span<const SpeciesTerms> species,
                       const PairPotentialParams& pair) {
  const auto e = walker_energies(walkers, species, pair);
  return pairwise_sum(e) / static_cast<double>(e.size());
}

double thermal_energy_from_dm(const DensityMatrix& rho, const HamiltonianApply& apply) {
  const Grid& g = rho.grid();
  const auto n = static_cast<Eigen::Index>(g.size());
  // Tr(rho H) = dx sum_b (H rho(., b))_b, H acting on the first argument.
  ComplexField col(g.size()), hcol(g.size());
  Complex s = 0.0;
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) col[static_cast<std::size_t>(a)] = rho.matrix()(a, b);
    apply(col, hcol);
    s += hcol[static_cast<std::size_t>(b)];
  }
  return s.real() * g.dx();
}

double fwhm(const Grid& grid, std::span<const double> density) {
  const auto peak_it = std::max_element(density.begin(), density.end());
  const auto peak = static_cast<std::size_t>(peak_it - density.begin());
  const double half = 0.5 * *peak_it;
  if (!(half > 0.0)) throw DegenerateEnsembleError("fwhm of a non-positive density");
  std::size_t l = peak;
  while (l > 0 && density[l] > half) --l;
  std::size_t r = peak;
  while (r + 1 < density.size() && density[r] > half) ++r;
  if (density[l] > half || density[r] > half) {
    throw DegenerateEnsembleError("density does not fall to half maximum inside the grid");
  }
  const double xl = grid.x(l) + (half - density[l]) / (density[l + 1] - density[l]) * grid.dx();
  const double xr = grid.x(r - 1) + (half - density[r - 1]) / (density[r] - density[r - 1]) * grid.dx();
  return xr - xl;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace tdqmc
