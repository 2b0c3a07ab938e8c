#include "tdqmc/oracle.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "tdqmc/errors.hpp"

namespace tdqmc {

SpectralDecomposition diagonalize_1e(const Grid& grid, std::span<const double> potential,
                                     double mass, double cutoff) {
  const auto n = static_cast<lapack_int>(grid.size());
  if (potential.size() != grid.size()) throw GridMismatchError("potential does not match grid");
  const double kin = 1.0 / (mass * grid.dx() * grid.dx());
  std::vector<double> d(grid.size()), e(grid.size(), -0.5 * kin);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = kin + potential[i];
  const double lower = *std::min_element(potential.begin(), potential.end()) - 1.0;
  if (!(cutoff > lower)) throw std::invalid_argument("cutoff lies below the potential minimum");

  lapack_int found = 0;
  std::vector<double> w(grid.size());
  std::vector<double> z(grid.size() * grid.size());
  std::vector<lapack_int> support(2 * grid.size());
  const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'V', n, d.data(), e.data(), lower,
                                         cutoff, 0, 0, 0.0, &found, w.data(), z.data(), n,
                                         support.data());
  if (info != 0) throw Error("tridiagonal eigensolve failed, LAPACK info = " + std::to_string(info));

  SpectralDecomposition dec{grid, 1, {}, Eigen::MatrixXd(n, found), 0.0};
  dec.energies.assign(w.begin(), w.begin() + found);
  const double inv_sqrt_dx = 1.0 / std::sqrt(grid.dx());
  for (lapack_int c = 0; c < found; ++c) {
    for (lapack_int r = 0; r < n; ++r) dec.states(r, c) = z[static_cast<std::size_t>(c * n + r)] * inv_sqrt_dx;
  }
  // Residuals ||H psi - E psi|| in the dx-weighted norm.
  for (lapack_int c = 0; c < found; ++c) {
    double res = 0.0;
    for (lapack_int r = 0; r < n; ++r) {
      const double left = r > 0 ? dec.states(r - 1, c) : 0.0;
      const double right = r + 1 < n ? dec.states(r + 1, c) : 0.0;
      const double hpsi = (kin + potential[static_cast<std::size_t>(r)]) * dec.states(r, c) -
                          0.5 * kin * (left + right);
      const double diff = hpsi - dec.energies[static_cast<std::size_t>(c)] * dec.states(r, c);
      res += diff * diff;
    }
    dec.max_residual = std::max(dec.max_residual, std::sqrt(res * grid.dx()));
  }
  return dec;
}

void apply_hamiltonian_2e(const Grid& grid, std::span<const double> potential,
                          const PairPotentialParams& pair, double mass, std::span<const double> psi,
                          std::span<double> out) {
  const std::size_t n = grid.size();
  const double kin = 1.0 / (mass * grid.dx() * grid.dx());
  const double half = 0.5 * kin;
  for (std::size_t j = 0; j < n; ++j) {
    const double* col = psi.data() + j * n;
    const double* prev = j > 0 ? col - n : nullptr;
    const double* next = j + 1 < n ? col + n : nullptr;
    double* o = out.data() + j * n;
    const double vj = potential[j];
    const double x2 = grid.x(j);
    for (std::size_t i = 0; i < n; ++i) {
      const double left = i > 0 ? col[i - 1] : 0.0;
      const double right = i + 1 < n ? col[i + 1] : 0.0;
      const double down = prev ? prev[i] : 0.0;
      const double up = next ? next[i] : 0.0;
      const double diag = 2.0 * kin + potential[i] + vj + pair_potential(grid.x(i), x2, pair);
      o[i] = diag * col[i] - half * (left + right + down + up);
    }
  }
}

SpectralDecomposition diagonalize_2e(const Grid& grid, std::span<const double> potential,
                                     const PairPotentialParams& pair, const KrylovOptions& opt,
                                     double mass) {
  const std::size_t n = grid.size();
  const auto dim = static_cast<Eigen::Index>(n * n);
  const std::size_t max_it = std::min<std::size_t>(opt.max_iterations, static_cast<std::size_t>(dim));
  if (opt.states < 1 || opt.states > max_it) throw std::invalid_argument("invalid Krylov state count");

  // Pair table along x1 - x2 is cheap to recompute; precompute the diagonal instead.
  Eigen::MatrixXd basis(dim, static_cast<Eigen::Index>(max_it + 1));
  std::vector<double> alpha, beta;
  std::mt19937_64 gen(opt.seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(gen);
  v.normalize();
  basis.col(0) = v;

  Eigen::VectorXd w(dim);
  Eigen::VectorXd ritz_vals;
  Eigen::MatrixXd ritz_vecs;
  double worst = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  bool converged = false;
  for (it = 0; it < max_it; ++it) {
    apply_hamiltonian_2e(grid, potential, pair, mass, {basis.col(static_cast<Eigen::Index>(it)).data(), n * n},
                         {w.data(), n * n});
    const double a = w.dot(basis.col(static_cast<Eigen::Index>(it)));
    alpha.push_back(a);
    // Full reorthogonalization, done twice.
    const auto k = static_cast<Eigen::Index>(it + 1);
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd h = basis.leftCols(k).transpose() * w;
      w.noalias() -= basis.leftCols(k) * h;
    }
    const double b = w.norm();
    beta.push_back(b);

    const std::size_t m = it + 1;
    const bool check = m >= opt.states && (m % 10 == 0 || m == max_it || b < 1e-12);
    if (check) {
      Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(m));
      Eigen::VectorXd sub = m > 1 ? Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(m - 1))
                                  : Eigen::VectorXd();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      ritz_vals = tri.eigenvalues();
      ritz_vecs = tri.eigenvectors();
      worst = 0.0;
      for (std::size_t s = 0; s < opt.states; ++s) {
        worst = std::max(worst, std::abs(b * ritz_vecs(static_cast<Eigen::Index>(m - 1), static_cast<Eigen::Index>(s))));
      }
      if (worst < opt.tolerance || b < 1e-12) {
        converged = true;
        ++it;
        break;
      }
    }
    if (b < 1e-12) break;
    basis.col(static_cast<Eigen::Index>(it + 1)) = w / b;
  }
  if (!converged) {
    throw KrylovError("Lanczos did not converge the lowest " + std::to_string(opt.states) +
                          " two-electron states",
                      it, worst);
  }

  const auto m = static_cast<Eigen::Index>(it);
  const auto ns = static_cast<Eigen::Index>(opt.states);
  SpectralDecomposition dec{grid, 2, {}, Eigen::MatrixXd(dim, ns), 0.0};
  dec.states = basis.leftCols(m) * ritz_vecs.leftCols(ns);
  const double dx = grid.dx();
  std::vector<double> hpsi(n * n);
  for (Eigen::Index s = 0; s < ns; ++s) {
    dec.states.col(s).normalize();
    dec.energies.push_back(ritz_vals(s));
    apply_hamiltonian_2e(grid, potential, pair, mass, {dec.states.col(s).data(), n * n}, hpsi);
    const Eigen::Map<const Eigen::VectorXd> hv(hpsi.data(), dim);
    dec.max_residual = std::max(dec.max_residual, (hv - ritz_vals(s) * dec.states.col(s)).norm());
    dec.states.col(s) /= dx;  // dx^2 sum psi^2 = 1
  }
  return dec;
}

namespace {

std::vector<double> boltzmann_weights(const SpectralDecomposition& dec, const Temperature& temp) {
  if (dec.energies.empty()) throw Error("empty spectral decomposition");
  const double e0 = dec.energies.front();
  std::vector<double> w(dec.count(), 0.0);
  if (temp.is_zero()) {
    w[0] = 1.0;
    return w;
  }
  const double tail = std::exp(-temp.beta * (dec.energies.back() - e0));
  if (tail >= 1e-6) throw TruncationError(temp.beta, tail);
  double z = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    w[n] = std::exp(-temp.beta * (dec.energies[n] - e0));
    z += w[n];
  }
  for (auto& x : w) x /= z;
  return w;
}

}  // namespace

RealField thermal_density(const SpectralDecomposition& dec, const Temperature& temp) {
  const auto w = boltzmann_weights(dec, temp);
  const std::size_t n = dec.grid.size();
  RealField rho(n, 0.0);
  const double dx = dec.grid.dx();
  for (std::size_t s = 0; s < w.size(); ++s) {
    if (w[s] == 0.0) continue;
    const auto col = dec.states.col(static_cast<Eigen::Index>(s));
    if (dec.particles == 1) {
      for (std::size_t i = 0; i < n; ++i) rho[i] += w[s] * col(static_cast<Eigen::Index>(i)) * col(static_cast<Eigen::Index>(i));
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          const double v = col(static_cast<Eigen::Index>(j * n + i));
          rho[i] += w[s] * v * v * dx;
        }
      }
    }
  }
  return rho;
}

double thermal_average_energy(const SpectralDecomposition& dec, const Temperature& temp) {
  const auto w = boltzmann_weights(dec, temp);
  double e = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) e += w[s] * dec.energies[s];
  return e;
}

RealField harmonic_thermal_density(const Grid& grid, double omega, double mass,
                                   const Temperature& temp) {
  const double t = temp.is_zero() ? 1.0 : std::tanh(0.5 * temp.beta * omega);
  const double a = mass * omega * t;
  RealField rho(grid.size());
  const double pref = std::sqrt(a / std::numbers::pi);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double x = grid.x(i);
    rho[i] = pref * std::exp(-a * x * x);
  }
  return rho;
}

double harmonic_thermal_energy(double omega, const Temperature& temp) {
  if (temp.is_zero()) return 0.5 * omega;
  return 0.5 * omega / std::tanh(0.5 * temp.beta * omega);
}

}  // namespace tdqmc
