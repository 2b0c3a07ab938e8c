#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "tdqmc/errors.hpp"
#include "tdqmc/observables.hpp"
#include "tdqmc/oracle.hpp"
#include "tdqmc/propagator.hpp"

using namespace tdqmc;

namespace {

// Dense product-grid Hamiltonian built from explicit Kronecker sums.
Eigen::MatrixXd dense_2e(const Grid& g, const RealField& v, const PairPotentialParams& pair) {
  const auto n = static_cast<Eigen::Index>(g.size());
  const double t = 0.5 / (g.dx() * g.dx());
  Eigen::MatrixXd h1 = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h1(i, i) = 2.0 * t + v[static_cast<std::size_t>(i)];
    if (i + 1 < n) h1(i, i + 1) = h1(i + 1, i) = -t;
  }
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd h(n * n, n * n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      // block (x2 = a, x2' = b); x1 runs fastest
      h.block(a * n, b * n, n, n) = (a == b ? h1 : Eigen::MatrixXd::Zero(n, n)) + h1(a, b) * id;
    }
  }
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index i = 0; i < n; ++i) {
      h(a * n + i, a * n + i) += pair_potential(g.x(static_cast<std::size_t>(i)), g.x(static_cast<std::size_t>(a)), pair);
    }
  }
  return h;
}

}  // namespace

TEST_CASE("oscillator levels are n + 1/2") {
  const Grid g(-8.0, 8.0, 1601);
  const auto dec = diagonalize_1e(g, harmonic_field(g, 1.0), 1.0, 6.0);
  REQUIRE(dec.count() >= 6);
  for (std::size_t n = 0; n < 6; ++n) CHECK(dec.energies[n] == doctest::Approx(n + 0.5).epsilon(1e-4));
  CHECK(dec.max_residual < 1e-8);
  for (std::size_t n = 0; n < dec.count(); ++n) {
    CHECK(dec.states.col(static_cast<Eigen::Index>(n)).squaredNorm() * g.dx() == doctest::Approx(1.0));
  }
}

TEST_CASE("free box matches the discrete sine spectrum") {
  // With zero boundary values just outside the n nodes the exact
  // eigenvalues are (1 - cos(k pi / (n + 1))) / (m dx^2).
  const Grid g(-5.0, 5.0, 101);
  const double m = 2.0;
  const auto dec = diagonalize_1e(g, RealField(g.size(), 0.0), m, 1.0);
  REQUIRE(dec.count() > 5);
  for (std::size_t k = 1; k <= dec.count(); ++k) {
    const double exact = (1.0 - std::cos(k * std::numbers::pi / 102.0)) / (m * g.dx() * g.dx());
    CHECK(dec.energies[k - 1] == doctest::Approx(exact).epsilon(1e-10));
  }
  CHECK(dec.energies.back() < 1.0);
}

TEST_CASE("soft-Coulomb bound spectrum") {
  const Grid g(-10.0, 10.0, 401);
  const auto dec = diagonalize_1e(g, soft_coulomb_field(g));
  const double expected[] = {-0.669, -0.275, -0.147, -0.0583};
  for (std::size_t n = 0; n < 4; ++n) CHECK(std::abs(dec.energies[n] - expected[n]) < 2e-3);
  CHECK_THROWS_AS(diagonalize_1e(g, soft_coulomb_field(g), 1.0, -2.0), std::invalid_argument);
}

TEST_CASE("imaginary-time propagation agrees with the eigensolver") {
  const Grid g(-10.0, 10.0, 401);
  const RealField v = soft_coulomb_field(g);
  const auto dec = diagonalize_1e(g, v);
  const auto res = converge_ground(GuideWave::sample(g, [](double x) { return std::exp(-0.1 * x * x); }),
                                   [&](std::size_t) { return v; }, {0.05, 1.0, TimeMode::imaginary_time},
                                   1e-12, 20000);
  // Implicit Euler has the same fixed point as the exact ground state.
  CHECK(res.energy_trace.back() == doctest::Approx(dec.energies[0]).epsilon(1e-8));
}

TEST_CASE("two-electron oracle without interaction is separable") {
  const Grid g(-6.0, 6.0, 41);
  const RealField v = soft_coulomb_field(g);
  const auto one = diagonalize_1e(g, v, 1.0, 50.0);
  KrylovOptions opt;
  opt.states = 4;
  const auto two = diagonalize_2e(g, v, {0.0, 1.0}, opt);
  CHECK(two.particles == 2);
  CHECK(two.energies[0] == doctest::Approx(2.0 * one.energies[0]).epsilon(1e-9));
  for (double e : two.energies) {
    double best = 1e9;
    for (double a : one.energies)
      for (double b : one.energies) best = std::min(best, std::abs(a + b - e));
    CHECK(best < 1e-8);
  }
}

TEST_CASE("two-electron oracle matches dense diagonalization") {
  const Grid g(-6.0, 6.0, 25);
  const RealField v = soft_coulomb_field(g);
  const PairPotentialParams pair{0.2, 1.0};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_2e(g, v, pair), Eigen::EigenvaluesOnly);
  KrylovOptions opt;
  opt.states = 3;
  const auto dec = diagonalize_2e(g, v, pair, opt);
  for (std::size_t s = 0; s < 3; ++s) CHECK(dec.energies[s] == doctest::Approx(es.eigenvalues()(static_cast<Eigen::Index>(s))).epsilon(1e-8));
  CHECK(dec.max_residual < 1e-6);

  // matrix-free apply agrees with the dense matrix
  const auto n2 = static_cast<Eigen::Index>(g.size() * g.size());
  Eigen::VectorXd psi = Eigen::VectorXd::LinSpaced(n2, -1.0, 2.0).array().sin();
  Eigen::VectorXd out(n2);
  apply_hamiltonian_2e(g, v, pair, 1.0, {psi.data(), static_cast<std::size_t>(psi.size())}, {out.data(), static_cast<std::size_t>(out.size())});
  CHECK((out - dense_2e(g, v, pair) * psi).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("two-electron ground state obeys repulsion bounds") {
  const Grid g(-10.0, 10.0, 101);
  const RealField v = soft_coulomb_field(g);
  const PairPotentialParams pair{0.2, 1.0};
  const auto one = diagonalize_1e(g, v);
  KrylovOptions opt;
  opt.states = 2;
  const auto two = diagonalize_2e(g, v, pair, opt);
  // Product of 1e ground states gives the variational upper bound.
  double vpair = 0.0;
  const auto psi = one.states.col(0);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j)
      vpair += psi(static_cast<Eigen::Index>(i)) * psi(static_cast<Eigen::Index>(i)) * psi(static_cast<Eigen::Index>(j)) *
               psi(static_cast<Eigen::Index>(j)) * pair_potential(g.x(i), g.x(j), pair);
  vpair *= g.dx() * g.dx();
  CHECK(two.energies[0] > 2.0 * one.energies[0]);
  CHECK(two.energies[0] < 2.0 * one.energies[0] + vpair);
  // Reduced density is normalized and broader than the 1e density.
  const auto rho2 = thermal_density(two, Temperature::zero());
  const auto rho1 = thermal_density(one, Temperature::zero());
  double n2 = 0.0;
  for (double r : rho2) n2 += r * g.dx();
  CHECK(n2 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fwhm(g, rho2) > fwhm(g, rho1));
}

TEST_CASE("Krylov failure is reported") {
  const Grid g(-6.0, 6.0, 31);
  const RealField v = soft_coulomb_field(g);
  KrylovOptions opt;
  opt.states = 5;
  opt.max_iterations = 12;
  opt.tolerance = 1e-14;
  CHECK_THROWS_AS(diagonalize_2e(g, v, {}, opt), KrylovError);
  opt.states = 20;
  CHECK_THROWS_AS(diagonalize_2e(g, v, {}, opt), std::invalid_argument);
}

TEST_CASE("thermal oscillator density matches the Bloch solution") {
  const Grid g(-8.0, 8.0, 1601);
  const auto dec = diagonalize_1e(g, harmonic_field(g, 1.0), 1.0, 25.0);
  const auto t = Temperature::from_beta(1.0);
  const auto rho = thermal_density(dec, t);
  const auto exact = harmonic_thermal_density(g, 1.0, 1.0, t);
  double err = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) err = std::max(err, std::abs(rho[i] - exact[i]));
  CHECK(err < 1e-6);
  CHECK(thermal_average_energy(dec, t) == doctest::Approx(harmonic_thermal_energy(1.0, t)).epsilon(1e-5));
  CHECK(harmonic_thermal_energy(1.0, Temperature::zero()) == 0.5);
  const auto cold = harmonic_thermal_density(g, 1.0, 1.0, Temperature::zero());
  CHECK(cold[800] == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)));
}

TEST_CASE("truncated spectra are rejected at high temperature") {
  const Grid g(-10.0, 10.0, 401);
  const auto dec = diagonalize_1e(g, soft_coulomb_field(g));
  CHECK_NOTHROW(thermal_density(dec, Temperature::from_beta(10.0)));
  CHECK_THROWS_AS(thermal_density(dec, Temperature::from_beta(1.0)), TruncationError);
}

TEST_CASE("Boltzmann weights of a three-level system") {
  // beta (E1 - E0) = ln 3 gives weights 3/4 and 1/4; the third level is negligible.
  const Grid g(0.0, 1.0, 3);
  SpectralDecomposition dec{g, 1, {0.0, std::log(3.0), 20.0}, Eigen::MatrixXd::Zero(3, 3), 0.0};
  for (Eigen::Index n = 0; n < 3; ++n) dec.states(n, n) = std::sqrt(2.0);
  const auto t = Temperature::from_beta(1.0);
  const auto rho = thermal_density(dec, t);
  CHECK(rho[0] == doctest::Approx(2.0 * 0.75).epsilon(1e-8));
  CHECK(rho[1] == doctest::Approx(2.0 * 0.25).epsilon(1e-8));
  CHECK(thermal_average_energy(dec, t) == doctest::Approx(0.25 * std::log(3.0)).epsilon(1e-7));
  dec.energies.pop_back();
  dec.states.conservativeResize(3, 2);
  CHECK_THROWS_AS(thermal_density(dec, t), TruncationError);
  const auto cold = thermal_density(dec, Temperature::zero());
  CHECK(cold[0] == doctest::Approx(2.0));
  CHECK(cold[1] == 0.0);
}

TEST_CASE("thermal energy from the density matrix equals the Boltzmann sum") {
  const Grid g(-10.0, 10.0, 201);
  const RealField v = soft_coulomb_field(g);
  const auto dec = diagonalize_1e(g, v);
  const auto t = Temperature::from_beta(10.0);
  const double e0 = dec.energies[0];
  double z = 0.0;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(201, 201);
  for (std::size_t n = 0; n < dec.count(); ++n) {
    const double w = std::exp(-10.0 * (dec.energies[n] - e0));
    z += w;
    const Eigen::VectorXd psi = dec.states.col(static_cast<Eigen::Index>(n));
    rho += w * (psi * psi.transpose()).cast<Complex>();
  }
  rho /= z;
  const DensityMatrix dm(g, rho);
  const auto h = [&](std::span<const Complex> f, std::span<Complex> out) { apply_hamiltonian(g, v, 1.0, f, out); };
  CHECK(dm.trace() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(thermal_energy_from_dm(dm, h) == doctest::Approx(thermal_average_energy(dec, t)).epsilon(1e-10));
  CHECK(dm.purity() < 1.0);
  CHECK(dm.purity() > 0.0);
}
