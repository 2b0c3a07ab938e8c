#include <doctest.h>

#include <cmath>
#include <random>

#include "tdqmc/errors.hpp"
#include "tdqmc/potentials.hpp"

using namespace tdqmc;

TEST_CASE("static potentials at reference points") {
  CHECK(soft_coulomb(0.0) == -1.0);
  CHECK(soft_coulomb(1.0) == doctest::Approx(-0.70710678).epsilon(1e-8));
  double prev = soft_coulomb(1.0);
  for (double x = 2.0; x < 1e4; x *= 2.0) {
    const double v = soft_coulomb(x);
    CHECK(v < 0.0);
    CHECK(v > prev);
    CHECK(soft_coulomb(-x) == v);
    prev = v;
  }
  CHECK(pair_potential(0.4, 0.4) == doctest::Approx(0.2));
  CHECK(pair_potential(3.0, 1.0) == doctest::Approx(0.2 / std::sqrt(5.0)));
  std::mt19937 gen(1);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 20; ++i) {
    const double a = u(gen), b = u(gen);
    CHECK(pair_potential(a, b) == pair_potential(b, a));
  }
}

TEST_CASE("bilinear coupling") {
  CHECK(bilinear_coupling(0.7, 2.0, 0.5, 1.0, 0.0) == doctest::Approx(0.5));
  CHECK(bilinear_coupling(0.0, 2.0, 0.5, 1.0, 0.3) == doctest::Approx(0.5));
  CHECK(bilinear_coupling(1.0, 2.0, 0.5, 1.0, 0.1) == doctest::Approx(0.7));
}

TEST_CASE("gaussian kernel") {
  CHECK(gaussian_kernel(0.0, 0.3) == 1.0);
  CHECK(gaussian_kernel(0.3, 0.3) == doctest::Approx(0.60653066));
  CHECK(gaussian_kernel(2.0, 1e9) == doctest::Approx(1.0));
}

TEST_CASE("correlation length") {
  const KernelConfig cfg{};
  const std::vector<double> same(7, 1.25);
  CHECK(correlation_length(same, cfg) == cfg.sigma_floor);
  const std::vector<double> two{-1.0, 1.0};
  CHECK(correlation_length(two, cfg) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(correlation_length(std::vector<double>{1.0}, cfg), DegenerateEnsembleError);

  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  std::vector<double> xs(100000);
  for (auto& x : xs) x = nd(gen);
  CHECK(correlation_length(xs, {0.5, 1e-3}) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("effective potential limits") {
  const Grid g(-5.0, 5.0, 51);
  const PairPotentialParams pair{};
  const std::vector<double> one{0.8};
  const auto v1 = effective_potential(g, one, 0, 0.01, pair);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(v1[i] == doctest::Approx(pair_potential(g.x(i), 0.8, pair)));

  const std::vector<double> walkers{-1.2, -0.3, 0.1, 0.9, 2.2};
  const auto hartree = effective_potential(g, walkers, 2, 1e9, pair);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double mean = 0.0;
    for (double r : walkers) mean += pair_potential(g.x(i), r, pair);
    CHECK(hartree[i] == doctest::Approx(mean / 5.0).epsilon(1e-12));
  }
}

TEST_CASE("effective potential against a brute-force weighted sum") {
  const Grid g(-4.0, 4.0, 41);
  const PairPotentialParams pair{0.2, 1.0};
  const std::vector<double> walkers{-1.0, -0.2, 0.5, 1.1, 3.0};
  const double sigma = 0.7;
  const auto table = effective_potentials(g, walkers, sigma, pair);
  for (std::size_t k = 0; k < walkers.size(); ++k) {
    const auto single = effective_potential(g, walkers, k, sigma, pair);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.x(i);
      double num = 0.0, den = 0.0;
      for (double r : walkers) {
        const double d = r - walkers[k];
        const double w = std::exp(-d * d / (2.0 * sigma * sigma));
        num += w * 0.2 / std::sqrt(1.0 + (x - r) * (x - r));
        den += w;
      }
      CHECK(single[i] == doctest::Approx(num / den).epsilon(1e-12));
      CHECK(table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) ==
            doctest::Approx(num / den).epsilon(1e-12));
    }
  }
}

TEST_CASE("effective potential is a permutation-invariant convex combination") {
  const Grid g(-4.0, 4.0, 33);
  const PairPotentialParams pair{};
  std::vector<double> w{0.3, -1.4, 2.0, 0.9, -0.1, 1.7};
  const auto base = effective_potential(g, w, 0, 0.8, pair);
  std::vector<double> perm{w[0], w[5], w[3], w[1], w[4], w[2]};
  const auto moved = effective_potential(g, perm, 0, 0.8, pair);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(moved[i] == doctest::Approx(base[i]).epsilon(1e-13));
    double lo = 1e300, hi = -1e300;
    for (double r : w) {
      lo = std::min(lo, pair_potential(g.x(i), r, pair));
      hi = std::max(hi, pair_potential(g.x(i), r, pair));
    }
    CHECK(base[i] >= lo - 1e-15);
    CHECK(base[i] <= hi + 1e-15);
  }
  // Larger sigma moves the result toward the Hartree mean.
  const auto hartree = effective_potential(g, w, 0, 1e9, pair);
  double prev = 1e300;
  for (double sigma : {0.1, 0.5, 1.0, 3.0, 30.0}) {
    const auto v = effective_potential(g, w, 0, sigma, pair);
    double d = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) d = std::max(d, std::abs(v[i] - hartree[i]));
    CHECK(d <= prev + 1e-15);
    prev = d;
  }
}

TEST_CASE("ohmic coupling matrix") {
  const std::vector<double> omega{0.2, 0.4};
  const std::vector<double> mass{1.0, 4.0};
  const auto c = CouplingMatrix::ohmic(omega, mass, 3, 0.5);
  CHECK(c.oscillators() == 2);
  CHECK(c.species() == 3);
  CHECK(c(1, 2) == doctest::Approx(0.5 * 2.0 * 0.4 / std::sqrt(2.0)));
  CHECK(c(0, 0) == c(0, 1));
}
