#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tdqmc/errors.hpp"
#include "tdqmc/grid.hpp"

using namespace tdqmc;

namespace {

GuideWave gaussian(const Grid& g, double centre, double width) {
  return GuideWave::sample(g, [&](double x) { return std::exp(-0.5 * std::pow((x - centre) / width, 2)); });
}

}  // namespace

TEST_CASE("grid construction and spacing") {
  const Grid g(-1.0, 1.0, 5);
  CHECK(g.dx() == doctest::Approx(0.5));
  CHECK(g.x(0) == -1.0);
  CHECK(g.x(4) == doctest::Approx(1.0));
  CHECK_THROWS_AS(Grid(0.0, 1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(Grid(1.0, 1.0, 10), std::invalid_argument);
}

TEST_CASE("laplacian of a constant vanishes in the interior") {
  const Grid g(-5.0, 5.0, 101);
  const auto w = GuideWave::sample(g, [](double) { return 3.0; });
  const auto lap = laplacian(w);
  for (std::size_t i = 1; i + 1 < g.size(); ++i) CHECK(std::abs(lap[i]) < 1e-10);
}

TEST_CASE("laplacian of sin(kx) is -k^2 sin(kx) to second order") {
  const double k = 2.0 * std::numbers::pi / 5.0;
  auto max_err = [&](std::size_t n) {
    const Grid g(-5.0, 5.0, n);
    const auto w = GuideWave::sample(g, [&](double x) { return std::sin(k * x); });
    const auto lap = laplacian(w);
    double e = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) e = std::max(e, std::abs(lap[i] + k * k * std::sin(k * g.x(i))));
    return e;
  };
  const double coarse = max_err(101);
  const double fine = max_err(201);
  // Leading truncation term is k^4 dx^2 / 12.
  CHECK(coarse < 1.01 * std::pow(k, 4) * 0.01 / 12.0);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("laplacian matches an explicitly assembled Dirichlet matrix") {
  const Grid g(-2.0, 2.0, 17);
  std::mt19937 gen(3);
  std::normal_distribution<double> nd;
  ComplexField f(g.size());
  for (auto& v : f) v = {nd(gen), nd(gen)};
  ComplexField out(g.size());
  laplacian(g, f, out);
  const double h2 = g.dx() * g.dx();
  for (std::size_t i = 0; i < g.size(); ++i) {
    Complex ref = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      double a = 0.0;
      if (i == j) a = -2.0 / h2;
      if (i + 1 == j || j + 1 == i) a = 1.0 / h2;
      ref += a * f[j];
    }
    CHECK(std::abs(out[i] - ref) < 1e-10);
  }
}

TEST_CASE("gradient: constants, ramps and plane waves") {
  const Grid g(-3.0, 3.0, 61);
  const auto c = GuideWave::sample(g, [](double) { return 1.5; });
  for (const auto v : gradient(c)) CHECK(std::abs(v) < 1e-12);
  const auto ramp = GuideWave::sample(g, [](double x) { return 0.7 * x; });
  for (const auto v : gradient(ramp)) CHECK(std::abs(v - 0.7) < 1e-12);

  const double k = 1.3;
  auto max_err = [&](std::size_t n) {
    const Grid gg(-3.0, 3.0, n);
    ComplexField f(n), d(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = std::exp(Complex(0.0, k * gg.x(i)));
    gradient(gg, f, d);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e = std::max(e, std::abs(d[i] - Complex(0.0, k) * f[i]));
    return e;
  };
  const double e1 = max_err(121);
  const double e2 = max_err(241);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("operators are linear and the laplacian is symmetric") {
  const Grid g(-4.0, 4.0, 81);
  const auto a = gaussian(g, -0.5, 0.8);
  const auto b = GuideWave::sample(g, [](double x) { return Complex(std::exp(-x * x), 0.3 * x * std::exp(-x * x)); });
  const Complex ca(0.3, -1.1), cb(2.0, 0.5);
  ComplexField mix(g.size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = ca * a[i] + cb * b[i];
  ComplexField lm(g.size());
  laplacian(g, mix, lm);
  const auto la = laplacian(a);
  const auto lb = laplacian(b);
  for (std::size_t i = 0; i < mix.size(); ++i) CHECK(std::abs(lm[i] - (ca * la[i] + cb * lb[i])) < 1e-9);

  const GuideWave la_w(g, la), lb_w(g, lb);
  CHECK(std::abs(inner_product(a, lb_w) - inner_product(la_w, b)) < 1e-10);
}

TEST_CASE("inner products and normalization") {
  const Grid g(-10.0, 10.0, 801);
  auto w = gaussian(g, 0.0, 1.0);
  w.normalize();
  CHECK(inner_product(w, w).real() == doctest::Approx(1.0).epsilon(1e-12));
  const double before = w.norm();
  w.normalize();
  CHECK(w.norm() == doctest::Approx(before).epsilon(1e-15));

  const auto odd = GuideWave::sample(g, [](double x) { return x * std::exp(-x * x); });
  CHECK(std::abs(inner_product(w, odd)) < 1e-12);

  // Overlap of exp(-(x-a)^2/(2s^2)) and exp(-(x-b)^2/(2s^2)) is s sqrt(pi) exp(-(a-b)^2/(4 s^2)).
  const double s = 0.9, mu = 1.4;
  const auto p = gaussian(g, 0.0, s);
  const auto q = gaussian(g, mu, s);
  const double exact = s * std::sqrt(std::numbers::pi) * std::exp(-mu * mu / (4.0 * s * s));
  CHECK(inner_product(p, q).real() == doctest::Approx(exact).epsilon(1e-8));

  const Grid other(-10.0, 10.0, 401);
  CHECK_THROWS_AS(inner_product(w, GuideWave(other)), GridMismatchError);
  GuideWave zero(g);
  CHECK_THROWS_AS(zero.normalize(), UnstableStepError);
}

TEST_CASE("interpolation") {
  const Grid g(-2.0, 2.0, 41);
  const auto w = gaussian(g, 0.3, 0.7);
  CHECK(std::abs(interpolate(w, g.x(12)) - w[12]) < 1e-15);
  CHECK(std::abs(interpolate(w, 0.5 * (g.x(12) + g.x(13))) - 0.5 * (w[12] + w[13])) < 1e-15);
  CHECK_THROWS_AS(interpolate(w, 2.5), WalkerEscapedError);

  // Against the function itself: error shrinks 4x per halving of dx.
  auto err = [](std::size_t n) {
    const Grid gg(-2.0, 2.0, n);
    const auto ww = gaussian(gg, 0.3, 0.7);
    double e = 0.0;
    for (double x = -1.9; x < 1.9; x += 0.0173) {
      e = std::max(e, std::abs(interpolate(ww, x) - std::exp(-0.5 * std::pow((x - 0.3) / 0.7, 2))));
    }
    return e;
  };
  const double e1 = err(41), e2 = err(81);
  CHECK(e1 < 5e-3);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("stencils at arbitrary points") {
  const Grid g(-6.0, 6.0, 1201);
  const auto w = gaussian(g, 0.0, 1.0);
  const double x = 0.4321;
  const double f = std::exp(-0.5 * x * x);
  CHECK(gradient_at(w, x).real() == doctest::Approx(-x * f).epsilon(1e-3));
  CHECK(laplacian_at(w, x).real() == doctest::Approx((x * x - 1.0) * f).epsilon(1e-3));
  CHECK(distance(w, w) == 0.0);
}
