#include "tdqmc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tdqmc/errors.hpp"

namespace tdqmc {

Grid::Grid(double x_min, double x_max, std::size_t n) : x_min_(x_min), x_max_(x_max), n_(n) {
  if (n < 3) throw std::invalid_argument("Grid needs at least 3 points, got " + std::to_string(n));
  if (!(x_max > x_min)) throw std::invalid_argument("Grid requires x_max > x_min");
  dx_ = (x_max - x_min) / static_cast<double>(n - 1);
}

RealField Grid::points() const {
  RealField p(n_);
  for (std::size_t i = 0; i < n_; ++i) p[i] = x(i);
  return p;
}

GuideWave::GuideWave(Grid grid) : grid_(grid), amplitude_(grid.size()) {}

GuideWave::GuideWave(Grid grid, ComplexField amplitude)
    : grid_(grid), amplitude_(std::move(amplitude)) {
  if (amplitude_.size() != grid_.size()) {
    throw GridMismatchError("amplitude length " + std::to_string(amplitude_.size()) +
                            " does not match grid size " + std::to_string(grid_.size()));
  }
}

double GuideWave::norm() const noexcept {
  double s = 0.0;
  for (const auto& a : amplitude_) s += std::norm(a);
  return std::sqrt(s * grid_.dx());
}

void GuideWave::normalize() {
  const double nrm = norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) {
    throw UnstableStepError("cannot normalize a wave with norm " + std::to_string(nrm));
  }
  const double inv = 1.0 / nrm;
  for (auto& a : amplitude_) a *= inv;
}

bool GuideWave::is_finite() const noexcept {
  return std::all_of(amplitude_.begin(), amplitude_.end(), [](const Complex& a) {
    return std::isfinite(a.real()) && std::isfinite(a.imag());
  });
}

void laplacian(const Grid& grid, std::span<const Complex> f, std::span<Complex> out) {
  const std::size_t n = f.size();
  const double inv = 1.0 / (grid.dx() * grid.dx());
  out[0] = (f[1] - 2.0 * f[0]) * inv;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv;
  out[n - 1] = (f[n - 2] - 2.0 * f[n - 1]) * inv;
}

ComplexField laplacian(const GuideWave& w) {
  ComplexField out(w.size());
  laplacian(w.grid(), w.amplitude(), out);
  return out;
}

void gradient(const Grid& grid, std::span<const Complex> f, std::span<Complex> out) {
  const std::size_t n = f.size();
  const double inv2 = 0.5 / grid.dx();
  out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) * inv2;
  out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2;
}

ComplexField gradient(const GuideWave& w) {
  ComplexField out(w.size());
  gradient(w.grid(), w.amplitude(), out);
  return out;
}

Complex inner_product(const GuideWave& a, const GuideWave& b) {
  if (!(a.grid() == b.grid())) throw GridMismatchError("inner_product of fields on different grids");
  Complex s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s * a.grid().dx();
}

Cell locate(const Grid& grid, double x) {
  if (!grid.contains(x) || !std::isfinite(x)) {
    throw WalkerEscapedError(x, grid.x_min(), grid.x_max());
  }
  const double s = (x - grid.x_min()) / grid.dx();
  auto i = static_cast<std::size_t>(s);
  if (i >= grid.size() - 1) i = grid.size() - 2;
  return {i, s - static_cast<double>(i)};
}

Complex interpolate(const Grid& grid, std::span<const Complex> f, double x) {
  const auto [i, t] = locate(grid, x);
  if (t == 0.0) return f[i];
  return (1.0 - t) * f[i] + t * f[i + 1];
}

double interpolate(const Grid& grid, std::span<const double> f, double x) {
  const auto [i, t] = locate(grid, x);
  if (t == 0.0) return f[i];
  return (1.0 - t) * f[i] + t * f[i + 1];
}

Complex interpolate(const GuideWave& w, double x) { return interpolate(w.grid(), w.amplitude(), x); }

namespace {

Complex laplacian_node(std::span<const Complex> f, std::size_t i, double inv) {
  const Complex left = i > 0 ? f[i - 1] : Complex{};
  const Complex right = i + 1 < f.size() ? f[i + 1] : Complex{};
  return (right - 2.0 * f[i] + left) * inv;
}

Complex gradient_node(std::span<const Complex> f, std::size_t i, double inv2) {
  const std::size_t n = f.size();
  if (i == 0) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2;
  if (i == n - 1) return (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2;
  return (f[i + 1] - f[i - 1]) * inv2;
}

}  // namespace

Complex laplacian_at(const GuideWave& w, double x) {
  const auto [i, t] = locate(w.grid(), x);
  const double inv = 1.0 / (w.grid().dx() * w.grid().dx());
  const Complex a = laplacian_node(w.amplitude(), i, inv);
  if (t == 0.0) return a;
  return (1.0 - t) * a + t * laplacian_node(w.amplitude(), i + 1, inv);
}

Complex gradient_at(const GuideWave& w, double x) {
  const auto [i, t] = locate(w.grid(), x);
  const double inv2 = 0.5 / w.grid().dx();
  const Complex a = gradient_node(w.amplitude(), i, inv2);
  if (t == 0.0) return a;
  return (1.0 - t) * a + t * gradient_node(w.amplitude(), i + 1, inv2);
}

double distance(const GuideWave& a, const GuideWave& b) {
  if (!(a.grid() == b.grid())) throw GridMismatchError("distance between fields on different grids");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return std::sqrt(s * a.grid().dx());
}

}  // namespace tdqmc
