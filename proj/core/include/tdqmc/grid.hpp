#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace tdqmc {

using Complex = std::complex<double>;
using ComplexField = std::vector<Complex>;
using RealField = std::vector<double>;

/// Uniform 1D mesh on [x_min, x_max] with n points, both ends included.
/// Fields vanish identically outside the box (Dirichlet walls).
class Grid {
 public:
  Grid(double x_min, double x_max, std::size_t n);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  std::size_t size() const noexcept { return n_; }
  double dx() const noexcept { return dx_; }
  double x(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * dx_; }
  bool contains(double x) const noexcept { return x >= x_min_ && x <= x_max_; }

  RealField points() const;

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_ && a.n_ == b.n_;
  }

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double dx_;
};

/// Complex amplitude on a grid. One per walker per species; a bath oscillator
/// in the grid engine owns one on its own mesh.
class GuideWave {
 public:
  explicit GuideWave(Grid grid);
  GuideWave(Grid grid, ComplexField amplitude);

  template <typename F>
  static GuideWave sample(const Grid& grid, F&& f) {
    ComplexField a(grid.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = Complex(f(grid.x(i)));
    return GuideWave(grid, std::move(a));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return amplitude_.size(); }
  std::span<const Complex> amplitude() const noexcept { return amplitude_; }
  std::span<Complex> amplitude() noexcept { return amplitude_; }
  Complex operator[](std::size_t i) const noexcept { return amplitude_[i]; }
  Complex& operator[](std::size_t i) noexcept { return amplitude_[i]; }

  /// sqrt(dx * sum |a|^2)
  double norm() const noexcept;
  /// Rescales to unit norm. Throws if the norm is zero or not finite.
  void normalize();
  bool is_finite() const noexcept;

 private:
  Grid grid_;
  ComplexField amplitude_;
};

/// Second-order central second derivative with zero values beyond the box.
ComplexField laplacian(const GuideWave& w);
void laplacian(const Grid& grid, std::span<const Complex> f, std::span<Complex> out);

/// Central first derivative; second-order one-sided stencils at the ends.
ComplexField gradient(const GuideWave& w);
void gradient(const Grid& grid, std::span<const Complex> f, std::span<Complex> out);

/// dx * sum conj(a) b. Throws GridMismatchError for fields on different grids.
Complex inner_product(const GuideWave& a, const GuideWave& b);

/// Linear interpolation. Throws WalkerEscapedError outside [x_min, x_max].
Complex interpolate(const GuideWave& w, double x);
Complex interpolate(const Grid& grid, std::span<const Complex> f, double x);
double interpolate(const Grid& grid, std::span<const double> f, double x);

/// Bracketing cell index and fractional offset for x in the box.
struct Cell {
  std::size_t index;
  double frac;
};
Cell locate(const Grid& grid, double x);

/// Laplacian and gradient of w evaluated at x by linear interpolation of the
/// nodal stencil values; cheaper than materializing the whole field.
Complex laplacian_at(const GuideWave& w, double x);
Complex gradient_at(const GuideWave& w, double x);

/// L2 distance sqrt(dx * sum |a - b|^2).
double distance(const GuideWave& a, const GuideWave& b);

}  // namespace tdqmc
