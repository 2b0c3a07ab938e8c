#include "tdqmc/propagator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tdqmc/errors.hpp"

namespace tdqmc {

namespace {

// Thomas algorithm for a tridiagonal system with constant off-diagonal `off`.
// Overwrites rhs with the solution.
template <typename Diag>
void solve_tridiagonal(Diag&& diag, Complex off, std::span<Complex> rhs, ComplexField& c_prime) {
  const std::size_t n = rhs.size();
  c_prime.resize(n);
  Complex denom = diag(0);
  c_prime[0] = off / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag(i) - off * c_prime[i - 1];
    c_prime[i] = off / denom;
    rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c_prime[i] * rhs[i + 1];
}

}  // namespace

void step_in_place(GuideWave& w, std::span<const double> potential, const StepParams& p,
                   StepWorkspace& ws) {
  if (!(p.dt > 0.0) || !(p.mass > 0.0)) throw std::invalid_argument("step requires dt > 0 and mass > 0");
  if (potential.size() != w.size()) throw GridMismatchError("potential length does not match wave grid");
  const Grid& g = w.grid();
  const std::size_t n = w.size();
  const double kin = 1.0 / (p.mass * g.dx() * g.dx());  // diagonal of -lap/(2m) is kin, off-diagonal -kin/2
  auto a = w.amplitude();

  if (p.mode == TimeMode::real_time) {
    const Complex h(0.0, 0.5 * p.dt);
    const Complex off = -0.5 * kin * h;
    ws.rhs.resize(n);
    // rhs = (1 - i dt/2 H) w
    for (std::size_t i = 0; i < n; ++i) {
      const Complex left = i > 0 ? a[i - 1] : Complex{};
      const Complex right = i + 1 < n ? a[i + 1] : Complex{};
      const Complex hw = (kin + potential[i]) * a[i] - 0.5 * kin * (left + right);
      ws.rhs[i] = a[i] - h * hw;
    }
    solve_tridiagonal([&](std::size_t i) { return 1.0 + h * (kin + potential[i]); }, off, ws.rhs,
                      ws.c_prime);
    for (std::size_t i = 0; i < n; ++i) a[i] = ws.rhs[i];
  } else {
    const double off = -0.5 * kin * p.dt;
    solve_tridiagonal([&](std::size_t i) { return Complex(1.0 + p.dt * (kin + potential[i])); },
                      Complex(off), a, ws.c_prime);
  }
  if (!w.is_finite()) {
    throw UnstableStepError("propagator step produced non-finite amplitudes (dt = " +
                            std::to_string(p.dt) + ")");
  }
  if (p.mode == TimeMode::imaginary_time) w.normalize();
}

GuideWave step(const GuideWave& w, std::span<const double> potential, const StepParams& p) {
  GuideWave out = w;
  StepWorkspace ws;
  step_in_place(out, potential, p, ws);
  return out;
}

double local_energy(const GuideWave& w, std::span<const double> potential, double x, double mass) {
  const Complex value = interpolate(w, x);
  const double mag = std::abs(value);
  if (mag < 1e-12) throw NodeError(x, mag);
  const Complex lap = laplacian_at(w, x);
  return std::real(-0.5 / mass * lap / value) + interpolate(w.grid(), potential, x);
}

void apply_hamiltonian(const Grid& grid, std::span<const double> potential, double mass,
                       std::span<const Complex> f, std::span<Complex> out) {
  laplacian(grid, f, out);
  const double c = -0.5 / mass;
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = c * out[i] + potential[i] * f[i];
}

double expectation_energy(const GuideWave& w, std::span<const double> potential, double mass) {
  ComplexField hw(w.size());
  apply_hamiltonian(w.grid(), potential, mass, w.amplitude(), hw);
  Complex num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    num += std::conj(w[i]) * hw[i];
    den += std::norm(w[i]);
  }
  return num.real() / den;
}

namespace {

double window_mean(std::span<const double> trace, std::size_t end, std::size_t window) {
  const std::size_t begin = end + 1 >= window ? end + 1 - window : 0;
  double s = 0.0;
  for (std::size_t i = begin; i <= end; ++i) s += trace[i];
  return s / static_cast<double>(end + 1 - begin);
}

}  // namespace

bool window_converged(std::span<const double> trace, std::size_t window, double tol) {
  if (window == 0 || trace.size() < window + 1) return false;
  const std::size_t last = trace.size() - 1;
  return std::abs(window_mean(trace, last, window) - window_mean(trace, last - window, window)) < tol;
}

GroundStateResult converge_ground(GuideWave w0, const PotentialProvider& potential,
                                  const StepParams& p, double tol, std::size_t max_steps,
                                  std::size_t window) {
  if (p.mode != TimeMode::imaginary_time) {
    throw std::invalid_argument("converge_ground requires imaginary-time steps");
  }
  GroundStateResult result{std::move(w0), {}, 0};
  result.wave.normalize();
  StepWorkspace ws;
  RealField v = potential(0);
  result.energy_trace.push_back(expectation_energy(result.wave, v, p.mass));
  for (std::size_t s = 1; s <= max_steps; ++s) {
    step_in_place(result.wave, v, p, ws);
    v = potential(s);
    result.energy_trace.push_back(expectation_energy(result.wave, v, p.mass));
    result.steps = s;
    if (window_converged(result.energy_trace, window, tol)) return result;
  }
  throw ConvergenceError("imaginary-time relaxation did not converge within " +
                             std::to_string(max_steps) + " steps",
                         std::move(result.energy_trace));
}

}  // namespace tdqmc
