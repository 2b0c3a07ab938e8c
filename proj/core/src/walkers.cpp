#include "tdqmc/walkers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tdqmc/errors.hpp"

namespace tdqmc {

WalkerEnsemble::WalkerEnsemble(std::size_t walkers, std::size_t species)
    : m_(walkers), n_(species), pos_(walkers * species, 0.0) {
  if (walkers < 1 || species < 1) throw std::invalid_argument("WalkerEnsemble needs M >= 1 and N >= 1");
}

bool WalkerEnsemble::inside(const Grid& grid) const noexcept {
  return std::all_of(pos_.begin(), pos_.end(), [&](double x) { return grid.contains(x); });
}

EnsembleStats ensemble_stats(std::span<const double> positions) {
  if (positions.size() < 2) {
    throw DegenerateEnsembleError("ensemble statistics need at least 2 walkers, got " +
                                  std::to_string(positions.size()));
  }
  double mean = 0.0;
  for (double x : positions) mean += x;
  mean /= static_cast<double>(positions.size());
  double ss = 0.0;
  for (double x : positions) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(positions.size() - 1))};
}

double drift_velocity(const GuideWave& w, double x, double mass) {
  const Complex value = interpolate(w, x);
  const double mag = std::abs(value);
  if (mag < 1e-12) throw NodeError(x, mag);
  return std::imag(gradient_at(w, x) / value) / mass;
}

double clamped_drift_velocity(const GuideWave& w, double x, double mass, double dt) {
  const double vmax = w.grid().dx() / dt;
  double v = 0.0;
  try {
    v = drift_velocity(w, x, mass);
  } catch (const NodeError&) {
    const Complex value = interpolate(w, x);
    const double g = std::imag(gradient_at(w, x) * std::conj(value));
    return g == 0.0 ? 0.0 : std::copysign(vmax, g);
  }
  return std::clamp(v, -vmax, vmax);
}

double reflect_into(const Grid& grid, double x) {
  const double lo = grid.x_min();
  const double hi = grid.x_max();
  const double width = hi - lo;
  if (!std::isfinite(x)) throw WalkerEscapedError(x, lo, hi);
  if (x >= lo && x <= hi) return x;
  // Fold onto a period-2W sawtooth so arbitrarily large excursions land inside.
  double y = std::fmod(x - lo, 2.0 * width);
  if (y < 0.0) y += 2.0 * width;
  if (y > width) y = 2.0 * width - y;
  return lo + y;
}

double diffuse(const Grid& grid, double x, double velocity, double dt, double mass, RngStream& rng) {
  if (!(dt > 0.0) || !(mass > 0.0)) throw std::invalid_argument("diffuse requires dt > 0 and mass > 0");
  const double eta = rng.normal();
  return reflect_into(grid, x + velocity * dt + eta * std::sqrt(dt / mass));
}

double metropolis_resample(double x, const GuideWave& w, double proposal_scale, std::size_t n_sub,
                           RngStream& rng, MetropolisStats* stats) {
  if (!(proposal_scale > 0.0)) throw std::invalid_argument("proposal_scale must be positive");
  const Grid& g = w.grid();
  double p_current = std::norm(interpolate(w, x));
  for (std::size_t s = 0; s < n_sub; ++s) {
    const double trial = x + proposal_scale * rng.normal();
    const double u = rng.uniform();
    if (stats) ++stats->proposed;
    if (!g.contains(trial)) continue;
    const double p_trial = std::norm(interpolate(w, trial));
    if (p_trial >= p_current || u * p_current < p_trial) {
      x = trial;
      p_current = p_trial;
      if (stats) ++stats->accepted;
    }
  }
  return x;
}

}  // namespace tdqmc
