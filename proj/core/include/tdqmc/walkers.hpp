#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tdqmc/grid.hpp"
#include "tdqmc/rng.hpp"

namespace tdqmc {

/// Positions r_i^k for M walkers of each of N species, stored species-major.
class WalkerEnsemble {
 public:
  WalkerEnsemble(std::size_t walkers, std::size_t species);

  std::size_t walkers() const noexcept { return m_; }
  std::size_t species() const noexcept { return n_; }

  double& operator()(std::size_t k, std::size_t i) noexcept { return pos_[i * m_ + k]; }
  double operator()(std::size_t k, std::size_t i) const noexcept { return pos_[i * m_ + k]; }

  std::span<double> of_species(std::size_t i) noexcept { return {pos_.data() + i * m_, m_}; }
  std::span<const double> of_species(std::size_t i) const noexcept {
    return {pos_.data() + i * m_, m_};
  }

  bool inside(const Grid& grid) const noexcept;

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<double> pos_;
};

struct EnsembleStats {
  double mean = 0.0;
  double std = 0.0;  // n - 1 denominator
};

/// Throws DegenerateEnsembleError for fewer than two positions.
EnsembleStats ensemble_stats(std::span<const double> positions);

/// Bohmian velocity (1/m) Im[grad(w)/w] at x. Throws NodeError if |w(x)| < 1e-12.
double drift_velocity(const GuideWave& w, double x, double mass);

/// drift_velocity with the node guard: near a node, or for any velocity larger
/// than dx/dt, the result is clamped to magnitude dx/dt.
double clamped_drift_velocity(const GuideWave& w, double x, double mass, double dt);

/// Mirror x back into [x_min, x_max].
double reflect_into(const Grid& grid, double x);

/// x + v dt + eta sqrt(dt/m), eta ~ N(0, 1) from rng; reflected at the walls.
double diffuse(const Grid& grid, double x, double velocity, double dt, double mass, RngStream& rng);

struct MetropolisStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  double acceptance() const noexcept {
    return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  }
};

/// n_sub symmetric Gaussian-proposal Metropolis steps targeting |w(x)|^2.
/// Proposals outside the box are rejected.
double metropolis_resample(double x, const GuideWave& w, double proposal_scale, std::size_t n_sub,
                           RngStream& rng, MetropolisStats* stats = nullptr);

}  // namespace tdqmc
