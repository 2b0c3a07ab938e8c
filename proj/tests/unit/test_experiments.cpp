#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include <omp.h>

#include "tdqmc/config.hpp"
#include "tdqmc/errors.hpp"
#include "tdqmc/experiments.hpp"
#include "tdqmc/observables.hpp"
#include "tdqmc/oracle.hpp"
#include "tdqmc/potentials.hpp"

using namespace tdqmc;

namespace {

SimConfig small(const std::string& extra = "") {
  std::istringstream base(
      "grid.n = 201\n"
      "walkers = 40\n"
      "prep.max_steps = 4000\n"
      "prep.tol = 1e-7\n");
  auto file = ConfigFile::parse(base);
  std::istringstream more(extra);
  const auto overrides = ConfigFile::parse(more);
  for (const auto& [k, v] : overrides.values()) file.set(k, v);
  return make_config(file);
}

bool same_state(const PreparedState& a, const PreparedState& b, double tol) {
  for (std::size_t i = 0; i < a.waves.size(); ++i) {
    for (std::size_t k = 0; k < a.waves[i].size(); ++k) {
      if (distance(a.waves[i][k], b.waves[i][k]) > tol) return false;
      if (std::abs(a.walkers(k, i) - b.walkers(k, i)) > tol) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("initial state layout") {
  const auto cfg = small("species.count = 2\ninit.jitter = 0.5\n");
  const auto st = initial_state(cfg);
  CHECK(st.waves.size() == 2);
  CHECK(st.waves[1].size() == 40);
  CHECK(st.rng.size() == 80);
  CHECK(st.walkers.inside(cfg.grid));
  CHECK_FALSE(st.bath.has_value());
  for (const auto& w : st.waves[0]) CHECK(w.norm() == doctest::Approx(1.0));
  CHECK(max_pairwise_distance(st.waves[0]) > 1e-3);
  CHECK(max_pairwise_distance(initial_state(small()).waves[0]) == 0.0);
}

TEST_CASE("zero-temperature one-electron preparation") {
  const auto cfg = small();
  const auto st = prepare_ground(cfg);
  const auto exact = diagonalize_1e(cfg.grid, cfg.static_potential(0)).energies[0];
  CHECK(st.report.metrics.at("prep.relax.wave_energy") == doctest::Approx(exact).epsilon(1e-5));
  CHECK(std::abs(st.report.energy_trace.back().energy - exact) < 2e-3);
  CHECK(max_pairwise_distance(st.waves[0]) < 1e-12);
  CHECK(st.report.energy_trace.front().step == 0);
  CHECK(st.report.timings.count("prep"));
}

TEST_CASE("reruns are bit-identical and thread-count independent") {
  const auto cfg = small("bath.enabled = true\nbath.L = 8\nbath.coupling_scale = 0.05\nbeta = 10\n"
                         "init.jitter = 0.5\nspecies.count = 2\nprep.tol = 1e-5\n");
  const int threads = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = prepare_ground(cfg);
  const auto b = prepare_ground(cfg);
  omp_set_num_threads(3);
  const auto c = prepare_ground(cfg);
  omp_set_num_threads(threads);
  REQUIRE(a.report.energy_trace.size() == b.report.energy_trace.size());
  for (std::size_t s = 0; s < a.report.energy_trace.size(); ++s) {
    CHECK(a.report.energy_trace[s].energy == b.report.energy_trace[s].energy);
  }
  CHECK(same_state(a, b, 0.0));
  CHECK(a.bath->x == b.bath->x);
  REQUIRE(a.report.energy_trace.size() == c.report.energy_trace.size());
  CHECK(same_state(a, c, 1e-12));
  CHECK(a.report.energy_trace.back().energy == doctest::Approx(c.report.energy_trace.back().energy).epsilon(1e-12));

  auto other = cfg;
  other.seed = 2;
  CHECK_FALSE(same_state(a, prepare_ground(other), 1e-6));
}

TEST_CASE("huge correlation length gives the Hartree limit") {
  auto cfg = small("species.count = 2\nkernel.alpha = 1e9\nprep.max_steps = 200\nprep.tol = 1e-3\n");
  PreparedState st = initial_state(cfg);
  Simulation sim(cfg, st);
  for (int s = 0; s < 100; ++s) {
    sim.imaginary_step(false);
    for (std::size_t i = 0; i < 2; ++i) CHECK(max_pairwise_distance(st.waves[i]) < 1e-8);
  }
  // A narrow kernel lets each walker see its own partner and the waves split.
  cfg.kernel.alpha = 0.1;
  PreparedState local = initial_state(cfg);
  Simulation sim2(cfg, local);
  for (int s = 0; s < 100; ++s) sim2.imaginary_step(false);
  CHECK(max_pairwise_distance(local.waves[0]) > 1e-3);
}

TEST_CASE("one walker per species couples through the bare pair potential") {
  const auto cfg = small("species.count = 2\nwalkers = 1\n");
  PreparedState st = initial_state(cfg);
  st.walkers(0, 0) = -0.7;
  st.walkers(0, 1) = 1.3;
  Simulation sim(cfg, st);
  const auto v0 = sim.assembled_potential(0, 0);
  const auto v1 = sim.assembled_potential(1, 0, 0.25);
  const auto vs = cfg.static_potential(0);
  for (std::size_t p = 0; p < cfg.grid.size(); ++p) {
    const double x = cfg.grid.x(p);
    CHECK(v0[p] == doctest::Approx(vs[p] + pair_potential(x, 1.3, cfg.pair)).epsilon(1e-14));
    CHECK(v1[p] == doctest::Approx(vs[p] + pair_potential(x, -0.7, cfg.pair) + 0.25 * x).epsilon(1e-14));
  }
}

TEST_CASE("real time without bath or pulse conserves the ensemble energy") {
  auto cfg = small("pulse.amplitude = 0\nreal.steps = 1000\nprep.tol = 1e-13\nprep.max_steps = 40000\n");
  const auto res = dipole_dynamics_of(cfg, prepare_ground(cfg));
  CHECK(std::abs(res.report.metrics.at("energy_end") - res.report.metrics.at("energy_start")) < 1e-6);
  const double x0 = res.report.dipole.front().x_mean;
  for (const auto& d : res.report.dipole) CHECK(std::abs(d.x_mean - x0) < 1e-8);
}

TEST_CASE("a kick without bath rings without decay") {
  auto cfg = small("real.steps = 3000\n");
  const auto res = dipole_dynamics_of(cfg, prepare_ground(cfg));
  CHECK(res.envelope.lobes >= 3);
  CHECK(res.envelope.ratio > 0.9);
  CHECK(res.report.dipole.size() == 3001);
  CHECK(res.report.dipole[1].t == doctest::Approx(cfg.dt_real));
}

TEST_CASE("envelope of synthetic signals") {
  const double w = 0.4, g = 0.01;
  std::vector<double> t, pure, damped;
  for (int i = 0; i <= 20000; ++i) {
    const double ti = 0.01 * i;
    t.push_back(ti);
    pure.push_back(0.1 + std::sin(w * ti));
    damped.push_back(0.1 + std::exp(-g * ti) * std::sin(w * ti));
  }
  const auto a = envelope(t, pure, 0.0);
  // sin peaks at (2j + 1/2) pi / w; 12 lobes close before t = 200.
  CHECK(a.lobes == 13);
  CHECK(a.ratio == doctest::Approx(1.0).epsilon(1e-6));
  const auto b = envelope(t, damped, 0.0);
  const double t_first = 0.5 * std::numbers::pi / w;
  const double t_last = t_first + 2.0 * std::numbers::pi / w * (b.lobes - 1);
  CHECK(b.ratio == doctest::Approx(std::exp(-g * (t_last - t_first))).epsilon(1e-3));
  CHECK(std::isnan(b.running[10]));
  CHECK(b.running.back() == doctest::Approx(b.ratio));
  CHECK_THROWS_AS(envelope(t, std::vector<double>(3), 0.0), std::invalid_argument);
}

TEST_CASE("oracle density for the configured system") {
  const auto cfg = small("beta = 10\n");
  const auto rho = oracle_density(cfg, cfg.temp);
  const auto ref = thermal_density(diagonalize_1e(cfg.grid, cfg.static_potential(0)), cfg.temp);
  for (std::size_t p = 0; p < rho.size(); ++p) CHECK(rho[p] == ref[p]);
  auto three = cfg;
  three.species.resize(3);
  CHECK_THROWS_AS(oracle_density(three, cfg.temp), ConfigError);
}

TEST_CASE("preparation failures are reported") {
  CHECK_THROWS_AS(prepare_ground(small("prep.max_steps = 5\n")), ConvergenceError);
}

TEST_CASE("calibration reports a failed bracket") {
  const auto cfg = small("bath.L = 8\ncalibrate.scale_hi = 0.001\ncalibrate.scale_max = 0.002\nprep.tol = 1e-5\n");
  CHECK_THROWS_AS(calibrate_coupling(cfg, 10.0), BracketError);
}

TEST_CASE("thread override from the environment") {
  const int before = omp_get_max_threads();
  setenv("TDQMC_THREADS", "2", 1);
  CHECK(configure_threads_from_env() == 2);
  setenv("TDQMC_THREADS", "two", 1);
  CHECK_THROWS_AS(configure_threads_from_env(), ConfigError);
  setenv("TDQMC_THREADS", "0", 1);
  CHECK_THROWS_AS(configure_threads_from_env(), ConfigError);
  unsetenv("TDQMC_THREADS");
  omp_set_num_threads(before);
}
