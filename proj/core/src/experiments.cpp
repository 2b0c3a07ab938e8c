#include "tdqmc/experiments.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>

#include "tdqmc/errors.hpp"
#include "tdqmc/observables.hpp"
#include "tdqmc/oracle.hpp"
#include "tdqmc/propagator.hpp"

namespace tdqmc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs body(k) for k in [0, m) in parallel. The exception of the lowest failing
// walker is rethrown as a SimulationError so the report does not depend on
// thread scheduling.
template <typename Body>
void for_each_walker(std::size_t m, const char* phase, std::size_t step, Body&& body) {
  std::vector<std::exception_ptr> errors(m);
  std::vector<std::size_t> species(m, 0);
  const auto n = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kk = 0; kk < n; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    try {
      body(k, species[k]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const std::exception& e) {
      throw SimulationError(phase, step, species[k], k, e.what());
    }
  }
}

}  // namespace

Simulation::Simulation(const SimConfig& cfg, PreparedState& state) : cfg_(cfg), st_(state) {
  const std::size_t n_species = cfg_.species.size();
  if (n_species > 1) veff_.resize(n_species);
  bath_coef_.assign(n_species, std::vector<double>(cfg_.M, 0.0));
}

void Simulation::refresh_effective_potentials() {
  if (veff_.empty()) return;
  for (std::size_t j = 0; j < veff_.size(); ++j) {
    veff_[j] = effective_potentials(cfg_.grid, st_.walkers.of_species(j), st_.sigma[j], cfg_.pair);
  }
}

void Simulation::refresh_bath_coefficients() {
  if (!st_.bath) return;
  if (coef_fresh_) {
    coef_fresh_ = false;
    return;
  }
  const BathState& bath = *st_.bath;
  for (std::size_t i = 0; i < bath_coef_.size(); ++i) {
    auto& coef = bath_coef_[i];
    if (bath.spec().per_walker()) {
      const auto m = static_cast<std::ptrdiff_t>(coef.size());
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t k = 0; k < m; ++k) {
        coef[static_cast<std::size_t>(k)] = bath_field_coefficient(bath, static_cast<std::size_t>(k), i);
      }
    } else {
      std::fill(coef.begin(), coef.end(), bath_field_coefficient(bath, 0, i));
    }
  }
}

void Simulation::update_sigma() {
  for (std::size_t i = 0; i < st_.sigma.size(); ++i) {
    st_.sigma[i] = cfg_.M > 1 ? correlation_length(st_.walkers.of_species(i), cfg_.kernel)
                              : cfg_.kernel.sigma_floor;
  }
}

void Simulation::fill_potential(std::size_t i, std::size_t k, double field,
                                std::span<double> out) const {
  const RealField& vs = st_.static_potential[i];
  const double slope = bath_coef_[i][k] + field;
  const Grid& g = cfg_.grid;
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = vs[p] + slope * g.x(p);
  for (std::size_t j = 0; j < veff_.size(); ++j) {
    if (j == i) continue;
    const auto col = veff_[j].col(static_cast<Eigen::Index>(k));
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += col(static_cast<Eigen::Index>(p));
  }
}

RealField Simulation::assembled_potential(std::size_t species, std::size_t k, double field) {
  refresh_effective_potentials();
  refresh_bath_coefficients();
  RealField v(cfg_.grid.size());
  fill_potential(species, k, field, v);
  return v;
}

double Simulation::energy() const {
  std::vector<SpeciesTerms> terms;
  for (std::size_t i = 0; i < cfg_.species.size(); ++i) {
    terms.push_back({cfg_.species[i].mass, st_.waves[i], st_.static_potential[i]});
  }
  return ensemble_energy(st_.walkers, terms, cfg_.pair);
}

double Simulation::dipole() const {
  double d = 0.0;
  for (const auto& w : st_.waves) d += dipole_moment(w);
  return d;
}

double Simulation::imaginary_step(bool relax_bath_now) {
  const std::size_t n_species = cfg_.species.size();
  auto t0 = Clock::now();
  refresh_effective_potentials();
  timings_.effective_potential += seconds_since(t0);

  t0 = Clock::now();
  refresh_bath_coefficients();
  timings_.bath += seconds_since(t0);

  t0 = Clock::now();
  const std::size_t n = cfg_.grid.size();
  std::vector<double> wave_e(cfg_.M, 0.0);
  for_each_walker(cfg_.M, "imaginary-time step", step_, [&](std::size_t k, std::size_t& sp) {
    thread_local RealField v;
    thread_local StepWorkspace ws;
    v.resize(n);
    for (std::size_t i = 0; i < n_species; ++i) {
      sp = i;
      const double mass = cfg_.species[i].mass;
      fill_potential(i, k, 0.0, v);
      GuideWave& w = st_.waves[i][k];
      step_in_place(w, v, {cfg_.dt_imag, mass, TimeMode::imaginary_time}, ws);
      wave_e[k] += expectation_energy(w, v, mass);
      st_.walkers(k, i) = metropolis_resample(st_.walkers(k, i), w, std::sqrt(cfg_.dt_imag / mass),
                                              cfg_.prep.metropolis_substeps,
                                              st_.rng[i * cfg_.M + k]);
    }
  });
  timings_.walker_loop += seconds_since(t0);

  if (st_.bath && relax_bath_now) {
    t0 = Clock::now();
    relax_bath(*st_.bath, st_.walkers, cfg_.dt_imag, cfg_.seed, step_);
    timings_.bath += seconds_since(t0);
  }
  t0 = Clock::now();
  update_sigma();
  wave_energy_ = pairwise_sum(wave_e) / static_cast<double>(cfg_.M);
  const double e = energy();
  timings_.observables += seconds_since(t0);
  ++step_;
  ++timings_.steps;
  return e;
}

double Simulation::real_step(double t) {
  const std::size_t n_species = cfg_.species.size();
  const double dt = cfg_.dt_real;
  const double field = cfg_.pulse.field(t + 0.5 * dt);
  auto t0 = Clock::now();
  refresh_effective_potentials();
  timings_.effective_potential += seconds_since(t0);

  t0 = Clock::now();
  refresh_bath_coefficients();
  timings_.bath += seconds_since(t0);

  t0 = Clock::now();
  const Grid& g = cfg_.grid;
  const std::size_t n = g.size();
  WalkerEnsemble midpoint = st_.walkers;
  std::vector<double> moment(cfg_.M, 0.0);
  for_each_walker(cfg_.M, "real-time step", step_, [&](std::size_t k, std::size_t& sp) {
    thread_local RealField v;
    thread_local StepWorkspace ws;
    v.resize(n);
    double mk = 0.0;
    for (std::size_t i = 0; i < n_species; ++i) {
      sp = i;
      const double mass = cfg_.species[i].mass;
      GuideWave& w = st_.waves[i][k];
      const double x = st_.walkers(k, i);
      const double v0 = clamped_drift_velocity(w, x, mass, dt);
      fill_potential(i, k, field, v);
      step_in_place(w, v, {dt, mass, TimeMode::real_time}, ws);
      const double pred = reflect_into(g, x + dt * v0);
      const double v1 = clamped_drift_velocity(w, pred, mass, dt);
      const double x_new = reflect_into(g, x + 0.5 * dt * (v0 + v1));
      st_.walkers(k, i) = x_new;
      midpoint(k, i) = 0.5 * (x + x_new);
      double s = 0.0;
      for (std::size_t p = 0; p < n; ++p) s += g.x(p) * std::norm(w[p]);
      mk += s * g.dx();
    }
    moment[k] = mk;
  });
  timings_.walker_loop += seconds_since(t0);

  if (st_.bath) {
    t0 = Clock::now();
    if (advance_bath(*st_.bath, midpoint, dt, bath_coef_[0])) {
      for (std::size_t i = 1; i < bath_coef_.size(); ++i) bath_coef_[i] = bath_coef_[0];
      coef_fresh_ = true;
    }
    timings_.bath += seconds_since(t0);
  }
  t0 = Clock::now();
  update_sigma();
  const double d = pairwise_sum(moment) / static_cast<double>(cfg_.M);
  timings_.observables += seconds_since(t0);
  ++step_;
  ++timings_.steps;
  return d;
}

PreparedState initial_state(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t n_species = cfg.species.size();
  const std::size_t m = cfg.M;
  PreparedState st;
  st.walkers = WalkerEnsemble(m, n_species);
  st.waves.resize(n_species);
  const double width = cfg.prep.init_width;
  for (std::size_t i = 0; i < n_species; ++i) {
    st.static_potential.push_back(cfg.static_potential(i));
    st.waves[i].reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
      RngStream rng(cfg.seed, {k, i, StreamPurpose::initial});
      const double centre = cfg.prep.init_jitter > 0.0 ? cfg.prep.init_jitter * rng.normal() : 0.0;
      auto w = GuideWave::sample(cfg.grid, [&](double x) {
        const double u = (x - centre) / width;
        return std::exp(-0.5 * u * u);
      });
      w.normalize();
      st.waves[i].push_back(std::move(w));
      st.walkers(k, i) = reflect_into(cfg.grid, centre + width / std::sqrt(2.0) * rng.normal());
    }
  }
  for (std::size_t i = 0; i < n_species; ++i) {
    for (std::size_t k = 0; k < m; ++k) st.rng.emplace_back(cfg.seed, StreamId{k, i, StreamPurpose::metropolis});
  }
  st.sigma.assign(n_species, cfg.kernel.sigma_floor);
  if (m > 1) {
    for (std::size_t i = 0; i < n_species; ++i) st.sigma[i] = correlation_length(st.walkers.of_species(i), cfg.kernel);
  }
  if (cfg.bath.enabled) st.bath = sample_thermal_initial(cfg.bath_spec(), cfg.temp, m, cfg.seed);
  st.report.seed = cfg.seed;
  st.report.config = echo_config(cfg);
  return st;
}

namespace {

// Imaginary steps until the windowed energy of this stage settles.
void relax_stage(const SimConfig& cfg, Simulation& sim, bool relax_bath_now, const char* name,
                 RunReport& report) {
  std::vector<double> trace;
  if (report.energy_trace.empty()) report.energy_trace.push_back({0, 0.0, sim.energy()});
  const std::size_t first_step = report.energy_trace.back().step;
  for (std::size_t s = 1;; ++s) {
    const double e = sim.imaginary_step(relax_bath_now);
    trace.push_back(sim.wave_energy());
    const std::size_t step = first_step + s;
    report.energy_trace.push_back({step, static_cast<double>(step) * cfg.dt_imag, e});
    if (window_converged(trace, cfg.prep.window, cfg.prep.tol)) {
      report.metrics[std::string(name) + ".steps"] = static_cast<double>(s);
      report.metrics[std::string(name) + ".wave_energy"] = trace.back();
      return;
    }
    if (s >= cfg.prep.max_steps) {
      throw ConvergenceError(std::string(name) + ": energy not converged to " +
                                 std::to_string(cfg.prep.tol) + " within " +
                                 std::to_string(cfg.prep.max_steps) + " imaginary steps",
                             trace);
    }
  }
}

void record_timings(const StepTimings& t, const std::string& prefix, RunReport& r) {
  r.timings[prefix + ".effective_potential"] += t.effective_potential;
  r.timings[prefix + ".walker_loop"] += t.walker_loop;
  r.timings[prefix + ".bath"] += t.bath;
  r.timings[prefix + ".observables"] += t.observables;
}

}  // namespace

PreparedState prepare_ground(const SimConfig& cfg) {
  const auto t0 = Clock::now();
  PreparedState st = initial_state(cfg);
  Simulation sim(cfg, st);
  relax_stage(cfg, sim, true, "prep.relax", st.report);
  if (st.bath) {
    resample_thermal(*st.bath, cfg.temp, st.walkers, cfg.seed);
    relax_stage(cfg, sim, false, "prep.settle", st.report);
  }
  record_timings(sim.timings(), "prep", st.report);
  st.report.timings["prep"] = seconds_since(t0);
  st.report.metrics["energy"] = st.report.energy_trace.back().energy;
  for (std::size_t i = 0; i < st.sigma.size(); ++i) {
    st.report.metrics["sigma." + std::to_string(i)] = st.sigma[i];
  }
  return st;
}

double max_pairwise_distance(std::span<const GuideWave> waves) {
  double worst = 0.0;
  const auto m = static_cast<std::ptrdiff_t>(waves.size());
#pragma omp parallel for schedule(dynamic, 8) reduction(max : worst)
  for (std::ptrdiff_t a = 0; a < m; ++a) {
    for (std::ptrdiff_t b = a + 1; b < m; ++b) {
      worst = std::max(worst, distance(waves[static_cast<std::size_t>(a)], waves[static_cast<std::size_t>(b)]));
    }
  }
  return worst;
}

RealField oracle_density(const SimConfig& cfg, const Temperature& temp) {
  const std::size_t n_species = cfg.species.size();
  if (n_species == 1) {
    const auto dec = diagonalize_1e(cfg.grid, cfg.static_potential(0), cfg.species[0].mass, cfg.oracle.cutoff);
    return thermal_density(dec, temp);
  }
  if (n_species != 2) throw ConfigError("the oracle covers one or two electrons");
  if (cfg.species[0].potential != cfg.species[1].potential || cfg.species[0].mass != cfg.species[1].mass) {
    throw ConfigError("the two-electron oracle needs identical species");
  }
  SimConfig coarse = cfg;
  coarse.grid = Grid(cfg.grid.x_min(), cfg.grid.x_max(), cfg.oracle.points_2e);
  const auto dec = diagonalize_2e(coarse.grid, coarse.static_potential(0), cfg.pair, cfg.oracle.krylov,
                                  cfg.species[0].mass);
  const RealField rho = thermal_density(dec, temp);
  RealField out(cfg.grid.size());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = interpolate(coarse.grid, rho, cfg.grid.x(p));
  return out;
}

ThermalResult thermal_density_of(const SimConfig& cfg, PreparedState st) {
  ThermalResult res;
  res.report = std::move(st.report);
  RealField rho(cfg.grid.size(), 0.0);
  for (const auto& w : st.waves) {
    const auto d = diagonal_density(w);
    for (std::size_t p = 0; p < rho.size(); ++p) rho[p] += d[p] / static_cast<double>(st.waves.size());
  }
  const auto t0 = Clock::now();
  res.report.oracle_density = oracle_density(cfg, cfg.temp);
  res.report.timings["oracle"] = seconds_since(t0);
  res.report.density = std::move(rho);
  res.fwhm_tdqmc = fwhm(cfg.grid, res.report.density);
  res.fwhm_oracle = fwhm(cfg.grid, res.report.oracle_density);
  res.peak_tdqmc = *std::max_element(res.report.density.begin(), res.report.density.end());
  res.peak_oracle = *std::max_element(res.report.oracle_density.begin(), res.report.oracle_density.end());
  auto& m = res.report.metrics;
  m["fwhm_tdqmc"] = res.fwhm_tdqmc;
  m["fwhm_oracle"] = res.fwhm_oracle;
  m["peak_tdqmc"] = res.peak_tdqmc;
  m["peak_oracle"] = res.peak_oracle;
  m["fwhm_relative_error"] = res.relative_fwhm_error();
  if (cfg.bath.enabled) res.report.calibrated_scale = cfg.bath.scale;
  return res;
}

ThermalResult run_thermal_density(const SimConfig& cfg) {
  return thermal_density_of(cfg, prepare_ground(cfg));
}

EnvelopeResult envelope(std::span<const double> t, std::span<const double> x_mean, double t_start) {
  if (t.size() != x_mean.size()) throw std::invalid_argument("envelope: length mismatch");
  EnvelopeResult res;
  res.running.assign(t.size(), std::numeric_limits<double>::quiet_NaN());
  if (t.empty()) return res;
  const double base = x_mean.front();
  std::vector<std::pair<std::size_t, double>> lobes;  // (end index, maximum)
  bool inside = false;
  double best = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_start) continue;
    const double y = x_mean[i] - base;
    if (y > 0.0) {
      best = inside ? std::max(best, y) : y;
      inside = true;
    } else if (inside) {
      lobes.emplace_back(i, best);
      inside = false;
    }
  }
  // A lobe still open at the end is incomplete and not counted.
  res.lobes = lobes.size();
  if (lobes.empty()) {
    res.ratio = std::numeric_limits<double>::quiet_NaN();
    return res;
  }
  res.first_peak = lobes.front().second;
  res.last_peak = lobes.back().second;
  res.ratio = res.last_peak / res.first_peak;
  std::size_t next = 0;
  double current = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < t.size(); ++i) {
    while (next < lobes.size() && lobes[next].first <= i) current = lobes[next++].second / res.first_peak;
    res.running[i] = current;
  }
  return res;
}

DipoleResult dipole_dynamics_of(const SimConfig& cfg, PreparedState st) {
  DipoleResult res;
  const auto t0 = Clock::now();
  Simulation sim(cfg, st);
  std::vector<double> times{0.0};
  std::vector<double> xs{sim.dipole()};
  const double e_start = sim.energy();
  times.reserve(cfg.n_real_steps + 1);
  xs.reserve(cfg.n_real_steps + 1);
  for (std::size_t s = 0; s < cfg.n_real_steps; ++s) {
    const double t = static_cast<double>(s) * cfg.dt_real;
    xs.push_back(sim.real_step(t));
    times.push_back(static_cast<double>(s + 1) * cfg.dt_real);
  }
  res.envelope = envelope(times, xs, cfg.pulse.end());
  res.report = std::move(st.report);
  record_timings(sim.timings(), "dynamics", res.report);
  res.report.timings["dynamics"] = seconds_since(t0);
  res.report.dipole.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    res.report.dipole.push_back({times[i], xs[i], res.envelope.running[i]});
  }
  auto& m = res.report.metrics;
  m["envelope_ratio"] = res.envelope.ratio;
  m["envelope_first_peak"] = res.envelope.first_peak;
  m["envelope_last_peak"] = res.envelope.last_peak;
  m["envelope_lobes"] = static_cast<double>(res.envelope.lobes);
  m["energy_start"] = e_start;
  m["energy_end"] = sim.energy();
  if (cfg.bath.enabled) res.report.calibrated_scale = cfg.bath.scale;
  return res;
}

DipoleResult run_dipole_dynamics(const SimConfig& cfg) {
  return dipole_dynamics_of(cfg, prepare_ground(cfg));
}

CalibrationResult calibrate_coupling(const SimConfig& cfg, double beta_ref) {
  const auto& cal = cfg.calibration;
  SimConfig probe = cfg;
  probe.bath.enabled = true;
  probe.temp = Temperature::from_beta(beta_ref);
  CalibrationResult res;
  res.fwhm_oracle = fwhm(cfg.grid, oracle_density(probe, probe.temp));

  auto residual = [&](double scale) {
    probe.bath.scale = scale;
    const PreparedState st = prepare_ground(probe);
    RealField rho(cfg.grid.size(), 0.0);
    for (const auto& w : st.waves) {
      const auto d = diagonal_density(w);
      for (std::size_t p = 0; p < rho.size(); ++p) rho[p] += d[p];
    }
    const double width = fwhm(cfg.grid, rho);
    res.probes.emplace_back(scale, width);
    ++res.evaluations;
    return (width - res.fwhm_oracle) / res.fwhm_oracle;
  };

  double lo = cal.scale_lo;
  double f_lo = residual(lo);
  if (std::abs(f_lo) <= cal.rel_tol) {
    res.scale = lo;
    res.residual = f_lo;
    return res;
  }
  if (f_lo > 0.0) throw BracketError(lo, lo, "already broader than the oracle at the lower end");
  double hi = cal.scale_hi;
  double f_hi = residual(hi);
  while (f_hi < 0.0) {
    if (hi >= cal.scale_max) {
      throw BracketError(cal.scale_lo, hi, "TDQMC width stays below the oracle width");
    }
    lo = hi;
    f_lo = f_hi;
    hi = std::min(2.0 * hi, cal.scale_max);
    f_hi = residual(hi);
  }
  double best = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
  double f_best = std::abs(f_lo) < std::abs(f_hi) ? f_lo : f_hi;
  for (std::size_t it = 0; it < cal.max_iterations && std::abs(f_best) > cal.rel_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = residual(mid);
    if (std::abs(f_mid) < std::abs(f_best)) {
      best = mid;
      f_best = f_mid;
    }
    if (f_mid < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  res.scale = best;
  res.residual = f_best;
  return res;
}

int configure_threads_from_env() {
  if (const char* env = std::getenv("TDQMC_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) {
      throw ConfigError(std::string("TDQMC_THREADS must be a positive integer, got '") + env + "'");
    }
    omp_set_num_threads(static_cast<int>(n));
  }
  return omp_get_max_threads();
}

}  // namespace tdqmc
