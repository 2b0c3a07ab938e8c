#include "tdqmc/bath.hpp"

#include <cmath>
#include <stdexcept>

#include "tdqmc/errors.hpp"
#include "tdqmc/rng.hpp"

namespace tdqmc {

std::string to_string(BathMode m) {
  switch (m) {
    case BathMode::quantum_per_walker: return "quantum_per_walker";
    case BathMode::quantum_mean_field: return "quantum_mean_field";
    case BathMode::classical_per_walker: return "classical_per_walker";
    case BathMode::classical_mean_field: return "classical_mean_field";
  }
  return "?";
}

std::string to_string(BathEngine e) { return e == BathEngine::grid ? "grid" : "gaussian"; }

std::string to_string(PairingTopology t) {
  return t == PairingTopology::diagonal ? "diagonal" : "all_oscillators";
}

BathMode parse_bath_mode(const std::string& s) {
  for (auto m : {BathMode::quantum_per_walker, BathMode::quantum_mean_field,
                 BathMode::classical_per_walker, BathMode::classical_mean_field}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown bath mode '" + s + "'");
}

BathEngine parse_bath_engine(const std::string& s) {
  if (s == "grid") return BathEngine::grid;
  if (s == "gaussian") return BathEngine::gaussian;
  throw ConfigError("unknown bath engine '" + s + "'");
}

PairingTopology parse_pairing_topology(const std::string& s) {
  if (s == "all_oscillators") return PairingTopology::all_oscillators;
  if (s == "diagonal") return PairingTopology::diagonal;
  throw ConfigError("unknown pairing topology '" + s + "'");
}

Temperature Temperature::from_beta(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  return {beta};
}

Temperature Temperature::from_temperature(double temperature) {
  if (temperature < 0.0) throw std::invalid_argument("temperature must be non-negative");
  if (temperature == 0.0) return zero();
  return {1.0 / temperature};
}

double Temperature::occupation(double omega) const noexcept {
  if (is_zero()) return 0.0;
  return 1.0 / std::expm1(beta * omega);
}

std::vector<double> BathSpec::frequencies() const {
  std::vector<double> w(L);
  for (std::size_t j = 0; j < L; ++j) w[j] = frequency(j);
  return w;
}

BathSpec BathSpec::ohmic(std::size_t L, double omega_max, double mass, std::size_t n_species,
                         double scale, BathMode mode, BathEngine engine, PairingTopology topology) {
  BathSpec spec;
  spec.L = L;
  spec.omega_max = omega_max;
  spec.masses.assign(L, mass);
  spec.mode = mode;
  spec.engine = engine;
  spec.topology = topology;
  const auto w = spec.frequencies();
  spec.coupling = CouplingMatrix::ohmic(w, spec.masses, n_species, scale);
  return spec;
}

void BathSpec::validate(std::size_t n_walkers) const {
  if (L < 1) throw ConfigError("bath needs at least one oscillator");
  if (!(omega_max > 0.0)) throw ConfigError("bath omega_max must be positive");
  if (masses.size() != L) throw ConfigError("bath masses must have one entry per oscillator");
  for (double m : masses) {
    if (!(m > 0.0)) throw ConfigError("bath masses must be positive");
  }
  if (coupling.oscillators() != L) throw ConfigError("coupling matrix needs L rows");
  if (!(coupling.scale >= 0.0)) throw ConfigError("coupling scale must be non-negative");
  if (!coupling.c.allFinite()) throw ConfigError("coupling matrix has non-finite entries");
  if (topology == PairingTopology::diagonal) {
    if (!per_walker()) throw ConfigError("diagonal pairing requires a per-walker bath mode");
    if (L != n_walkers) {
      throw ConfigError("diagonal pairing requires L == M (L = " + std::to_string(L) +
                        ", M = " + std::to_string(n_walkers) + ")");
    }
  }
  if (engine == BathEngine::grid && !quantum()) {
    throw ConfigError("the grid engine applies to quantum bath modes only");
  }
}

std::vector<Resonance> detuning_violations(const BathSpec& spec, std::span<const double> levels,
                                           double margin) {
  std::vector<Resonance> out;
  for (std::size_t j = 0; j < spec.L; ++j) {
    const double w = spec.frequency(j);
    for (std::size_t n = 0; n < levels.size(); ++n) {
      for (std::size_t m = n + 1; m < levels.size(); ++m) {
        const double mismatch = std::abs(w - (levels[m] - levels[n]));
        if (mismatch < margin) out.push_back({j, n, m, mismatch});
      }
    }
  }
  return out;
}

namespace {

// Cayley rotation of (xi, p / (M Omega)) about the displaced equilibrium.
struct Rotation {
  double cos;
  double sin;
};

Rotation midpoint_rotation(double omega, double dt) {
  const double a = 0.5 * omega * dt;
  const double d = 1.0 + a * a;
  return {(1.0 - a * a) / d, 2.0 * a / d};
}

}  // namespace

CoherentState bath_step_gaussian(CoherentState s, double drive, double dt, double omega, double mass,
                                 double c) {
  const double force = c * drive;
  const double x_eq = -force / (mass * omega * omega);
  const auto [cs, sn] = midpoint_rotation(omega, dt);
  const double mw = mass * omega;
  const double xi = s.x_mean - x_eq;
  const double q = s.p_mean / mw;
  CoherentState out;
  out.x_mean = x_eq + cs * xi + sn * q;
  out.p_mean = mw * (-sn * xi + cs * q);
  // d(phase)/dt = P^2/2M - V(X) - Omega/2 along the centre, trapezoid in time.
  auto lagrangian = [&](const CoherentState& z) {
    return z.p_mean * z.p_mean / (2.0 * mass) - (0.5 * mass * omega * omega * z.x_mean * z.x_mean +
                                                 force * z.x_mean) -
           0.5 * omega;
  };
  out.phase = s.phase + 0.5 * dt * (lagrangian(s) + lagrangian(out));
  return out;
}

PhasePoint classical_bath_step(PhasePoint s, double drive, double dt, double omega, double mass,
                               double c) {
  const auto next = bath_step_gaussian({s.x, s.p, 0.0}, drive, dt, omega, mass, c);
  return {next.x_mean, next.p_mean};
}

GuideWave bath_step_grid(const GuideWave& state, double drive, double dt, double omega, double mass,
                         double c, TimeMode mode) {
  const Grid& g = state.grid();
  RealField v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = bilinear_coupling(drive, g.x(i), omega, mass, c);
  return step(state, v, {dt, mass, mode});
}

GuideWave coherent_wave(const Grid& grid, const CoherentState& s, double omega, double mass) {
  auto w = GuideWave::sample(grid, [&](double X) {
    const double d = X - s.x_mean;
    return std::polar(std::exp(-0.5 * mass * omega * d * d), s.phase + s.p_mean * d);
  });
  w.normalize();
  return w;
}

PhasePoint wave_moments(const GuideWave& w, double mass) {
  const Grid& g = w.grid();
  const auto grad = gradient(w);
  double num_x = 0.0;
  double norm = 0.0;
  Complex num_p = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double rho = std::norm(w[i]);
    num_x += g.x(i) * rho;
    norm += rho;
    num_p += std::conj(w[i]) * grad[i];
  }
  (void)mass;
  return {num_x / norm, num_p.imag() / norm};
}

BathState::BathState(BathSpec spec, std::size_t n_walkers) : spec_(std::move(spec)), m_(n_walkers) {
  spec_.validate(n_walkers);
  replicas_ = spec_.per_walker() ? n_walkers : 1;
  slots_ = spec_.topology == PairingTopology::diagonal ? 1 : spec_.L;
  const std::size_t cells = replicas_ * slots_;
  x.assign(cells, 0.0);
  p.assign(cells, 0.0);
  phase.assign(cells, 0.0);
  if (spec_.quantum()) {
    offset.assign(offset_rows() * slots_, 0.0);
    walker.assign(offset_rows() * slots_, 0.0);
  }
  if (spec_.engine == BathEngine::grid) {
    grids.reserve(spec_.L);
    for (std::size_t j = 0; j < spec_.L; ++j) {
      const double w = spec_.frequency(j);
      const double width = 1.0 / std::sqrt(2.0 * spec_.masses[j] * w);
      const double half = spec_.grid_widths * width;
      grids.emplace_back(-half, half, spec_.grid_points);
    }
  }
}

namespace {

double effective_c(const BathSpec& spec, std::size_t osc, std::size_t species) {
  return spec.coupling(osc, species);
}

// Position of the displaced minimum for oscillator osc under drive d = sum_i c r_i.
double equilibrium(const BathSpec& spec, std::size_t osc, double drive) {
  const double w = spec.frequency(osc);
  return -drive / (spec.masses[osc] * w * w);
}

void draw_centre(const BathSpec& spec, std::size_t osc, const Temperature& temp, RngStream& rng,
                 double& x, double& p) {
  const double w = spec.frequency(osc);
  const double m = spec.masses[osc];
  if (spec.quantum()) {
    const double nbar = temp.occupation(w);
    const double sd = std::sqrt(0.5 * nbar);
    const double re = sd * rng.normal();
    const double im = sd * rng.normal();
    x = std::sqrt(2.0 / (m * w)) * re;
    p = std::sqrt(2.0 * m * w) * im;
  } else {
    const double t = temp.temperature();
    x = std::sqrt(t / (m * w * w)) * rng.normal();
    p = std::sqrt(m * t) * rng.normal();
  }
}

void rebuild_grid_waves(BathState& state) {
  const auto& spec = state.spec();
  state.waves.clear();
  state.waves.reserve(state.replicas() * state.slots());
  for (std::size_t r = 0; r < state.replicas(); ++r) {
    for (std::size_t s = 0; s < state.slots(); ++s) {
      const std::size_t osc = state.oscillator(r, s);
      const std::size_t idx = state.index(r, s);
      state.waves.push_back(coherent_wave(state.grids[osc], {state.x[idx], state.p[idx], 0.0},
                                          spec.frequency(osc), spec.masses[osc]));
    }
  }
}

void place_bath_walkers(BathState& state) {
  for (std::size_t row = 0; row < state.offset_rows(); ++row) {
    const std::size_t r = state.spec().per_walker() ? row : 0;
    for (std::size_t s = 0; s < state.slots(); ++s) {
      const std::size_t o = row * state.slots() + s;
      state.walker[o] = state.x[state.index(r, s)] + state.offset[o];
    }
  }
}

}  // namespace

BathState sample_thermal_initial(const BathSpec& spec, const Temperature& temp,
                                 std::size_t n_walkers, std::uint64_t seed) {
  BathState state(spec, n_walkers);
  for (std::size_t r = 0; r < state.replicas(); ++r) {
    RngStream rng(seed, {r, 0, StreamPurpose::bath_thermal});
    for (std::size_t s = 0; s < state.slots(); ++s) {
      const std::size_t idx = state.index(r, s);
      draw_centre(spec, state.oscillator(r, s), temp, rng, state.x[idx], state.p[idx]);
    }
  }
  if (spec.quantum()) {
    for (std::size_t row = 0; row < state.offset_rows(); ++row) {
      RngStream rng(seed, {row, 0, StreamPurpose::bath_offset});
      const std::size_t r = spec.per_walker() ? row : 0;
      for (std::size_t s = 0; s < state.slots(); ++s) {
        const std::size_t osc = state.oscillator(r, s);
        const double width = 1.0 / std::sqrt(2.0 * spec.masses[osc] * spec.frequency(osc));
        state.offset[row * state.slots() + s] = width * rng.normal();
      }
    }
    place_bath_walkers(state);
    if (spec.engine == BathEngine::grid) rebuild_grid_waves(state);
    if (spec.engine == BathEngine::gaussian && spec.per_walker() &&
        spec.topology == PairingTopology::all_oscillators) {
      const double* c0 = spec.coupling.c.data();
      state.offset_field.assign(state.replicas(), 0.0);
      for (std::size_t r = 0; r < state.replicas(); ++r) {
        double f = 0.0;
        for (std::size_t s = 0; s < state.slots(); ++s) f += c0[s] * state.offset[r * state.slots() + s];
        state.offset_field[r] = f;
      }
    }
  }
  return state;
}

double bath_drive(const BathState& state, const WalkerEnsemble& system, std::size_t r,
                  std::size_t osc) {
  const auto& spec = state.spec();
  double d = 0.0;
  if (spec.per_walker()) {
    for (std::size_t i = 0; i < system.species(); ++i) d += effective_c(spec, osc, i) * system(r, i);
  } else {
    for (std::size_t i = 0; i < system.species(); ++i) {
      double mean = 0.0;
      for (std::size_t k = 0; k < system.walkers(); ++k) mean += system(k, i);
      d += effective_c(spec, osc, i) * mean / static_cast<double>(system.walkers());
    }
  }
  return d;
}

void resample_thermal(BathState& state, const Temperature& temp, const WalkerEnsemble& system,
                      std::uint64_t seed) {
  const auto& spec = state.spec();
  for (std::size_t r = 0; r < state.replicas(); ++r) {
    RngStream rng(seed, {r, 1, StreamPurpose::bath_thermal});
    for (std::size_t s = 0; s < state.slots(); ++s) {
      const std::size_t osc = state.oscillator(r, s);
      const std::size_t idx = state.index(r, s);
      double dx = 0.0;
      double dp = 0.0;
      draw_centre(spec, osc, temp, rng, dx, dp);
      state.x[idx] = equilibrium(spec, osc, bath_drive(state, system, r, osc)) + dx;
      state.p[idx] = dp;
      state.phase[idx] = 0.0;
    }
  }
  if (spec.quantum()) {
    place_bath_walkers(state);
    if (spec.engine == BathEngine::grid) rebuild_grid_waves(state);
  }
}

double bath_walker_position(const BathState& state, std::size_t j, std::size_t k) {
  const auto& spec = state.spec();
  const std::size_t r = state.replica_of(k);
  std::size_t s = j;
  if (spec.topology == PairingTopology::diagonal) {
    if (j != r) throw std::out_of_range("diagonal pairing: walker k only sees oscillator k");
    s = 0;
  }
  if (!spec.quantum()) return state.x[state.index(r, s)];
  const std::size_t row = spec.mode == BathMode::quantum_mean_field ? k : r;
  const std::size_t o = row * state.slots() + s;
  if (spec.engine == BathEngine::grid) return state.walker[o];
  return state.x[state.index(r, s)] + state.offset[o];
}

double bath_field_coefficient(const BathState& state, std::size_t k, std::size_t species) {
  const auto& spec = state.spec();
  const std::size_t r = state.replica_of(k);
  const std::size_t slots = state.slots();
  double f = 0.0;
  if (spec.mode == BathMode::quantum_mean_field) {
    // (1/M) sum_l of the coupling to bath walker l.
    const double inv_m = 1.0 / static_cast<double>(state.walkers());
    for (std::size_t s = 0; s < slots; ++s) {
      const std::size_t osc = state.oscillator(0, s);
      double mean = 0.0;
      for (std::size_t l = 0; l < state.walkers(); ++l) {
        const std::size_t o = l * slots + s;
        mean += spec.engine == BathEngine::grid ? state.walker[o] : state.x[s] + state.offset[o];
      }
      f += effective_c(spec, osc, species) * mean * inv_m;
    }
    return f;
  }
  if (spec.topology == PairingTopology::all_oscillators && spec.engine == BathEngine::gaussian) {
    // Hot path for large L: one contiguous row per replica. Four interleaved
    // partial sums keep the order fixed and let the loop vectorize.
    const double* x = state.x.data() + r * slots;
    const double* off = spec.quantum() ? state.offset.data() + r * slots : nullptr;
    const double* c = spec.coupling.c.col(static_cast<Eigen::Index>(species)).data();
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t s = 0;
    if (off) {
      for (; s + 4 <= slots; s += 4) {
        for (std::size_t u = 0; u < 4; ++u) acc[u] += c[s + u] * (x[s + u] + off[s + u]);
      }
      for (; s < slots; ++s) acc[0] += c[s] * (x[s] + off[s]);
    } else {
      for (; s + 4 <= slots; s += 4) {
        for (std::size_t u = 0; u < 4; ++u) acc[u] += c[s + u] * x[s + u];
      }
      for (; s < slots; ++s) acc[0] += c[s] * x[s];
    }
    return spec.coupling.scale * ((acc[0] + acc[1]) + (acc[2] + acc[3]));
  }
  for (std::size_t s = 0; s < slots; ++s) {
    const std::size_t osc = state.oscillator(r, s);
    const std::size_t idx = state.index(r, s);
    double pos = state.x[idx];
    if (spec.quantum()) pos = spec.engine == BathEngine::grid ? state.walker[idx] : pos + state.offset[idx];
    f += effective_c(spec, osc, species) * pos;
  }
  return f;
}

RealField bath_force_on_system(const BathState& state, const Grid& system_grid, std::size_t k,
                               std::size_t species) {
  const double coef = bath_field_coefficient(state, k, species);
  RealField v(system_grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = coef * system_grid.x(i);
  return v;
}

namespace {

void advance_grid_replica(BathState& state, const WalkerEnsemble& system, std::size_t r, double dt) {
  const auto& spec = state.spec();
  for (std::size_t s = 0; s < state.slots(); ++s) {
    const std::size_t osc = state.oscillator(r, s);
    const std::size_t idx = state.index(r, s);
    const double w = spec.frequency(osc);
    const double m = spec.masses[osc];
    const double drive = bath_drive(state, system, r, osc);
    GuideWave& wave = state.waves[idx];
    const GuideWave old = wave;
    wave = bath_step_grid(old, drive, dt, w, m, 1.0, TimeMode::real_time);
    const std::size_t rows = state.spec().mode == BathMode::quantum_mean_field ? state.walkers() : 1;
    for (std::size_t q = 0; q < rows; ++q) {
      const std::size_t o = spec.mode == BathMode::quantum_mean_field ? q * state.slots() + s : idx;
      // Heun predictor-corrector on the Bohmian guidance of the bath walker.
      double& R = state.walker[o];
      const double v0 = clamped_drift_velocity(old, R, m, dt);
      const double pred = reflect_into(wave.grid(), R + dt * v0);
      const double v1 = clamped_drift_velocity(wave, pred, m, dt);
      R = reflect_into(wave.grid(), R + 0.5 * dt * (v0 + v1));
    }
    const auto mom = wave_moments(wave, m);
    state.x[idx] = mom.x;
    state.p[idx] = mom.p;
  }
}

}  // namespace

bool advance_bath(BathState& state, const WalkerEnsemble& system, double dt, std::span<double> field) {
  const auto& spec = state.spec();
  const auto replicas = static_cast<std::ptrdiff_t>(state.replicas());
  if (spec.engine == BathEngine::grid && spec.quantum()) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < replicas; ++r) {
      advance_grid_replica(state, system, static_cast<std::size_t>(r), dt);
    }
    return false;
  }
  const std::size_t slots = state.slots();
  // Per-oscillator constants; the drive for replica r is sum_i c_ji r_i.
  auto& kc = state.sweep;
  if (kc.dt != dt || kc.cs.size() != spec.L) {
    for (auto* v : {&kc.cs, &kc.sn, &kc.mw, &kc.inv_mw, &kc.inv_mw2, &kc.shift, &kc.sn_inv_mw, &kc.mw_sn}) v->resize(spec.L);
    for (std::size_t j = 0; j < spec.L; ++j) {
      const double w = spec.frequency(j);
      const auto rot = midpoint_rotation(w, dt);
      kc.cs[j] = rot.cos;
      kc.sn[j] = rot.sin;
      kc.mw[j] = spec.masses[j] * w;
      kc.inv_mw2[j] = 1.0 / (spec.masses[j] * w * w);
      kc.inv_mw[j] = 1.0 / kc.mw[j];
      kc.shift[j] = -spec.coupling.scale * spec.coupling.c(static_cast<Eigen::Index>(j), 0) * kc.inv_mw2[j];
      kc.sn_inv_mw[j] = kc.sn[j] * kc.inv_mw[j];
      kc.mw_sn[j] = kc.mw[j] * kc.sn[j];
    }
    kc.dt = dt;
  }
  const auto& cs = kc.cs;
  const auto& sn = kc.sn;
  const auto& mw = kc.mw;
  const auto& inv_mw = kc.inv_mw;
  const auto& inv_mw2 = kc.inv_mw2;
  const bool uniform_species = [&] {
    for (std::size_t i = 1; i < spec.coupling.species(); ++i) {
      if (spec.coupling.c.col(static_cast<Eigen::Index>(i)) != spec.coupling.c.col(0)) return false;
    }
    return true;
  }();
  std::vector<double> mean_r;
  if (!spec.per_walker()) {
    mean_r.assign(system.species(), 0.0);
    for (std::size_t i = 0; i < system.species(); ++i) {
      for (std::size_t k = 0; k < system.walkers(); ++k) mean_r[i] += system(k, i);
      mean_r[i] /= static_cast<double>(system.walkers());
    }
  }
  // Fused field sums need the same contiguous row layout the coefficient reads.
  const bool emit = !field.empty() && uniform_species && spec.per_walker() &&
                    spec.topology == PairingTopology::all_oscillators &&
                    (!spec.quantum() || !state.offset_field.empty());
  if (emit && field.size() != state.replicas()) throw std::invalid_argument("advance_bath: field size must equal replicas");
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rr = 0; rr < replicas; ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    double* xs = state.x.data() + r * slots;
    double* ps = state.p.data() + r * slots;
    if (uniform_species) {
      double rsum = 0.0;
      for (std::size_t i = 0; i < system.species(); ++i) rsum += spec.per_walker() ? system(r, i) : mean_r[i];
      const double scale = spec.coupling.scale;
      const double* c0 = spec.coupling.c.data();  // column 0, contiguous over oscillators
      if (spec.topology == PairingTopology::diagonal) {
        const double x_eq = -scale * c0[r] * rsum * inv_mw2[r];
        const double xi = xs[0] - x_eq;
        const double q = ps[0] * inv_mw[r];
        xs[0] = x_eq + cs[r] * xi + sn[r] * q;
        ps[0] = mw[r] * (cs[r] * q - sn[r] * xi);
      } else {
        // Restrict-qualified views so the oscillator sweep vectorizes.
        double* __restrict xv = xs;
        double* __restrict pv = ps;
        const double* __restrict eq = kc.shift.data();
        const double* __restrict cv = cs.data();
        const double* __restrict a_v = kc.sn_inv_mw.data();
        const double* __restrict b_v = kc.mw_sn.data();
        const double* __restrict c = c0;
        double acc[4] = {0.0, 0.0, 0.0, 0.0};
        std::size_t s = 0;
        // x' = x_eq + cos xi + sin p/(M w),  p' = cos p - M w sin xi
        auto rotate = [&](std::size_t i, double& a) {
          const double x_eq = eq[i] * rsum;
          const double xi = xv[i] - x_eq;
          const double p = pv[i];
          const double xn = x_eq + cv[i] * xi + a_v[i] * p;
          pv[i] = cv[i] * p - b_v[i] * xi;
          xv[i] = xn;
          a += c[i] * xn;
        };
        for (; s + 4 <= slots; s += 4) {
          for (std::size_t u = 0; u < 4; ++u) rotate(s + u, acc[u]);
        }
        for (; s < slots; ++s) rotate(s, acc[0]);
        if (emit) {
          const double off = state.offset_field.empty() ? 0.0 : state.offset_field[r];
          field[r] = scale * (((acc[0] + acc[1]) + (acc[2] + acc[3])) + off);
        }
      }
    } else {
      for (std::size_t s = 0; s < slots; ++s) {
        const std::size_t j = state.oscillator(r, s);
        const double x_eq = -bath_drive(state, system, r, j) * inv_mw2[j];
        const double xi = xs[s] - x_eq;
        const double q = ps[s] * inv_mw[j];
        xs[s] = x_eq + cs[j] * xi + sn[j] * q;
        ps[s] = mw[j] * (cs[j] * q - sn[j] * xi);
      }
    }
  }
  return emit;
}

void relax_bath(BathState& state, const WalkerEnsemble& system, double dtau, std::uint64_t seed,
                std::size_t step) {
  const auto& spec = state.spec();
  const auto replicas = static_cast<std::ptrdiff_t>(state.replicas());
  const std::size_t slots = state.slots();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rr = 0; rr < replicas; ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    for (std::size_t s = 0; s < slots; ++s) {
      const std::size_t osc = state.oscillator(r, s);
      const std::size_t idx = state.index(r, s);
      const double w = spec.frequency(osc);
      const double m = spec.masses[osc];
      const double drive = bath_drive(state, system, r, osc);
      if (spec.engine == BathEngine::grid && spec.quantum()) {
        GuideWave& wave = state.waves[idx];
        wave = bath_step_grid(wave, drive, dtau, w, m, 1.0, TimeMode::imaginary_time);
        const auto mom = wave_moments(wave, m);
        state.x[idx] = mom.x;
        state.p[idx] = mom.p;
        const double width = 1.0 / std::sqrt(2.0 * m * w);
        const std::size_t rows = spec.mode == BathMode::quantum_mean_field ? state.walkers() : 1;
        for (std::size_t q = 0; q < rows; ++q) {
          const std::size_t o = spec.mode == BathMode::quantum_mean_field ? q * slots + s : idx;
          RngStream rng(seed ^ splitmix64(step), {o, osc, StreamPurpose::metropolis});
          state.walker[o] = metropolis_resample(state.walker[o], wave, width, 5, rng);
        }
      } else {
        const double x_eq = equilibrium(spec, osc, drive);
        const double decay = std::exp(-w * dtau);
        state.x[idx] = x_eq + (state.x[idx] - x_eq) * decay;
        state.p[idx] *= decay;
      }
    }
  }
}

}  // namespace tdqmc
