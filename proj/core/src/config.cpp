#include "tdqmc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <sstream>

#include "tdqmc/errors.hpp"

namespace tdqmc {

std::string to_string(PotentialId id) {
  switch (id) {
    case PotentialId::soft_coulomb: return "soft_coulomb";
    case PotentialId::harmonic: return "harmonic";
    case PotentialId::free: return "free";
  }
  return "?";
}

PotentialId parse_potential_id(const std::string& s) {
  if (s == "soft_coulomb") return PotentialId::soft_coulomb;
  if (s == "harmonic") return PotentialId::harmonic;
  if (s == "free") return PotentialId::free;
  throw ConfigError("unknown potential id '" + s + "'");
}

double PulseSpec::field(double t) const {
  const double u = (t - center) / width;
  return amplitude * std::exp(-u * u);
}

void SimConfig::validate() const {
  if (species.empty()) throw ConfigError("at least one species is required");
  for (const auto& s : species) {
    if (!(s.mass > 0.0)) throw ConfigError("species mass must be positive");
  }
  if (M < 1) throw ConfigError("walkers must be >= 1");
  if (!(dt_imag > 0.0) || !(dt_real > 0.0)) throw ConfigError("time steps must be positive");
  if (prep.max_steps < 1 || prep.window < 1) throw ConfigError("prep.max_steps and prep.window must be >= 1");
  if (!(prep.tol > 0.0)) throw ConfigError("prep.tol must be positive");
  if (!(prep.init_width > 0.0) || !(prep.init_jitter >= 0.0)) throw ConfigError("init.width > 0 and init.jitter >= 0 required");
  if (n_real_steps < 1) throw ConfigError("real.steps must be >= 1");
  if (!(pulse.width > 0.0)) throw ConfigError("pulse.width must be positive");
  if (!(kernel.alpha > 0.0) || !(kernel.sigma_floor > 0.0)) throw ConfigError("kernel alpha and sigma_floor must be positive");
  if (!(temp.beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(calibration.beta > 0.0)) throw ConfigError("calibrate.beta must be positive");
  if (!(calibration.scale_lo >= 0.0) || !(calibration.scale_hi > calibration.scale_lo) ||
      !(calibration.scale_max >= calibration.scale_hi)) {
    throw ConfigError("calibration bracket must satisfy 0 <= scale_lo < scale_hi <= scale_max");
  }
  if (bath.enabled) bath_spec().validate(M);
}

RealField SimConfig::static_potential(std::size_t i) const {
  switch (species.at(i).potential) {
    case PotentialId::soft_coulomb: return soft_coulomb_field(grid, soft_coulomb);
    case PotentialId::harmonic: return harmonic_field(grid, harmonic_omega, species[i].mass);
    case PotentialId::free: return RealField(grid.size(), 0.0);
  }
  return {};
}

BathSpec SimConfig::bath_spec() const {
  return BathSpec::ohmic(bath.L, bath.omega_max, bath.mass, species.size(), bath.scale, bath.mode,
                         bath.engine, bath.topology);
}

ConfigFile ConfigFile::parse(std::istream& in, const std::string& source) {
  ConfigFile f;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(where + ": empty key or value");
    if (f.values_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    f.values_[key] = value;
  }
  return f;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.string());
}

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

double as_double(const std::string& key, const std::string& v) {
  if (v == "inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !std::isfinite(d)) throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  return d;
}

std::uint64_t as_uint(const std::string& key, const std::string& v) {
  std::uint64_t u = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), u);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a non-negative integer");
  }
  return u;
}

bool as_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("key '" + key + "': '" + v + "' is not a boolean");
}

template <typename F>
auto wrap_enum(const std::string& key, const std::string& v, F&& parse) {
  try {
    return parse(v);
  } catch (const std::exception& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

// Grid bounds are collected separately because Grid is rebuilt once at the end.
struct Draft {
  SimConfig cfg;
  double x_min;
  double x_max;
  std::size_t n;
  std::size_t species_count;
  SpeciesSpec species;
};

struct Key {
  const char* name;
  std::function<void(Draft&, const std::string& key, const std::string& v)> set;
  std::function<std::string(const SimConfig&)> get;
};

const std::vector<Key>& schema() {
  using S = std::string;
  static const std::vector<Key> keys = {
      {"grid.x_min", [](Draft& d, const S& k, const S& v) { d.x_min = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.grid.x_min()); }},
      {"grid.x_max", [](Draft& d, const S& k, const S& v) { d.x_max = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.grid.x_max()); }},
      {"grid.n", [](Draft& d, const S& k, const S& v) { d.n = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.grid.size()); }},
      {"species.count", [](Draft& d, const S& k, const S& v) { d.species_count = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.species.size()); }},
      {"species.mass", [](Draft& d, const S& k, const S& v) { d.species.mass = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.species.front().mass); }},
      {"species.potential",
       [](Draft& d, const S& k, const S& v) { d.species.potential = wrap_enum(k, v, parse_potential_id); },
       [](const SimConfig& c) { return to_string(c.species.front().potential); }},
      {"soft_coulomb.depth", [](Draft& d, const S& k, const S& v) { d.cfg.soft_coulomb.depth = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.soft_coulomb.depth); }},
      {"soft_coulomb.softening",
       [](Draft& d, const S& k, const S& v) { d.cfg.soft_coulomb.softening = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.soft_coulomb.softening); }},
      {"harmonic.omega", [](Draft& d, const S& k, const S& v) { d.cfg.harmonic_omega = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.harmonic_omega); }},
      {"pair.strength", [](Draft& d, const S& k, const S& v) { d.cfg.pair.strength = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.pair.strength); }},
      {"pair.softening", [](Draft& d, const S& k, const S& v) { d.cfg.pair.softening = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.pair.softening); }},
      {"walkers", [](Draft& d, const S& k, const S& v) { d.cfg.M = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.M); }},
      {"kernel.alpha", [](Draft& d, const S& k, const S& v) { d.cfg.kernel.alpha = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.kernel.alpha); }},
      {"kernel.sigma_floor", [](Draft& d, const S& k, const S& v) { d.cfg.kernel.sigma_floor = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.kernel.sigma_floor); }},
      {"bath.enabled", [](Draft& d, const S& k, const S& v) { d.cfg.bath.enabled = as_bool(k, v); },
       [](const SimConfig& c) { return S(c.bath.enabled ? "true" : "false"); }},
      {"bath.L", [](Draft& d, const S& k, const S& v) { d.cfg.bath.L = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.bath.L); }},
      {"bath.omega_max", [](Draft& d, const S& k, const S& v) { d.cfg.bath.omega_max = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.bath.omega_max); }},
      {"bath.mass", [](Draft& d, const S& k, const S& v) { d.cfg.bath.mass = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.bath.mass); }},
      {"bath.coupling_scale", [](Draft& d, const S& k, const S& v) { d.cfg.bath.scale = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.bath.scale); }},
      {"bath.mode", [](Draft& d, const S& k, const S& v) { d.cfg.bath.mode = wrap_enum(k, v, parse_bath_mode); },
       [](const SimConfig& c) { return to_string(c.bath.mode); }},
      {"bath.engine",
       [](Draft& d, const S& k, const S& v) { d.cfg.bath.engine = wrap_enum(k, v, parse_bath_engine); },
       [](const SimConfig& c) { return to_string(c.bath.engine); }},
      {"bath.topology",
       [](Draft& d, const S& k, const S& v) { d.cfg.bath.topology = wrap_enum(k, v, parse_pairing_topology); },
       [](const SimConfig& c) { return to_string(c.bath.topology); }},
      {"beta", [](Draft& d, const S& k, const S& v) { d.cfg.temp = Temperature::from_beta(as_double(k, v)); },
       [](const SimConfig& c) { return fmt(c.temp.beta); }},
      {"dt_imag", [](Draft& d, const S& k, const S& v) { d.cfg.dt_imag = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.dt_imag); }},
      {"dt_real", [](Draft& d, const S& k, const S& v) { d.cfg.dt_real = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.dt_real); }},
      {"prep.max_steps", [](Draft& d, const S& k, const S& v) { d.cfg.prep.max_steps = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.prep.max_steps); }},
      {"prep.tol", [](Draft& d, const S& k, const S& v) { d.cfg.prep.tol = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.prep.tol); }},
      {"prep.window", [](Draft& d, const S& k, const S& v) { d.cfg.prep.window = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.prep.window); }},
      {"prep.metropolis_substeps",
       [](Draft& d, const S& k, const S& v) { d.cfg.prep.metropolis_substeps = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.prep.metropolis_substeps); }},
      {"init.width", [](Draft& d, const S& k, const S& v) { d.cfg.prep.init_width = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.prep.init_width); }},
      {"init.jitter", [](Draft& d, const S& k, const S& v) { d.cfg.prep.init_jitter = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.prep.init_jitter); }},
      {"real.steps", [](Draft& d, const S& k, const S& v) { d.cfg.n_real_steps = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.n_real_steps); }},
      {"seed", [](Draft& d, const S& k, const S& v) { d.cfg.seed = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.seed); }},
      {"pulse.amplitude", [](Draft& d, const S& k, const S& v) { d.cfg.pulse.amplitude = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.pulse.amplitude); }},
      {"pulse.center", [](Draft& d, const S& k, const S& v) { d.cfg.pulse.center = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.pulse.center); }},
      {"pulse.width", [](Draft& d, const S& k, const S& v) { d.cfg.pulse.width = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.pulse.width); }},
      {"oracle.cutoff", [](Draft& d, const S& k, const S& v) { d.cfg.oracle.cutoff = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.oracle.cutoff); }},
      {"oracle.points_2e", [](Draft& d, const S& k, const S& v) { d.cfg.oracle.points_2e = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.oracle.points_2e); }},
      {"oracle.krylov_states",
       [](Draft& d, const S& k, const S& v) { d.cfg.oracle.krylov.states = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.oracle.krylov.states); }},
      {"oracle.krylov_max_iterations",
       [](Draft& d, const S& k, const S& v) { d.cfg.oracle.krylov.max_iterations = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.oracle.krylov.max_iterations); }},
      {"oracle.krylov_tol",
       [](Draft& d, const S& k, const S& v) { d.cfg.oracle.krylov.tolerance = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.oracle.krylov.tolerance); }},
      {"calibrate.beta", [](Draft& d, const S& k, const S& v) { d.cfg.calibration.beta = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.calibration.beta); }},
      {"calibrate.scale_lo", [](Draft& d, const S& k, const S& v) { d.cfg.calibration.scale_lo = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.calibration.scale_lo); }},
      {"calibrate.scale_hi", [](Draft& d, const S& k, const S& v) { d.cfg.calibration.scale_hi = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.calibration.scale_hi); }},
      {"calibrate.scale_max",
       [](Draft& d, const S& k, const S& v) { d.cfg.calibration.scale_max = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.calibration.scale_max); }},
      {"calibrate.rel_tol", [](Draft& d, const S& k, const S& v) { d.cfg.calibration.rel_tol = as_double(k, v); },
       [](const SimConfig& c) { return fmt(c.calibration.rel_tol); }},
      {"calibrate.max_iterations",
       [](Draft& d, const S& k, const S& v) { d.cfg.calibration.max_iterations = as_uint(k, v); },
       [](const SimConfig& c) { return std::to_string(c.calibration.max_iterations); }},
  };
  return keys;
}

}  // namespace

SimConfig make_config(const ConfigFile& file) {
  Draft d{SimConfig{}, 0.0, 0.0, 0, 0, SpeciesSpec{}};
  d.x_min = d.cfg.grid.x_min();
  d.x_max = d.cfg.grid.x_max();
  d.n = d.cfg.grid.size();
  d.species_count = d.cfg.species.size();
  d.species = d.cfg.species.front();

  const auto& keys = schema();
  const auto& values = file.values();
  if (values.count("beta") && values.count("temperature")) {
    throw ConfigError("give either 'beta' or 'temperature', not both");
  }
  for (const auto& [key, value] : values) {
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return key == k.name; });
    if (it == keys.end() && key != "temperature") throw ConfigError("unknown config key '" + key + "'");
    try {
      if (it == keys.end()) {
        d.cfg.temp = Temperature::from_temperature(as_double(key, value));
      } else {
        it->set(d, key, value);
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError("key '" + key + "': " + e.what());
    }
  }
  try {
    d.cfg.grid = Grid(d.x_min, d.x_max, d.n);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  if (d.species_count < 1) throw ConfigError("species.count must be >= 1");
  d.cfg.species.assign(d.species_count, d.species);
  d.cfg.validate();
  return d.cfg;
}

std::vector<std::pair<std::string, std::string>> echo_config(const SimConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : schema()) out.emplace_back(k.name, k.get(cfg));
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : schema()) out.emplace_back(k.name);
  out.emplace_back("temperature");
  return out;
}

}  // namespace tdqmc
