// Command-line driver: one subcommand per experiment, all sharing
// --config/--out/--seed.
#include <CLI11.hpp>

#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "tdqmc/config.hpp"
#include "tdqmc/errors.hpp"
#include "tdqmc/experiments.hpp"
#include "tdqmc/io.hpp"
#include "tdqmc/observables.hpp"
#include "tdqmc/oracle.hpp"

namespace fs = std::filesystem;
using namespace tdqmc;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key = value config file (defaults if omitted)")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory")->required();
  sub->add_option("--seed", c.seed, "overrides the config seed");
}

SimConfig load(const Common& c) {
  ConfigFile file;
  if (!c.config.empty()) file = ConfigFile::load(c.config);
  if (c.seed) file.set("seed", std::to_string(*c.seed));
  return make_config(file);
}

int cmd_spectrum(const Common& c) {
  const SimConfig cfg = load(c);
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.seed = cfg.seed;
  report.config = echo_config(cfg);
  const auto dec = diagonalize_1e(cfg.grid, cfg.static_potential(0), cfg.species[0].mass, cfg.oracle.cutoff);
  std::ofstream out(fs::path(c.out) / "spectrum.csv");
  out << "particles,n,E\n";
  out.precision(10);
  for (std::size_t n = 0; n < dec.count(); ++n) out << "1," << n << ',' << dec.energies[n] << '\n';
  report.metrics["levels_1e"] = static_cast<double>(dec.count());
  report.metrics["max_residual_1e"] = dec.max_residual;
  if (cfg.species.size() == 2) {
    const Grid coarse(cfg.grid.x_min(), cfg.grid.x_max(), cfg.oracle.points_2e);
    SimConfig c2 = cfg;
    c2.grid = coarse;
    const auto dec2 = diagonalize_2e(coarse, c2.static_potential(0), cfg.pair, cfg.oracle.krylov, cfg.species[0].mass);
    for (std::size_t n = 0; n < dec2.count(); ++n) out << "2," << n << ',' << dec2.energies[n] << '\n';
    report.metrics["ground_2e"] = dec2.energies.front();
  }
  report.metrics["ground_1e"] = dec.energies.front();
  report.timings["spectrum"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_report_json(fs::path(c.out) / "report.json", report, "spectrum");
  for (std::size_t n = 0; n < std::min<std::size_t>(dec.count(), 6); ++n) {
    std::cout << "E" << n << " = " << dec.energies[n] << '\n';
  }
  return 0;
}

int cmd_prepare(const Common& c) {
  const SimConfig cfg = load(c);
  PreparedState st = prepare_ground(cfg);
  RunReport& r = st.report;
  r.density = diagonal_density(st.waves.front());
  r.metrics["max_pairwise_distance"] = max_pairwise_distance(st.waves.front());
  r.metrics["fwhm_tdqmc"] = fwhm(cfg.grid, r.density);
  write_energy_trace(fs::path(c.out) / "energy_trace.csv", r);
  write_density(fs::path(c.out) / "density.csv", cfg.grid, r);
  write_report_json(fs::path(c.out) / "report.json", r, "prepare");
  std::cout << "E = " << r.metrics["energy"] << " after " << r.energy_trace.back().step << " steps\n";
  return 0;
}

int cmd_thermal(const Common& c) {
  const SimConfig cfg = load(c);
  const auto res = run_thermal_density(cfg);
  write_energy_trace(fs::path(c.out) / "energy_trace.csv", res.report);
  write_density(fs::path(c.out) / "density.csv", cfg.grid, res.report);
  write_report_json(fs::path(c.out) / "report.json", res.report, "thermal");
  std::cout << "FWHM tdqmc = " << res.fwhm_tdqmc << ", oracle = " << res.fwhm_oracle
            << " (relative " << res.relative_fwhm_error() << ")\n";
  return 0;
}

int cmd_dynamics(const Common& c) {
  const SimConfig cfg = load(c);
  const auto res = run_dipole_dynamics(cfg);
  write_energy_trace(fs::path(c.out) / "energy_trace.csv", res.report);
  write_dipole(fs::path(c.out) / "dipole.csv", res.report);
  write_report_json(fs::path(c.out) / "report.json", res.report, "dynamics");
  std::cout << "envelope ratio = " << res.envelope.ratio << " over " << res.envelope.lobes << " lobes\n";
  return 0;
}

int cmd_calibrate(const Common& c) {
  SimConfig cfg = load(c);
  const auto t0 = std::chrono::steady_clock::now();
  const auto cal = calibrate_coupling(cfg, cfg.calibration.beta);
  cfg.bath.enabled = true;
  cfg.bath.scale = cal.scale;
  RunReport report;
  report.seed = cfg.seed;
  report.config = echo_config(cfg);
  report.calibrated_scale = cal.scale;
  report.metrics["residual"] = cal.residual;
  report.metrics["evaluations"] = static_cast<double>(cal.evaluations);
  report.metrics["fwhm_oracle"] = cal.fwhm_oracle;
  report.timings["calibrate"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream probes(fs::path(c.out) / "calibration.csv");
  probes << "scale,fwhm_tdqmc\n";
  probes.precision(10);
  for (const auto& [s, w] : cal.probes) probes << s << ',' << w << '\n';
  write_report_json(fs::path(c.out) / "report.json", report, "calibrate");
  std::cout << "scale = " << cal.scale << " (residual " << cal.residual << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermal TDQMC with a harmonic bath"};
  app.require_subcommand(1);
  Common common;
  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const Common&);
  };
  const Entry entries[] = {
      {"spectrum", "oracle eigenvalues of the configured system", cmd_spectrum},
      {"prepare", "imaginary-time ground-state preparation", cmd_prepare},
      {"thermal", "thermal diagonal density against the oracle", cmd_thermal},
      {"dynamics", "pulse-driven dipole oscillations", cmd_dynamics},
      {"calibrate", "fit the bath coupling scale to the oracle width", cmd_calibrate},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> subs;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    add_common(sub, common);
    subs.emplace_back(sub, &e);
  }
  CLI11_PARSE(app, argc, argv);
  try {
    const int threads = configure_threads_from_env();
    fs::create_directories(common.out);
    std::cerr << "threads: " << threads << '\n';
    for (const auto& [sub, e] : subs) {
      if (sub->parsed()) return e->run(common);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 1;
}
