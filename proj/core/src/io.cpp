#include "tdqmc/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "tdqmc/errors.hpp"

namespace tdqmc {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_energy_trace(const std::filesystem::path& path, const RunReport& report) {
  auto out = open_out(path);
  out << "step,tau,E\n";
  for (const auto& s : report.energy_trace) out << s.step << ',' << num(s.tau) << ',' << num(s.energy) << '\n';
}

void write_density(const std::filesystem::path& path, const Grid& grid, const RunReport& report) {
  auto out = open_out(path);
  out << "x,rho_tdqmc,rho_oracle\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << num(grid.x(i)) << ',';
    if (i < report.density.size()) out << num(report.density[i]);
    out << ',';
    if (i < report.oracle_density.size()) out << num(report.oracle_density[i]);
    out << '\n';
  }
}

void write_dipole(const std::filesystem::path& path, const RunReport& report) {
  auto out = open_out(path);
  out << "t,x_mean,envelope\n";
  for (const auto& s : report.dipole) out << num(s.t) << ',' << num(s.x_mean) << ',' << num(s.envelope) << '\n';
}

void write_report_json(const std::filesystem::path& path, const RunReport& report,
                       const std::string& command) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = report.seed;
  j["timings_s"] = report.timings;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.metrics) {
    if (std::isfinite(v)) {
      metrics[k] = v;
    } else {
      metrics[k] = nullptr;
    }
  }
  j["metrics"] = metrics;
  j["calibrated_scale"] = report.calibrated_scale ? nlohmann::ordered_json(*report.calibrated_scale)
                                                  : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.config) cfg[k] = v;
  j["config"] = cfg;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace tdqmc
