#pragma once

#include <filesystem>
#include <string>

#include "tdqmc/experiments.hpp"

namespace tdqmc {

/// step,tau,E
void write_energy_trace(const std::filesystem::path& path, const RunReport& report);
/// x,rho_tdqmc,rho_oracle; either density column may be empty in the report.
void write_density(const std::filesystem::path& path, const Grid& grid, const RunReport& report);
/// t,x_mean,envelope
void write_dipole(const std::filesystem::path& path, const RunReport& report);
/// Seed, timings, metrics, calibrated scale and the config echo.
void write_report_json(const std::filesystem::path& path, const RunReport& report,
                       const std::string& command);

}  // namespace tdqmc
