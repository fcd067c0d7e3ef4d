// CSV / text persistence for sensor logs, trajectories and maps.
//
// CSV files carry a header row, use ',' separators and '.' decimals, and
// write doubles with 17 significant digits.
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flam/flow_map.hpp"
#include "flam/flow_models.hpp"
#include "flam/metrics.hpp"
#include "flam/sim.hpp"

namespace flam {

/// "%.17g" rendering.
[[nodiscard]] std::string fmt_double(double v);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

void write_ins_csv(const std::filesystem::path& path, std::span<const InsSample> ins);
[[nodiscard]] std::vector<InsSample> read_ins_csv(const std::filesystem::path& path);

void write_adcp_csv(const std::filesystem::path& path, std::span<const AdcpSample> adcp);
/// Steps are left at zero; read_sensor_log resolves them against truth.csv.
[[nodiscard]] std::vector<AdcpSample> read_adcp_csv(const std::filesystem::path& path);

/// Columns t,x,y,vx,vy,psi.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);
[[nodiscard]] Trajectory read_trajectory_csv(const std::filesystem::path& path);

void write_map_csv(const std::filesystem::path& path, const FlowMap& map);
/// Node positions in the file must match `grid`.
[[nodiscard]] FlowMap read_map_csv(const std::filesystem::path& path, const GridSpec& grid);

/// ins.csv, adcp.csv and truth.csv in `dir`.
void write_sensor_log(const std::filesystem::path& dir, const SensorLog& log);
[[nodiscard]] SensorLog read_sensor_log(const std::filesystem::path& dir, const NoiseConfig& noise);

/// Columns t,dr_pos_err,flam_pos_err,dr_vel_err,flam_vel_err.
void write_errors_csv(const std::filesystem::path& path, const RunReport& report);

/// Columns node_id,x,y,boundary,lsf_err,flam_err.
void write_map_errors_csv(const std::filesystem::path& path, const GridSpec& grid,
                          const RunReport& report);

/// Columns k,energy,count.
void write_spectrum_csv(const std::filesystem::path& path, const EnergySpectrum& spectrum);

}  // namespace flam
