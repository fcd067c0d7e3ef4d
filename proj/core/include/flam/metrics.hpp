// Trajectory and flow-map error metrics.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "flam/flow_map.hpp"
#include "flam/sim.hpp"
#include "flam/solver.hpp"

namespace flam {

struct TrajectoryErrors {
    std::vector<double> t;
    std::vector<double> position;  ///< |p_est - p_true| [m]
    std::vector<double> velocity;  ///< |v_est - v_true|, inertial frame [m/s]
    double position_rmse = 0.0;
    double velocity_rmse = 0.0;

    [[nodiscard]] double terminal_position() const { return position.empty() ? 0.0 : position.back(); }
};

/// Throws ConfigError when the series lengths or timestamps differ.
[[nodiscard]] TrajectoryErrors trajectory_errors(const Trajectory& estimate, const Trajectory& truth);

struct MapErrors {
    std::vector<double> node;  ///< |v_est - v_true| per node [m/s]
    double rmse = 0.0;
    double interior_rmse = 0.0;
    double boundary_rmse = 0.0;
    std::size_t interior_count = 0;
    std::size_t boundary_count = 0;
};

/// Throws ConfigError when the grids differ.
[[nodiscard]] MapErrors map_errors(const FlowMap& estimate, const FlowMap& truth);

/// Root of the mean of squares.
[[nodiscard]] double rms(const std::vector<double>& values);

struct RunReport {
    TrajectoryErrors dr;
    TrajectoryErrors flam;
    MapErrors lsf_map;
    MapErrors flam_map;
    std::vector<IterationRecord> iterations;
    double final_cost = 0.0;
    double normalized_residual = 0.0;  ///< final cost per scalar residual component
    bool converged = false;
    std::size_t dropped_observations = 0;
    std::string scenario;
    std::uint64_t seed = 0;
};

/// One compact JSON object (no trailing newline).
[[nodiscard]] std::string iteration_to_json(const IterationRecord& record);

/// JSON rendering with a fixed key order and shortest round-trip doubles.
[[nodiscard]] std::string report_to_json(const RunReport& report);

}  // namespace flam
