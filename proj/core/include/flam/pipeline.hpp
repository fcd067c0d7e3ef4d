// End-to-end helpers shared by the CLI, the acceptance suite and benchmarks.
#pragma once

#include <cstddef>
#include <vector>

#include "flam/flow_map.hpp"
#include "flam/metrics.hpp"
#include "flam/scenario.hpp"
#include "flam/sim.hpp"
#include "flam/solver.hpp"

namespace flam {

/// Truth trajectory plus noisy sensor samples for the scenario's seed.
[[nodiscard]] SensorLog simulate(const Scenario& scenario);

/// Node velocities the map is scored against: the steady part of the flow
/// sampled at t = 0 (turbulence is not mappable on the grid).
[[nodiscard]] FlowMap truth_map(const Scenario& scenario);

struct SolveOutput {
    Trajectory dr;
    FlowMap lsf_map;
    Trajectory flam;
    FlowMap flam_map;
    std::vector<IterationRecord> iterations;
    double initial_cost = 0.0;
    double final_cost = 0.0;
    std::size_t residual_count = 0;
    std::size_t dropped_observations = 0;
    bool converged = false;
    bool diverged = false;
    bool stalled = false;
};

[[nodiscard]] SolveOutput solve(const Scenario& scenario, const SensorLog& log,
                                const IterationObserver& observer = {});

[[nodiscard]] RunReport make_report(const Scenario& scenario, const Trajectory& truth,
                                    const FlowMap& map_truth, const SolveOutput& solved);

/// simulate + solve + make_report.
[[nodiscard]] RunReport run_scenario(const Scenario& scenario);

}  // namespace flam
