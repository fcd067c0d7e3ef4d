// Scenario configuration: flow, grid, trajectory, sensor noise and solver
// settings for one reproducible run, with JSON (de)serialization and the two
// built-in presets.
//
// JSON schema (every key optional; omitted keys keep the case1 defaults):
//
//   {
//     "name": "case1", "seed": 1,
//     "flow": { "variant": "single_gyre" | "double_gyre" | "turbulent_double_gyre",
//               "domain": { "min": [x, y], "max": [x, y] },
//               "gyre": { "amplitude", "epsilon", "omega", "length_scale" },
//               "ks": { "integral_scale", "kolmogorov_scale", "n_modes",
//                       "intensity", "unsteadiness", "rng_seed" } },
//     "grid": { "origin": [x, y], "spacing": [dx, dy], "dims": [nx, ny] },
//     "trajectory": { "start": [x, y], "heading", "v_max", "speed",
//                     "duration", "lane_spacing" },
//     "noise": { "ins": { "rate_hz", "accel": CHANNEL, "gyro": CHANNEL },
//                "adcp": { "rate_hz", "flow": CHANNEL } },
//     "factors": { "sigma_v", "sigma_map" },
//     "solver": { "damping", "line_search", "max_step_halvings", "anchor_weight",
//                 "max_iterations", "step_tolerance", "lsf_ridge",
//                 "cg": { "relative_tolerance", "max_iterations",
//                         "preconditioner": "none" | "block_jacobi" | "trajectory_map" } }
//   }
//
//   CHANNEL = { "white_density", "bias_sigma", "bias_tau" }   (SI units)
//
// When "flow.ks.rng_seed" is absent the KS seed is derived from "seed".
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "flam/factors.hpp"
#include "flam/flow_map.hpp"
#include "flam/flow_models.hpp"
#include "flam/sim.hpp"
#include "flam/solver.hpp"

namespace flam {

struct Scenario {
    std::string name = "case1";
    std::uint64_t seed = 1;
    FlowFieldSpec flow;
    GridSpec grid;
    TrajectoryParams trajectory;  ///< domain and dt are derived, see trajectory_params()
    NoiseConfig noise;
    double sigma_v = 1e-2;
    double sigma_map = 0.3;  ///< node velocity prior SD [m/s], 0 disables
    SolverConfig solver;
    bool ks_seed_pinned = false;

    void validate() const;

    /// Copy with `seed` applied; re-derives the KS seed unless pinned.
    [[nodiscard]] Scenario with_seed(std::uint64_t new_seed) const;

    [[nodiscard]] TrajectoryParams trajectory_params() const;
    [[nodiscard]] FactorWeights factor_weights() const {
        return FactorWeights::from_noise(noise, sigma_v, sigma_map);
    }
};

/// "case1" (steady single gyre, 10 x 10 m, 5 x 5 grid) or "case2" (turbulent
/// double gyre, 20 x 10 m, 9 x 5 grid). Throws ConfigError otherwise.
[[nodiscard]] Scenario preset(std::string_view name);

[[nodiscard]] Scenario scenario_from_json(std::string_view text);
[[nodiscard]] std::string scenario_to_json(const Scenario& scenario);

[[nodiscard]] std::string_view to_string(Preconditioner p);

}  // namespace flam
