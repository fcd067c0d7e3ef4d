#include "flam/metrics.hpp"

#include <cmath>

#include <json.hpp>

#include "flam/errors.hpp"

namespace flam {

double rms(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (double v : values) {
        s += v * v;
    }
    return std::sqrt(s / static_cast<double>(values.size()));
}

TrajectoryErrors trajectory_errors(const Trajectory& estimate, const Trajectory& truth) {
    if (estimate.size() != truth.size()) {
        throw ConfigError("trajectory lengths differ (" + std::to_string(estimate.size()) + " vs " +
                          std::to_string(truth.size()) + ")");
    }
    TrajectoryErrors out;
    out.t.reserve(truth.size());
    out.position.reserve(truth.size());
    out.velocity.reserve(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (std::abs(estimate[k].t - truth[k].t) > 1e-9) {
            throw ConfigError("timestamp mismatch at sample " + std::to_string(k));
        }
        out.t.push_back(truth[k].t);
        out.position.push_back((estimate[k].state.position - truth[k].state.position).norm());
        out.velocity.push_back((estimate[k].state.velocity - truth[k].state.velocity).norm());
    }
    out.position_rmse = rms(out.position);
    out.velocity_rmse = rms(out.velocity);
    return out;
}

MapErrors map_errors(const FlowMap& estimate, const FlowMap& truth) {
    if (!(estimate.grid() == truth.grid())) {
        throw ConfigError("map grids differ");
    }
    MapErrors out;
    std::vector<double> interior;
    std::vector<double> boundary;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = (estimate[i] - truth[i]).norm();
        out.node.push_back(e);
        (truth.grid().is_boundary(static_cast<int>(i)) ? boundary : interior).push_back(e);
    }
    out.rmse = rms(out.node);
    out.interior_rmse = rms(interior);
    out.boundary_rmse = rms(boundary);
    out.interior_count = interior.size();
    out.boundary_count = boundary.size();
    return out;
}

namespace {

nlohmann::ordered_json trajectory_summary(const TrajectoryErrors& e) {
    nlohmann::ordered_json j;
    j["position_rmse"] = e.position_rmse;
    j["velocity_rmse"] = e.velocity_rmse;
    j["terminal_position_error"] = e.terminal_position();
    return j;
}

nlohmann::ordered_json map_summary(const MapErrors& e) {
    nlohmann::ordered_json j;
    j["rmse"] = e.rmse;
    j["interior_rmse"] = e.interior_rmse;
    j["boundary_rmse"] = e.boundary_rmse;
    j["interior_nodes"] = e.interior_count;
    j["boundary_nodes"] = e.boundary_count;
    return j;
}

nlohmann::ordered_json iteration_json(const IterationRecord& r) {
    return {{"iteration", r.iteration},     {"cost", r.cost},
            {"step_norm", r.step_norm},     {"step_scale", r.step_scale},
            {"cg_iters", r.cg_iterations},  {"cg_converged", r.cg_converged},
            {"accepted", r.accepted}};
}

}  // namespace

std::string iteration_to_json(const IterationRecord& record) {
    return iteration_json(record).dump();
}

std::string report_to_json(const RunReport& report) {
    nlohmann::ordered_json j;
    j["scenario"] = report.scenario;
    j["seed"] = report.seed;
    j["converged"] = report.converged;
    j["iterations"] = report.iterations.size();
    j["final_cost"] = report.final_cost;
    j["normalized_residual"] = report.normalized_residual;
    j["dropped_observations"] = report.dropped_observations;
    j["dr"] = trajectory_summary(report.dr);
    j["flam"] = trajectory_summary(report.flam);
    j["lsf_map"] = map_summary(report.lsf_map);
    j["flam_map"] = map_summary(report.flam_map);
    auto& hist = j["history"] = nlohmann::ordered_json::array();
    for (const auto& r : report.iterations) {
        hist.push_back(iteration_json(r));
    }
    return j.dump(2) + "\n";
}

}  // namespace flam
