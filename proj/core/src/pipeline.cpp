#include "flam/pipeline.hpp"

#include "flam/factors.hpp"
#include "flam/flow_models.hpp"

namespace flam {

SensorLog simulate(const Scenario& scenario) {
    scenario.validate();
    const FlowField field(scenario.flow);
    const Trajectory truth = generate_trajectory(scenario.trajectory_params());
    return simulate_sensors(truth, field, scenario.noise, scenario.seed);
}

FlowMap truth_map(const Scenario& scenario) {
    return sample_truth(FlowField(scenario.flow).steady_part(), scenario.grid, 0.0);
}

SolveOutput solve(const Scenario& scenario, const SensorLog& log,
                  const IterationObserver& observer) {
    const FlamProblem problem(log, scenario.grid, scenario.factor_weights());
    const RobotState& x0 = log.truth.front().state;
    FullState init = initial_guess(problem, log, x0, scenario.solver.lsf_ridge);

    SolveOutput out;
    out.dr = init.trajectory(log.truth);
    out.lsf_map = init.map;

    OptimizeResult r = optimize(problem, std::move(init), scenario.solver, observer);
    out.flam = r.estimate.trajectory(log.truth);
    out.flam_map = r.estimate.map;
    out.iterations = std::move(r.iterations);
    out.initial_cost = r.initial_cost;
    out.final_cost = out.iterations.empty() ? r.initial_cost : out.iterations.back().cost;
    out.residual_count = problem.residual_count();
    out.dropped_observations = problem.dropped_observations();
    out.converged = r.converged;
    out.diverged = r.diverged;
    out.stalled = r.stalled;
    return out;
}

RunReport make_report(const Scenario& scenario, const Trajectory& truth, const FlowMap& map_truth,
                      const SolveOutput& solved) {
    RunReport rep;
    rep.scenario = scenario.name;
    rep.seed = scenario.seed;
    rep.dr = trajectory_errors(solved.dr, truth);
    rep.flam = trajectory_errors(solved.flam, truth);
    rep.lsf_map = map_errors(solved.lsf_map, map_truth);
    rep.flam_map = map_errors(solved.flam_map, map_truth);
    rep.iterations = solved.iterations;
    rep.final_cost = solved.final_cost;
    rep.normalized_residual =
        solved.residual_count > 0 ? solved.final_cost / static_cast<double>(solved.residual_count)
                                  : 0.0;
    rep.converged = solved.converged;
    rep.dropped_observations = solved.dropped_observations;
    return rep;
}

RunReport run_scenario(const Scenario& scenario) {
    const SensorLog log = simulate(scenario);
    const SolveOutput solved = solve(scenario, log);
    return make_report(scenario, log.truth, truth_map(scenario), solved);
}

}  // namespace flam
