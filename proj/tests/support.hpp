// Shared fixtures for unit and acceptance tests.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "flam/factors.hpp"
#include "flam/flow_map.hpp"
#include "flam/sim.hpp"
#include "flam/solver.hpp"

namespace flam::test {

/// Three poses, one 2 x 2 cell and two flow observations, with measurement
/// offsets so the optimum has nonzero residuals.
struct TinyProblem {
    SensorLog log;
    GridSpec grid{Vec2::Zero(), 2.0, 2.0, 2, 2};
    FactorWeights weights;
    FullState start;
    FlowMap true_map;
};

inline TinyProblem tiny_problem() {
    TinyProblem t;
    t.weights.sigma_v = 0.05;
    t.weights.sigma_a = 0.1;
    t.weights.sigma_r = 0.05;
    t.weights.sigma_z = 0.02;
    t.true_map = FlowMap(t.grid, {Vec2(0.1, -0.05), Vec2(0.2, 0.0), Vec2(-0.1, 0.15), Vec2(0.05, 0.1)});

    const double dt = 0.1;
    t.log.noise = NoiseConfig::noiseless(10.0, 10.0);
    const std::vector<RobotState> truth = {
        {Vec2(0.5, 0.6), Vec2(1.0, 0.2), 0.3},
        {Vec2(0.6, 0.63), Vec2(1.0, 0.3), 0.35},
        {Vec2(0.71, 0.66), Vec2(1.1, 0.3), 0.42},
    };
    for (std::size_t k = 0; k < truth.size(); ++k) {
        t.log.truth.push_back({k * dt, truth[k]});
    }
    const std::vector<Vec2> accel_offset = {Vec2(0.03, -0.02), Vec2(-0.01, 0.04)};
    const std::vector<double> yaw_offset = {0.02, -0.03};
    const std::vector<Vec2> flow_offset = {Vec2(0.01, 0.02), Vec2(-0.02, 0.01)};
    for (std::size_t k = 1; k < truth.size(); ++k) {
        const auto& a = truth[k - 1];
        const auto& b = truth[k];
        InsSample u;
        u.t = k * dt;
        u.accel = rotation_to_body(b.heading) * (b.velocity - a.velocity) / dt + accel_offset[k - 1];
        u.yaw_rate = (b.heading - a.heading) / dt + yaw_offset[k - 1];
        t.log.ins.push_back(u);

        AdcpSample z;
        z.t = k * dt;
        z.step = k;
        z.rel_flow = rotation_to_body(b.heading) * (interpolate(t.true_map, b.position) - b.velocity) +
                     flow_offset[k - 1];
        t.log.adcp.push_back(z);
    }

    t.start.states = truth;
    t.start.states[1].position += Vec2(0.04, -0.03);
    t.start.states[2].position += Vec2(-0.05, 0.06);
    t.start.states[2].velocity += Vec2(0.1, 0.0);
    t.start.states[1].heading += 0.05;
    t.start.map = FlowMap(t.grid);
    return t;
}

/// Case-1 style survey whose ADCP samples see the bilinear interpolant of
/// `map` instead of the gyre, so the grid carries no representation error.
/// Sensor noise is kept as drawn.
inline SensorLog bilinear_flow_log(const FlowMap& map, double duration, const NoiseConfig& noise,
                                   std::uint64_t seed) {
    TrajectoryParams tp;
    tp.duration = duration;
    tp.dt = 1.0 / noise.ins.rate_hz;
    FlowFieldSpec spec;
    spec.domain = Rect{Vec2::Zero(), Vec2(10.0, 10.0)};
    const FlowField field(spec);
    SensorLog log = simulate_sensors(generate_trajectory(tp), field, noise, seed);
    for (auto& z : log.adcp) {
        const RobotState& x = log.truth[z.step].state;
        z.rel_flow += rotation_to_body(x.heading) *
                      (interpolate(map, x.position) - field.velocity(x.position, z.t));
    }
    return log;
}

/// Smooth, clearly non-affine node velocities on the 5 x 5 case-1 grid.
inline FlowMap wavy_map() {
    const GridSpec g{Vec2::Zero(), 2.5, 2.5, 5, 5};
    std::vector<Vec2> v;
    for (int id = 0; id < static_cast<int>(g.node_count()); ++id) {
        const Vec2 p = g.node_position(id);
        v.emplace_back(0.2 * std::sin(0.4 * p.y()) - 0.05, 0.15 * std::cos(0.5 * p.x()) + 0.02 * p.y());
    }
    return FlowMap(g, v);
}

inline FullState truth_state(const SensorLog& log, const FlowMap& map) {
    FullState y;
    for (const auto& s : log.truth) {
        y.states.push_back(s.state);
    }
    y.map = map;
    return y;
}

/// Builds a FullState shaped like `like` from a stacked vector.
inline FullState from_vector(const FullState& like, const Eigen::VectorXd& y) {
    FullState out = like;
    const StateLayout lay = like.layout();
    for (std::size_t k = 0; k < out.states.size(); ++k) {
        const auto o = static_cast<Eigen::Index>(lay.state_offset(k));
        out.states[k] = {y.segment<2>(o), y.segment<2>(o + 2), y(o + 4)};
    }
    for (std::size_t i = 0; i < out.map.size(); ++i) {
        out.map[i] = y.segment<2>(static_cast<Eigen::Index>(lay.node_offset(i)));
    }
    return out;
}

/// Stacked, sqrt-weighted residual vector over every factor of `problem`.
inline Eigen::VectorXd whitened_residuals(const FlamProblem& problem, const FullState& y) {
    const auto wm = problem.weights().motion_information().cwiseSqrt();
    const double wz = std::sqrt(problem.weights().observation_information());
    const auto& motion = problem.motion_factors();
    const auto& obs = problem.observation_factors();
    Eigen::VectorXd r(5 * motion.size() + 2 * obs.size());
    Eigen::Index row = 0;
    for (const auto& f : motion) {
        r.segment<5>(row) =
            wm.cwiseProduct(motion_residual(y.states[f.step - 1], y.states[f.step], f.input, problem.dt()));
        row += 5;
    }
    for (const auto& f : obs) {
        r.segment<2>(row) = wz * observation_residual(y.states[f.step], y.map, f.cell, f.measurement);
        row += 2;
    }
    return r;
}

/// Central-difference Jacobian of whitened_residuals.
inline Eigen::MatrixXd numeric_whitened_jacobian(const FlamProblem& problem, const FullState& y,
                                                 double h = 1e-6) {
    const Eigen::VectorXd y0 = y.to_vector();
    const Eigen::Index m = whitened_residuals(problem, y).size();
    Eigen::MatrixXd J(m, y0.size());
    for (Eigen::Index j = 0; j < y0.size(); ++j) {
        Eigen::VectorXd yp = y0;
        Eigen::VectorXd ym = y0;
        yp(j) += h;
        ym(j) -= h;
        J.col(j) = (whitened_residuals(problem, from_vector(y, yp)) -
                    whitened_residuals(problem, from_vector(y, ym))) /
                   (2.0 * h);
    }
    return J;
}

/// Analytic factor Jacobians stacked densely in the same row order as
/// whitened_residuals, sqrt-weighted.
inline Eigen::MatrixXd stacked_jacobian(const FlamProblem& problem, const FullState& y) {
    const StateLayout lay = problem.layout();
    const auto wm = problem.weights().motion_information().cwiseSqrt();
    const double wz = std::sqrt(problem.weights().observation_information());
    const auto& motion = problem.motion_factors();
    const auto& obs = problem.observation_factors();
    Eigen::MatrixXd J =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(5 * motion.size() + 2 * obs.size()),
                              static_cast<Eigen::Index>(lay.dim()));
    Eigen::Index row = 0;
    for (const auto& f : motion) {
        const MotionJacobian F =
            motion_jacobian(y.states[f.step - 1], y.states[f.step], f.input, problem.dt());
        const auto a = static_cast<Eigen::Index>(lay.state_offset(f.step - 1));
        const auto b = static_cast<Eigen::Index>(lay.state_offset(f.step));
        J.block<5, 5>(row, a) += wm.asDiagonal() * F.leftCols<5>();
        J.block<5, 5>(row, b) += wm.asDiagonal() * F.rightCols<5>();
        row += 5;
    }
    for (const auto& f : obs) {
        const ObservationLinearization lin =
            linearize_observation(y.states[f.step], y.map, f.cell, f.measurement);
        J.block<2, 5>(row, static_cast<Eigen::Index>(lay.state_offset(f.step))) +=
            wz * lin.jacobian.leftCols<5>();
        for (int j = 0; j < 4; ++j) {
            const auto o = static_cast<Eigen::Index>(lay.node_offset(static_cast<std::size_t>(lin.nodes[j])));
            J.block<2, 2>(row, o) += wz * lin.jacobian.block<2, 2>(0, 5 + 2 * j);
        }
        row += 2;
    }
    return J;
}

/// One dense Gauss-Newton step: -(J^T J + anchor + lambda I)^-1 J^T r.
inline Eigen::VectorXd dense_gn_step(const FlamProblem& problem, const FullState& y, double lambda,
                                     double anchor) {
    const Eigen::MatrixXd J = stacked_jacobian(problem, y);
    const Eigen::VectorXd r = whitened_residuals(problem, y);
    Eigen::MatrixXd A = J.transpose() * J;
    A.topLeftCorner<5, 5>().diagonal().array() += anchor;
    A.diagonal().array() += lambda;
    // map prior, if any
    const double wp = problem.weights().map_prior_information();
    Eigen::VectorXd g = J.transpose() * r;
    const StateLayout lay = problem.layout();
    for (std::size_t i = 0; i < y.map.size(); ++i) {
        const auto o = static_cast<Eigen::Index>(lay.node_offset(i));
        A.block<2, 2>(o, o).diagonal().array() += wp;
        g.segment<2>(o) += wp * y.map[i];
    }
    return -A.ldlt().solve(g);
}

}  // namespace flam::test
