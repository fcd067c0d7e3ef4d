#include "flam/factors.hpp"

#include <cmath>
#include <string>

#include "flam/errors.hpp"

namespace flam {

Mat2 rotation_to_body(double psi) {
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    Mat2 r;
    r << c, s, -s, c;
    return r;
}

Mat2 rotation_to_body_derivative(double psi) {
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    Mat2 r;
    r << -s, c, -c, -s;
    return r;
}

MotionResidual motion_residual(const RobotState& prev, const RobotState& curr,
                               const InsSample& u, double dt) {
    MotionResidual e;
    e.segment<2>(0) = curr.velocity - (curr.position - prev.position) / dt;
    e.segment<2>(2) =
        u.accel - rotation_to_body(curr.heading) * (curr.velocity - prev.velocity) / dt;
    e(4) = u.yaw_rate - wrap_angle(curr.heading - prev.heading) / dt;
    return e;
}

MotionJacobian motion_jacobian(const RobotState& prev, const RobotState& curr,
                               const InsSample& /*u*/, double dt) {
    const Mat2 I = Mat2::Identity();
    const Mat2 R = rotation_to_body(curr.heading);
    const Mat2 dR = rotation_to_body_derivative(curr.heading);
    const double inv = 1.0 / dt;

    MotionJacobian F = MotionJacobian::Zero();
    // velocity pseudo-input rows
    F.block<2, 2>(0, 0) = inv * I;
    F.block<2, 2>(0, 5) = -inv * I;
    F.block<2, 2>(0, 7) = I;
    // acceleration rows
    F.block<2, 2>(2, 2) = inv * R;
    F.block<2, 2>(2, 7) = -inv * R;
    F.block<2, 1>(2, 9) = -inv * dR * (curr.velocity - prev.velocity);
    // yaw-rate row
    F(4, 4) = inv;
    F(4, 9) = -inv;
    return F;
}

ObservationLinearization linearize_observation(const RobotState& x, const FlowMap& map,
                                               CellIndex cell, const AdcpSample& z) {
    const BilinearStencil st = bilinear_stencil(map.grid(), cell, x.position);
    Vec2 flow = Vec2::Zero();
    Vec2 dflow_dx = Vec2::Zero();
    Vec2 dflow_dy = Vec2::Zero();
    for (std::size_t j = 0; j < 4; ++j) {
        const Vec2& v = map[st.cell.nodes[j]];
        flow += st.cell.weights[j] * v;
        dflow_dx += st.d_dx[j] * v;
        dflow_dy += st.d_dy[j] * v;
    }
    const Mat2 R = rotation_to_body(x.heading);
    const Vec2 rel = flow - x.velocity;

    ObservationLinearization out;
    out.nodes = st.cell.nodes;
    out.residual = z.rel_flow - R * rel;
    out.jacobian.setZero();
    out.jacobian.col(0) = -R * dflow_dx;
    out.jacobian.col(1) = -R * dflow_dy;
    out.jacobian.block<2, 2>(0, 2) = R;
    out.jacobian.col(4) = -rotation_to_body_derivative(x.heading) * rel;
    for (int j = 0; j < 4; ++j) {
        out.jacobian.block<2, 2>(0, 5 + 2 * j) = -st.cell.weights[j] * R;
    }
    return out;
}

Eigen::Vector2d observation_residual(const RobotState& x, const FlowMap& map, CellIndex cell,
                                     const AdcpSample& z) {
    const BilinearStencil st = bilinear_stencil(map.grid(), cell, x.position);
    return z.rel_flow - rotation_to_body(x.heading) * (map.blend(st.cell) - x.velocity);
}

Eigen::Vector2d observation_residual(const RobotState& x, const FlowMap& map,
                                     const AdcpSample& z) {
    const auto cell = find_cell(map.grid(), x.position);
    if (!cell) {
        throw OutOfMapError("observation position outside grid hull");
    }
    return observation_residual(x, map, *cell, z);
}

ObservationJacobian observation_jacobian(const RobotState& x, const FlowMap& map, CellIndex cell,
                                         const AdcpSample& z) {
    return linearize_observation(x, map, cell, z).jacobian;
}

ObservationJacobian observation_jacobian(const RobotState& x, const FlowMap& map,
                                         const AdcpSample& z) {
    const auto cell = find_cell(map.grid(), x.position);
    if (!cell) {
        throw OutOfMapError("observation position outside grid hull");
    }
    return observation_jacobian(x, map, *cell, z);
}

void FactorWeights::validate() const {
    if (!(sigma_v > 0.0) || !(sigma_a > 0.0) || !(sigma_r > 0.0) || !(sigma_z > 0.0)) {
        throw ConfigError("factor standard deviations must be positive");
    }
    if (!(sigma_map >= 0.0) || !std::isfinite(sigma_map)) {
        throw ConfigError("map prior standard deviation must be finite and nonnegative");
    }
}

Eigen::Matrix<double, 5, 1> FactorWeights::motion_information() const {
    Eigen::Matrix<double, 5, 1> w;
    w << 1.0 / (sigma_v * sigma_v), 1.0 / (sigma_v * sigma_v), 1.0 / (sigma_a * sigma_a),
        1.0 / (sigma_a * sigma_a), 1.0 / (sigma_r * sigma_r);
    return w;
}

FactorWeights FactorWeights::from_noise(const NoiseConfig& noise, double sigma_v,
                                       double sigma_map) {
    // Noiseless channels borrow the consumer-grade SD so the weights stay finite.
    const NoiseConfig fallback = NoiseConfig::consumer_grade(noise.ins.rate_hz);
    auto pick = [](double s, double alt) { return s > 0.0 ? s : alt; };
    FactorWeights w;
    w.sigma_v = sigma_v;
    w.sigma_map = sigma_map;
    w.sigma_a = pick(noise.ins.accel.per_sample_sigma(noise.ins.rate_hz),
                     fallback.ins.accel.per_sample_sigma(noise.ins.rate_hz));
    w.sigma_r = pick(noise.ins.gyro.per_sample_sigma(noise.ins.rate_hz),
                     fallback.ins.gyro.per_sample_sigma(noise.ins.rate_hz));
    w.sigma_z = pick(noise.adcp.flow.per_sample_sigma(noise.adcp.rate_hz),
                     fallback.adcp.flow.per_sample_sigma(fallback.adcp.rate_hz));
    return w;
}

Eigen::VectorXd FullState::to_vector() const {
    const StateLayout lay = layout();
    Eigen::VectorXd y(lay.dim());
    for (std::size_t k = 0; k < states.size(); ++k) {
        const auto o = static_cast<Eigen::Index>(lay.state_offset(k));
        y.segment<2>(o) = states[k].position;
        y.segment<2>(o + 2) = states[k].velocity;
        y(o + 4) = states[k].heading;
    }
    for (std::size_t i = 0; i < map.size(); ++i) {
        y.segment<2>(static_cast<Eigen::Index>(lay.node_offset(i))) = map[i];
    }
    return y;
}

void FullState::apply_increment(const Eigen::VectorXd& delta) {
    const StateLayout lay = layout();
    if (static_cast<std::size_t>(delta.size()) != lay.dim()) {
        throw ConfigError("increment dimension mismatch");
    }
    for (std::size_t k = 0; k < states.size(); ++k) {
        const auto o = static_cast<Eigen::Index>(lay.state_offset(k));
        states[k].position += delta.segment<2>(o);
        states[k].velocity += delta.segment<2>(o + 2);
        states[k].heading = wrap_angle(states[k].heading + delta(o + 4));
    }
    for (std::size_t i = 0; i < map.size(); ++i) {
        map[i] += delta.segment<2>(static_cast<Eigen::Index>(lay.node_offset(i)));
    }
}

Trajectory FullState::trajectory(const Trajectory& timestamps) const {
    if (timestamps.size() != states.size()) {
        throw ConfigError("timestamp count does not match the number of states");
    }
    Trajectory out(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) {
        out[k] = {timestamps[k].t, states[k]};
    }
    return out;
}

FlamProblem::FlamProblem(const SensorLog& log, const GridSpec& grid, const FactorWeights& weights)
    : grid_(grid), weights_(weights), dt_(log.dt()), num_states_(log.truth.size()) {
    grid_.validate();
    weights_.validate();
    log.validate();
    motion_.reserve(log.ins.size());
    for (std::size_t i = 0; i < log.ins.size(); ++i) {
        motion_.push_back({i + 1, log.ins[i]});
    }
    observations_.reserve(log.adcp.size());
    for (const auto& z : log.adcp) {
        const auto cell = find_cell(grid_, log.truth[z.step].state.position);
        if (!cell) {
            ++dropped_;
            continue;
        }
        observations_.push_back({z.step, z, *cell});
    }
}

double FlamProblem::cost(const FullState& y) const {
    if (y.states.size() != num_states_ || y.map.size() != grid_.node_count()) {
        throw ConfigError("state dimensions do not match the problem");
    }
    const auto wm = weights_.motion_information();
    const double wz = weights_.observation_information();
    double j = 0.0;
    for (const auto& f : motion_) {
        const MotionResidual e = motion_residual(y.states[f.step - 1], y.states[f.step], f.input, dt_);
        j += e.cwiseProduct(e).dot(wm);
    }
    for (const auto& f : observations_) {
        const Eigen::Vector2d e = observation_residual(y.states[f.step], y.map, f.cell, f.measurement);
        j += wz * e.squaredNorm();
    }
    const double wp = weights_.map_prior_information();
    if (wp > 0.0) {
        for (const auto& v : y.map.velocities()) {
            j += wp * v.squaredNorm();
        }
    }
    return 0.5 * j;
}

}  // namespace flam
