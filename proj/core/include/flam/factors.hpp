// Residuals and Jacobians of the motion factor (INS + velocity pseudo-input)
// and the relative-flow observation factor.
//
// Per-state variable order is [px, py, vx, vy, heading]; node variables are
// [vx, vy]. Residuals are measurement minus prediction.
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "flam/flow_map.hpp"
#include "flam/sim.hpp"

namespace flam {

inline constexpr int kStateDim = 5;
inline constexpr int kNodeDim = 2;

using MotionResidual = Eigen::Matrix<double, 5, 1>;
using MotionJacobian = Eigen::Matrix<double, 5, 10>;
using ObservationJacobian = Eigen::Matrix<double, 2, 13>;

/// Inertial-to-body rotation for heading psi (CCW from +x).
[[nodiscard]] Mat2 rotation_to_body(double psi);
/// d/dpsi of rotation_to_body.
[[nodiscard]] Mat2 rotation_to_body_derivative(double psi);

[[nodiscard]] MotionResidual motion_residual(const RobotState& prev, const RobotState& curr,
                                             const InsSample& u, double dt);
/// Jacobian of motion_residual with respect to [prev (5); curr (5)].
[[nodiscard]] MotionJacobian motion_jacobian(const RobotState& prev, const RobotState& curr,
                                             const InsSample& u, double dt);

/// e = z - R(psi) (v_flow(position) - v_robot), with the flow interpolated in
/// the given cell.
[[nodiscard]] Eigen::Vector2d observation_residual(const RobotState& x, const FlowMap& map,
                                                   CellIndex cell, const AdcpSample& z);
/// Same, with the cell located from the state position.
[[nodiscard]] Eigen::Vector2d observation_residual(const RobotState& x, const FlowMap& map,
                                                   const AdcpSample& z);

/// Jacobian with respect to [x (5); v_i11, v_i21, v_i12, v_i22 (8)].
struct ObservationLinearization {
    Eigen::Vector2d residual;
    ObservationJacobian jacobian;
    std::array<int, 4> nodes{};
};

[[nodiscard]] ObservationLinearization linearize_observation(const RobotState& x,
                                                             const FlowMap& map, CellIndex cell,
                                                             const AdcpSample& z);
[[nodiscard]] ObservationJacobian observation_jacobian(const RobotState& x, const FlowMap& map,
                                                       CellIndex cell, const AdcpSample& z);
[[nodiscard]] ObservationJacobian observation_jacobian(const RobotState& x, const FlowMap& map,
                                                       const AdcpSample& z);

/// Standard deviations behind the spherical R_k and Q_k.
struct FactorWeights {
    double sigma_v = 1e-2;  ///< velocity pseudo-input [m/s]
    double sigma_a = 1.0;   ///< accel [m/s^2]
    double sigma_r = 1.0;   ///< yaw rate [rad/s]
    double sigma_z = 1.0;   ///< relative flow [m/s]
    /// Zero-mean prior on every node velocity [m/s]; 0 disables it.
    double sigma_map = 0.0;

    void validate() const;
    [[nodiscard]] Eigen::Matrix<double, 5, 1> motion_information() const;
    [[nodiscard]] double observation_information() const { return 1.0 / (sigma_z * sigma_z); }
    [[nodiscard]] double map_prior_information() const {
        return sigma_map > 0.0 ? 1.0 / (sigma_map * sigma_map) : 0.0;
    }

    /// Per-sample white-noise SDs of the sensors; biases are not modelled.
    static FactorWeights from_noise(const NoiseConfig& noise, double sigma_v = 1e-2,
                                    double sigma_map = 0.0);
};

/// Offsets of every variable in the stacked vector y = [x_0..x_K, v_1..v_N].
class StateLayout {
public:
    StateLayout() = default;
    StateLayout(std::size_t num_states, std::size_t num_nodes)
        : num_states_(num_states), num_nodes_(num_nodes) {}

    [[nodiscard]] std::size_t num_states() const { return num_states_; }
    [[nodiscard]] std::size_t num_nodes() const { return num_nodes_; }
    [[nodiscard]] std::size_t state_offset(std::size_t k) const { return kStateDim * k; }
    [[nodiscard]] std::size_t node_offset(std::size_t i) const {
        return kStateDim * num_states_ + kNodeDim * i;
    }
    [[nodiscard]] std::size_t trajectory_dim() const { return kStateDim * num_states_; }
    [[nodiscard]] std::size_t dim() const { return trajectory_dim() + kNodeDim * num_nodes_; }

    friend bool operator==(const StateLayout&, const StateLayout&) = default;

private:
    std::size_t num_states_ = 0;
    std::size_t num_nodes_ = 0;
};

/// Optimization variable: full trajectory plus node velocities.
struct FullState {
    std::vector<RobotState> states;
    FlowMap map;

    [[nodiscard]] StateLayout layout() const { return {states.size(), map.size()}; }
    [[nodiscard]] Eigen::VectorXd to_vector() const;
    /// y += delta; headings are re-wrapped.
    void apply_increment(const Eigen::VectorXd& delta);
    [[nodiscard]] Trajectory trajectory(const Trajectory& timestamps) const;
};

struct MotionFactor {
    std::size_t step = 0;  ///< links states step-1 and step
    InsSample input;
};

struct ObservationFactor {
    std::size_t step = 0;
    AdcpSample measurement;
    CellIndex cell;  ///< frozen data association
};

/// The factor set of one estimation problem. Observations whose true position
/// is outside the grid hull are dropped and counted.
class FlamProblem {
public:
    FlamProblem(const SensorLog& log, const GridSpec& grid, const FactorWeights& weights);

    [[nodiscard]] const GridSpec& grid() const { return grid_; }
    [[nodiscard]] const FactorWeights& weights() const { return weights_; }
    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] std::size_t num_states() const { return num_states_; }
    [[nodiscard]] StateLayout layout() const { return {num_states_, grid_.node_count()}; }
    [[nodiscard]] const std::vector<MotionFactor>& motion_factors() const { return motion_; }
    [[nodiscard]] const std::vector<ObservationFactor>& observation_factors() const {
        return observations_;
    }
    [[nodiscard]] std::size_t dropped_observations() const { return dropped_; }
    /// Number of scalar measurement residual components (priors excluded).
    [[nodiscard]] std::size_t residual_count() const {
        return 5 * motion_.size() + 2 * observations_.size();
    }

    /// J = 1/2 sum e^T W e over every factor, including the map prior.
    [[nodiscard]] double cost(const FullState& y) const;

private:
    GridSpec grid_;
    FactorWeights weights_;
    double dt_ = 0.0;
    std::size_t num_states_ = 0;
    std::vector<MotionFactor> motion_;
    std::vector<ObservationFactor> observations_;
    std::size_t dropped_ = 0;
};

}  // namespace flam
