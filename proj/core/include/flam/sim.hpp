// Ground-truth trajectories, noisy INS / relative-flow (ADCP) sensors and
// the dead-reckoning baseline.
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "flam/flow_models.hpp"
#include "flam/geometry.hpp"

namespace flam {

/// Planar state: inertial position and velocity, heading CCW from +x.
struct RobotState {
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
    double heading = 0.0;
};

struct TimedState {
    double t = 0.0;
    RobotState state;
};

using Trajectory = std::vector<TimedState>;

/// Body-frame acceleration and yaw rate.
struct InsSample {
    double t = 0.0;
    Vec2 accel = Vec2::Zero();
    double yaw_rate = 0.0;
};

/// Body-frame flow velocity relative to the vehicle. `step` indexes the
/// trajectory sample the measurement was taken at.
struct AdcpSample {
    double t = 0.0;
    Vec2 rel_flow = Vec2::Zero();
    std::size_t step = 0;
};

/// White noise plus first-order Gauss-Markov bias for one sensor channel.
struct NoiseChannel {
    double white_density = 0.0;  ///< [units / sqrt(Hz)]
    double bias_sigma = 0.0;     ///< steady-state bias SD [units]
    double bias_tau = 1.0;       ///< correlation time [s]

    /// Per-sample white-noise SD at the given rate.
    [[nodiscard]] double per_sample_sigma(double rate_hz) const;
    void validate(const char* name) const;
};

struct InsNoiseSpec {
    double rate_hz = 10.0;
    NoiseChannel accel;  ///< m/s^2
    NoiseChannel gyro;   ///< rad/s
};

struct AdcpNoiseSpec {
    double rate_hz = 1.0;
    NoiseChannel flow;   ///< m/s
};

struct NoiseConfig {
    InsNoiseSpec ins;
    AdcpNoiseSpec adcp;

    void validate() const;
    /// INS steps between consecutive ADCP samples.
    [[nodiscard]] std::size_t adcp_decimation() const;

    /// Consumer/industrial-grade profile (VN-100-class IMU, 1200 kHz ADCP).
    static NoiseConfig consumer_grade(double ins_rate_hz = 10.0);
    static NoiseConfig noiseless(double ins_rate_hz = 10.0, double adcp_rate_hz = 1.0);
};

/// Discrete first-order Gauss-Markov process x' = a x + sigma sqrt(1 - a^2) w.
class GaussMarkov {
public:
    GaussMarkov(double sigma, double tau, double dt);

    template <class Rng>
    void initialise(Rng& rng);
    template <class Rng>
    double step(Rng& rng);

    [[nodiscard]] double value() const { return value_; }
    [[nodiscard]] double decay() const { return decay_; }

private:
    double sigma_;
    double decay_;
    double drive_;
    double value_ = 0.0;
};

struct SensorLog {
    std::vector<InsSample> ins;
    std::vector<AdcpSample> adcp;
    Trajectory truth;
    NoiseConfig noise;

    [[nodiscard]] double dt() const { return 1.0 / noise.ins.rate_hz; }
    [[nodiscard]] std::size_t num_steps() const { return truth.size(); }
    void validate() const;
};

struct TrajectoryParams {
    Rect domain{Vec2::Zero(), Vec2(10.0, 10.0)};
    Vec2 start{2.0, 8.0};
    double heading = -std::numbers::pi / 2.0;  ///< must be due north or due south
    double v_max = 2.0;
    double speed = 2.0;          ///< cruise speed, <= v_max
    double duration = 300.0;
    double dt = 0.1;
    double lane_spacing = 2.0;   ///< distance between eastward legs; return legs are offset by half

    void validate() const;
};

/// Lawnmower survey: north/south legs joined by semicircular turns, sweeping
/// east then back west on legs offset by half the lane spacing. The leg's far
/// end mirrors the start margin.
[[nodiscard]] Trajectory generate_trajectory(const TrajectoryParams& params);

/// Samples noisy sensors along `truth`. Deterministic given `seed`.
[[nodiscard]] SensorLog simulate_sensors(const Trajectory& truth, const FlowField& field,
                                         const NoiseConfig& noise, std::uint64_t seed);

/// Forward Euler integration of the INS samples from a known initial state.
[[nodiscard]] Trajectory dead_reckon(const SensorLog& log, const RobotState& x0);

// --- template definitions ---------------------------------------------------

template <class Rng>
void GaussMarkov::initialise(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    value_ = sigma_ * n(rng);
}

template <class Rng>
double GaussMarkov::step(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    value_ = decay_ * value_ + drive_ * n(rng);
    return value_;
}

}  // namespace flam
