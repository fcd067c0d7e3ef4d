#include "flam/sim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "flam/errors.hpp"
#include "flam/factors.hpp"
#include "flam/rng.hpp"

namespace flam {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGravity = 9.80665;
constexpr double kDegToRad = kPi / 180.0;

struct Segment {
    bool is_arc = false;
    Vec2 origin;        // line start, or arc centre
    Vec2 direction;     // line unit direction
    double radius = 0;  // arc
    double angle0 = 0;  // arc start angle
    double sweep = 0;   // signed arc angle
    double length = 0;
};

struct Pose {
    Vec2 position;
    double heading;
};

Pose evaluate(const Segment& seg, double s) {
    if (!seg.is_arc) {
        return {seg.origin + s * seg.direction, std::atan2(seg.direction.y(), seg.direction.x())};
    }
    const double dir = seg.sweep > 0 ? 1.0 : -1.0;
    const double theta = seg.angle0 + dir * s / seg.radius;
    const Vec2 p = seg.origin + seg.radius * Vec2(std::cos(theta), std::sin(theta));
    const Vec2 tangent = dir * Vec2(-std::sin(theta), std::cos(theta));
    return {p, std::atan2(tangent.y(), tangent.x())};
}

// Unit direction vector for a heading known to be due north or south.
double leg_sign(double heading) {
    const double h = wrap_angle(heading);
    if (std::abs(h - kPi / 2.0) < 1e-9) {
        return 1.0;
    }
    if (std::abs(h + kPi / 2.0) < 1e-9) {
        return -1.0;
    }
    throw ConfigError("lawnmower start heading must be due north (pi/2) or due south (-pi/2)");
}

struct LawnmowerLayout {
    std::vector<double> lanes;  // one full east-then-west cycle of leg x positions
    double y_low = 0;
    double y_high = 0;
};

// Eastward legs sit on start.x + j * spacing; the westward return legs are
// shifted by half a spacing so the legs do not revisit the same x positions.
LawnmowerLayout layout_lawnmower(const TrajectoryParams& p) {
    LawnmowerLayout out;
    const double sign = leg_sign(p.heading);
    const Rect& d = p.domain;
    if (sign < 0) {
        out.y_high = p.start.y();
        out.y_low = d.min.y() + (d.max.y() - p.start.y());
    } else {
        out.y_low = p.start.y();
        out.y_high = d.max.y() - (p.start.y() - d.min.y());
    }
    if (!(out.y_high - out.y_low > 0.0)) {
        throw ConfigError("lawnmower legs have non-positive length for this start position");
    }
    const double radius = 0.5 * p.lane_spacing;
    if (out.y_low - radius < d.min.y() - 1e-9 || out.y_high + radius > d.max.y() + 1e-9) {
        throw ConfigError("turn radius exceeds the domain");
    }
    const double x_first = p.start.x();
    const double x_last = d.max.x() - (p.start.x() - d.min.x());
    for (double x = x_first; x <= x_last + 1e-9; x += p.lane_spacing) {
        out.lanes.push_back(x);
    }
    if (out.lanes.size() < 2) {
        throw ConfigError("domain too narrow for two survey lanes at this lane spacing");
    }
    for (double x = out.lanes.back() - 0.5 * p.lane_spacing; x > x_first + 1e-9;
         x -= p.lane_spacing) {
        out.lanes.push_back(x);
    }
    return out;
}

std::vector<Segment> build_path(const TrajectoryParams& p, double needed) {
    const LawnmowerLayout lay = layout_lawnmower(p);
    std::vector<Segment> path;
    double total = 0.0;
    double sign = leg_sign(p.heading);
    std::size_t lane = 0;
    // First leg starts at the start point; legs always span [y_low, y_high].
    while (total <= needed) {
        const double x = lay.lanes[lane];
        const double y_from = sign < 0 ? lay.y_high : lay.y_low;
        const double y_to = sign < 0 ? lay.y_low : lay.y_high;
        Segment leg;
        leg.origin = Vec2(x, y_from);
        leg.direction = Vec2(0.0, sign);
        leg.length = std::abs(y_to - y_from);
        path.push_back(leg);
        total += leg.length;

        const std::size_t next = (lane + 1) % lay.lanes.size();
        const double x_next = lay.lanes[next];
        const bool east = x_next > x;
        const bool bottom = sign < 0;
        Segment turn;
        turn.is_arc = true;
        turn.origin = Vec2(0.5 * (x + x_next), y_to);
        turn.radius = 0.5 * std::abs(x_next - x);
        turn.angle0 = east ? kPi : 0.0;
        turn.sweep = (east == bottom) ? kPi : -kPi;
        turn.length = kPi * turn.radius;
        path.push_back(turn);
        total += turn.length;

        lane = next;
        sign = -sign;
    }
    return path;
}

}  // namespace

double NoiseChannel::per_sample_sigma(double rate_hz) const {
    return white_density * std::sqrt(rate_hz);
}

void NoiseChannel::validate(const char* name) const {
    if (!(white_density >= 0.0) || !(bias_sigma >= 0.0)) {
        throw ConfigError(std::string(name) + ": noise parameters must be nonnegative");
    }
    if (bias_sigma > 0.0 && !(bias_tau > 0.0)) {
        throw ConfigError(std::string(name) + ": bias correlation time must be positive");
    }
}

void NoiseConfig::validate() const {
    if (!(ins.rate_hz > 0.0) || !(adcp.rate_hz > 0.0)) {
        throw ConfigError("sensor rates must be positive");
    }
    ins.accel.validate("ins.accel");
    ins.gyro.validate("ins.gyro");
    adcp.flow.validate("adcp.flow");
    const double ratio = ins.rate_hz / adcp.rate_hz;
    if (ratio < 1.0 - 1e-12 || std::abs(ratio - std::round(ratio)) > 1e-9) {
        throw ConfigError("ADCP rate must divide the INS rate");
    }
}

std::size_t NoiseConfig::adcp_decimation() const {
    return static_cast<std::size_t>(std::llround(ins.rate_hz / adcp.rate_hz));
}

NoiseConfig NoiseConfig::consumer_grade(double ins_rate_hz) {
    NoiseConfig n;
    n.ins.rate_hz = ins_rate_hz;
    n.ins.accel = {0.14e-3 * kGravity, 0.04e-3 * kGravity, 300.0};
    n.ins.gyro = {0.0035 * kDegToRad, 10.0 * kDegToRad / 3600.0, 300.0};
    n.adcp.rate_hz = 1.0;
    n.adcp.flow = {0.01, 0.01, 100.0};
    return n;
}

NoiseConfig NoiseConfig::noiseless(double ins_rate_hz, double adcp_rate_hz) {
    NoiseConfig n;
    n.ins.rate_hz = ins_rate_hz;
    n.adcp.rate_hz = adcp_rate_hz;
    return n;
}

GaussMarkov::GaussMarkov(double sigma, double tau, double dt) : sigma_(sigma) {
    decay_ = sigma > 0.0 ? std::exp(-dt / tau) : 0.0;
    drive_ = sigma * std::sqrt(1.0 - decay_ * decay_);
}

void SensorLog::validate() const {
    noise.validate();
    if (truth.empty()) {
        throw ConfigError("sensor log has no truth samples");
    }
    if (ins.size() + 1 != truth.size()) {
        throw ConfigError("sensor log needs exactly one INS sample per truth step after the first");
    }
    for (std::size_t i = 0; i < ins.size(); ++i) {
        if (i > 0 && !(ins[i].t > ins[i - 1].t)) {
            throw ConfigError("INS timestamps must be strictly increasing");
        }
        if (!ins[i].accel.allFinite() || !std::isfinite(ins[i].yaw_rate)) {
            throw ConfigError("INS samples must be finite");
        }
    }
    for (const auto& z : adcp) {
        if (z.step == 0 || z.step >= truth.size()) {
            throw ConfigError("ADCP sample does not coincide with an INS step");
        }
        if (!z.rel_flow.allFinite()) {
            throw ConfigError("ADCP samples must be finite");
        }
    }
}

void TrajectoryParams::validate() const {
    if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) {
        throw ConfigError("trajectory domain must have positive size");
    }
    if (!domain.contains(start)) {
        throw ConfigError("trajectory start lies outside the domain");
    }
    if (!(v_max > 0.0)) {
        throw ConfigError("v_max must be positive");
    }
    if (!(speed > 0.0) || speed > v_max) {
        throw ConfigError("cruise speed must lie in (0, v_max]");
    }
    if (!(duration >= 0.0) || !(dt > 0.0)) {
        throw ConfigError("duration must be nonnegative and dt positive");
    }
    if (!(lane_spacing > 0.0)) {
        throw ConfigError("lane spacing must be positive");
    }
}

Trajectory generate_trajectory(const TrajectoryParams& params) {
    params.validate();
    const auto steps = static_cast<std::size_t>(std::llround(params.duration / params.dt));
    const double path_length = params.speed * steps * params.dt;
    const std::vector<Segment> path = build_path(params, path_length);

    Trajectory out;
    out.reserve(steps + 1);
    std::size_t seg = 0;
    double seg_start = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = k * params.dt;
        const double s = params.speed * t;
        while (seg + 1 < path.size() && s > seg_start + path[seg].length) {
            seg_start += path[seg].length;
            ++seg;
        }
        const Pose pose = evaluate(path[seg], s - seg_start);
        TimedState ts;
        ts.t = t;
        ts.state.position = pose.position;
        ts.state.heading = wrap_angle(pose.heading);
        if (k == 0) {
            ts.state.velocity = params.speed * Vec2(std::cos(pose.heading), std::sin(pose.heading));
        } else {
            ts.state.velocity = (pose.position - out.back().state.position) / params.dt;
        }
        out.push_back(ts);
    }
    return out;
}

SensorLog simulate_sensors(const Trajectory& truth, const FlowField& field,
                           const NoiseConfig& noise, std::uint64_t seed) {
    noise.validate();
    if (truth.empty()) {
        throw ConfigError("cannot simulate sensors on an empty trajectory");
    }
    const double dt = 1.0 / noise.ins.rate_hz;
    for (std::size_t k = 1; k < truth.size(); ++k) {
        if (std::abs((truth[k].t - truth[k - 1].t) - dt) > 1e-9) {
            throw ConfigError("trajectory sample spacing does not match the INS rate");
        }
    }
    const std::size_t decimation = noise.adcp_decimation();
    const double adcp_dt = decimation * dt;

    auto rng_accel = make_rng(seed, RngStream::ins_accel);
    auto rng_gyro = make_rng(seed, RngStream::ins_gyro);
    auto rng_adcp = make_rng(seed, RngStream::adcp);
    std::normal_distribution<double> unit(0.0, 1.0);

    const auto& a = noise.ins.accel;
    const auto& g = noise.ins.gyro;
    const auto& f = noise.adcp.flow;
    GaussMarkov bias_ax(a.bias_sigma, a.bias_tau, dt);
    GaussMarkov bias_ay(a.bias_sigma, a.bias_tau, dt);
    GaussMarkov bias_r(g.bias_sigma, g.bias_tau, dt);
    GaussMarkov bias_zx(f.bias_sigma, f.bias_tau, adcp_dt);
    GaussMarkov bias_zy(f.bias_sigma, f.bias_tau, adcp_dt);
    bias_ax.initialise(rng_accel);
    bias_ay.initialise(rng_accel);
    bias_r.initialise(rng_gyro);
    bias_zx.initialise(rng_adcp);
    bias_zy.initialise(rng_adcp);

    const double sa = a.per_sample_sigma(noise.ins.rate_hz);
    const double sr = g.per_sample_sigma(noise.ins.rate_hz);
    const double sz = f.per_sample_sigma(noise.adcp.rate_hz);

    SensorLog log;
    log.truth = truth;
    log.noise = noise;
    log.ins.reserve(truth.size() > 0 ? truth.size() - 1 : 0);
    for (std::size_t k = 1; k < truth.size(); ++k) {
        const RobotState& prev = truth[k - 1].state;
        const RobotState& cur = truth[k].state;
        const Mat2 R = rotation_to_body(cur.heading);

        InsSample u;
        u.t = truth[k].t;
        const Vec2 accel = R * (cur.velocity - prev.velocity) / dt;
        const double rate = wrap_angle(cur.heading - prev.heading) / dt;
        const double bx = bias_ax.step(rng_accel);
        const double by = bias_ay.step(rng_accel);
        const double wx = unit(rng_accel);
        const double wy = unit(rng_accel);
        u.accel = accel + Vec2(bx, by) + sa * Vec2(wx, wy);
        u.yaw_rate = rate + bias_r.step(rng_gyro) + sr * unit(rng_gyro);
        log.ins.push_back(u);

        if (k % decimation == 0) {
            AdcpSample z;
            z.t = truth[k].t;
            z.step = k;
            const Vec2 flow = field.velocity(cur.position, truth[k].t);
            const double zbx = bias_zx.step(rng_adcp);
            const double zby = bias_zy.step(rng_adcp);
            const double zwx = unit(rng_adcp);
            const double zwy = unit(rng_adcp);
            z.rel_flow = R * (flow - cur.velocity) + Vec2(zbx, zby) + sz * Vec2(zwx, zwy);
            log.adcp.push_back(z);
        }
    }
    return log;
}

Trajectory dead_reckon(const SensorLog& log, const RobotState& x0) {
    if (log.ins.empty()) {
        throw ConfigError("dead reckoning needs at least one INS sample");
    }
    const double dt = log.dt();
    Trajectory out;
    out.reserve(log.ins.size() + 1);
    const double t0 = log.truth.empty() ? log.ins.front().t - dt : log.truth.front().t;
    RobotState x = x0;
    x.heading = wrap_angle(x.heading);
    out.push_back({t0, x});
    for (const auto& u : log.ins) {
        x.heading = wrap_angle(x.heading + u.yaw_rate * dt);
        x.velocity += rotation_to_body(x.heading).transpose() * u.accel * dt;
        x.position += x.velocity * dt;
        out.push_back({u.t, x});
    }
    return out;
}

}  // namespace flam
