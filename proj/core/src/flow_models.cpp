#include "flam/flow_models.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "flam/errors.hpp"

namespace flam {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDomainSlack = 1e-9;

Vec2 clamp_into(const Rect& box, const Vec2& p, const char* what) {
    if (!box.contains(p, kDomainSlack)) {
        throw DomainError(std::string(what) + ": query (" + std::to_string(p.x()) + ", " +
                          std::to_string(p.y()) + ") outside domain");
    }
    return box.clamp(p);
}

// Stream-function gradient in nondimensional coordinates.
Vec2 gyre_velocity_nondim(double x, double y, double t, const GyreParams& g) {
    const double s = g.epsilon * std::sin(g.omega * t);
    const double a = s;
    const double b = 1.0 - 2.0 * s;
    const double f = a * x * x + b * x;
    const double dfdx = 2.0 * a * x + b;
    const double u = -kPi * g.amplitude * std::sin(kPi * f) * std::cos(kPi * y);
    const double v = kPi * g.amplitude * std::cos(kPi * f) * std::sin(kPi * y) * dfdx;
    return {u, v};
}

}  // namespace

void GyreParams::validate() const {
    if (!(amplitude > 0.0)) {
        throw ConfigError("gyre amplitude must be positive");
    }
    if (!(length_scale > 0.0)) {
        throw ConfigError("gyre length_scale must be positive");
    }
    if (!(epsilon >= 0.0 && epsilon <= 0.5)) {
        throw ConfigError("gyre epsilon must lie in [0, 0.5]");
    }
    if (!std::isfinite(omega)) {
        throw ConfigError("gyre omega must be finite");
    }
}

void KsParams::validate() const {
    if (!(kolmogorov_scale > 0.0) || !(integral_scale > kolmogorov_scale)) {
        throw ConfigError("KS scales must satisfy L_int > eta > 0");
    }
    if (n_modes != 0 && n_modes < 2) {
        throw ConfigError("KS n_modes must be 0 or at least 2");
    }
    if (!(intensity >= 0.0) || !std::isfinite(intensity)) {
        throw ConfigError("KS intensity must be a nonnegative finite number");
    }
    if (!(unsteadiness >= 0.0) || !std::isfinite(unsteadiness)) {
        throw ConfigError("KS unsteadiness coefficient must be nonnegative");
    }
}

std::string_view to_string(FlowVariant v) {
    switch (v) {
    case FlowVariant::single_gyre:
        return "single_gyre";
    case FlowVariant::double_gyre:
        return "double_gyre";
    case FlowVariant::turbulent_double_gyre:
        return "turbulent_double_gyre";
    }
    return "unknown";
}

FlowVariant flow_variant_from_string(std::string_view s) {
    if (s == "single_gyre") {
        return FlowVariant::single_gyre;
    }
    if (s == "double_gyre") {
        return FlowVariant::double_gyre;
    }
    if (s == "turbulent_double_gyre") {
        return FlowVariant::turbulent_double_gyre;
    }
    throw ConfigError("unknown flow variant '" + std::string(s) + "'");
}

void FlowFieldSpec::validate() const {
    gyre.validate();
    if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) {
        throw ConfigError("flow domain must have positive width and height");
    }
    const double L = gyre.length_scale;
    const Rect analytic{
        Vec2::Zero(),
        Vec2(variant == FlowVariant::single_gyre ? L : 2.0 * L, L)};
    if (!analytic.contains(domain.min, kDomainSlack) || !analytic.contains(domain.max, kDomainSlack)) {
        throw ConfigError("flow domain exceeds the analytic gyre domain");
    }
    if (variant == FlowVariant::turbulent_double_gyre) {
        if (!ks) {
            throw ConfigError("turbulent_double_gyre requires KS parameters");
        }
        ks->validate();
    }
}

Vec2 single_gyre_velocity(const Vec2& p, const GyreParams& params) {
    const double L = params.length_scale;
    const Vec2 q = clamp_into(Rect{Vec2::Zero(), Vec2(L, L)}, p, "single_gyre_velocity");
    return gyre_velocity_nondim(q.x() / L, q.y() / L, 0.0, params);
}

Vec2 double_gyre_velocity(const Vec2& p, double t, const GyreParams& params) {
    const double L = params.length_scale;
    const Vec2 q = clamp_into(Rect{Vec2::Zero(), Vec2(2.0 * L, L)}, p, "double_gyre_velocity");
    return gyre_velocity_nondim(q.x() / L, q.y() / L, t, params);
}

KinematicTurbulence::KinematicTurbulence(const KsParams& params) : params_(params) {
    params_.validate();
    const int n = params_.n_modes;
    if (n == 0) {
        return;
    }
    const double k_lo = 2.0 * kPi / params_.integral_scale;
    const double k_hi = 2.0 * kPi / params_.kolmogorov_scale;
    const double ratio = std::pow(k_hi / k_lo, 1.0 / (n - 1));
    const double width_factor = std::sqrt(ratio) - 1.0 / std::sqrt(ratio);

    std::vector<double> k(n);
    std::vector<double> shape(n);  // k^(-5/3) * dk, before normalisation
    double shape_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        k[i] = k_lo * std::pow(ratio, i);
        shape[i] = std::pow(k[i], -5.0 / 3.0) * k[i] * width_factor;
        shape_sum += shape[i];
    }
    const double u2 = params_.intensity * params_.intensity;
    const double spectrum_scale = u2 / shape_sum;  // E(k) = C k^(-5/3)

    std::mt19937_64 rng(params_.rng_seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    modes_.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double theta = angle(rng);
        const double phase = angle(rng);
        const double energy = spectrum_scale * shape[i];
        const double amp = std::sqrt(2.0 * energy);
        const double e_k = spectrum_scale * std::pow(k[i], -5.0 / 3.0);
        KsMode m;
        m.wavevector = k[i] * Vec2(std::cos(theta), std::sin(theta));
        m.direction = Vec2(-std::sin(theta), std::cos(theta));
        m.cos_amp = amp * std::cos(phase);
        m.sin_amp = amp * std::sin(phase);
        m.frequency = params_.unsteadiness * std::sqrt(k[i] * k[i] * k[i] * e_k);
        modes_.push_back(m);
    }
}

Vec2 KinematicTurbulence::velocity(const Vec2& p, double t) const {
    Vec2 u = Vec2::Zero();
    for (const auto& m : modes_) {
        const double arg = m.wavevector.dot(p) + m.frequency * t;
        u += (m.cos_amp * std::cos(arg) + m.sin_amp * std::sin(arg)) * m.direction;
    }
    return u;
}

double KinematicTurbulence::mean_square_speed() const {
    double e = 0.0;
    for (const auto& m : modes_) {
        e += 0.5 * (m.cos_amp * m.cos_amp + m.sin_amp * m.sin_amp);
    }
    return e;
}

Vec2 ks_velocity(const Vec2& p, double t, const KsParams& params) {
    return KinematicTurbulence(params).velocity(p, t);
}

FlowField::FlowField(FlowFieldSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    if (spec_.variant == FlowVariant::turbulent_double_gyre) {
        turbulence_.emplace(*spec_.ks);
    }
}

Vec2 FlowField::velocity(const Vec2& p, double t) const {
    const Vec2 q = clamp_into(spec_.domain, p, "field_velocity");
    switch (spec_.variant) {
    case FlowVariant::single_gyre:
        return single_gyre_velocity(q, spec_.gyre);
    case FlowVariant::double_gyre:
        return double_gyre_velocity(q, 0.0, spec_.gyre);
    case FlowVariant::turbulent_double_gyre:
        return double_gyre_velocity(q, 0.0, spec_.gyre) + turbulence_->velocity(q, t);
    }
    return Vec2::Zero();
}

FlowField FlowField::steady_part() const {
    FlowFieldSpec s = spec_;
    if (s.variant == FlowVariant::turbulent_double_gyre) {
        s.variant = FlowVariant::double_gyre;
        s.ks.reset();
    }
    return FlowField(std::move(s));
}

Vec2 field_velocity(const FlowFieldSpec& spec, const Vec2& p, double t) {
    return FlowField(spec).velocity(p, t);
}

}  // namespace flam
