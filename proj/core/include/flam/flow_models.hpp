// Analytic ground-truth flow fields: steady single gyre, double gyre and a
// kinematic-simulation (KS) turbulent component.
//
// Conventions: x east, y north. Stream-function velocities are
// u = -d(psi)/dy, v = d(psi)/dx evaluated at the nondimensional coordinates
// (x/L, y/L), i.e. (u, v) = (u(x/L, y/L, t), v(x/L, y/L, t)).
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "flam/geometry.hpp"

namespace flam {

struct GyreParams {
    double amplitude = 0.1;
    double epsilon = 0.25;
    double omega = 2.0 * std::numbers::pi / 10.0;
    double length_scale = 10.0;

    void validate() const;
};

struct KsParams {
    double integral_scale = 1.0;      ///< L_int [m]
    double kolmogorov_scale = 1e-3;   ///< eta [m]
    int n_modes = 64;
    double intensity = 0.05;          ///< RMS speed u_rms [m/s]
    double unsteadiness = 0.5;        ///< lambda_u
    std::uint64_t rng_seed = 0;

    [[nodiscard]] double reynolds_number() const { return integral_scale / kolmogorov_scale; }
    void validate() const;
};

enum class FlowVariant { single_gyre, double_gyre, turbulent_double_gyre };

[[nodiscard]] std::string_view to_string(FlowVariant v);
[[nodiscard]] FlowVariant flow_variant_from_string(std::string_view s);

struct FlowFieldSpec {
    FlowVariant variant = FlowVariant::single_gyre;
    GyreParams gyre;
    std::optional<KsParams> ks;
    Rect domain;

    void validate() const;
};

/// Single gyre on [0, L] x [0, L] (left half of the double gyre), t = 0.
[[nodiscard]] Vec2 single_gyre_velocity(const Vec2& p, const GyreParams& params);

/// Double gyre on [0, 2L] x [0, L].
[[nodiscard]] Vec2 double_gyre_velocity(const Vec2& p, double t, const GyreParams& params);

/// One Fourier mode of a KS field. Coefficient vectors are both parallel to
/// `direction`, which is perpendicular to `wavevector`.
struct KsMode {
    Vec2 wavevector;
    Vec2 direction;
    double cos_amp = 0.0;
    double sin_amp = 0.0;
    double frequency = 0.0;
};

/// Kinematic-simulation turbulence: sum of incompressible random Fourier modes
/// with a k^(-5/3) energy spectrum. Modes are drawn once at construction.
class KinematicTurbulence {
public:
    explicit KinematicTurbulence(const KsParams& params);

    [[nodiscard]] Vec2 velocity(const Vec2& p, double t) const;
    [[nodiscard]] std::span<const KsMode> modes() const { return modes_; }
    [[nodiscard]] const KsParams& params() const { return params_; }

    /// Sum over modes of the mean kinetic energy (|A|^2 + |B|^2) / 2.
    [[nodiscard]] double mean_square_speed() const;

private:
    KsParams params_;
    std::vector<KsMode> modes_;
};

/// Evaluates a KS field from scratch. Prefer KinematicTurbulence for repeated
/// queries; this rebuilds the modes on each call.
[[nodiscard]] Vec2 ks_velocity(const Vec2& p, double t, const KsParams& params);

/// A configured flow field. Immutable; safe to share across threads.
class FlowField {
public:
    explicit FlowField(FlowFieldSpec spec);

    [[nodiscard]] Vec2 velocity(const Vec2& p, double t) const;
    [[nodiscard]] const FlowFieldSpec& spec() const { return spec_; }
    [[nodiscard]] const Rect& domain() const { return spec_.domain; }
    [[nodiscard]] const KinematicTurbulence* turbulence() const {
        return turbulence_ ? &*turbulence_ : nullptr;
    }

    /// The time-invariant part (turbulence removed).
    [[nodiscard]] FlowField steady_part() const;

private:
    FlowFieldSpec spec_;
    std::optional<KinematicTurbulence> turbulence_;
};

[[nodiscard]] Vec2 field_velocity(const FlowFieldSpec& spec, const Vec2& p, double t);

/// Radially binned energy spectrum of a sampled KS field.
struct EnergySpectrum {
    std::vector<double> wavenumber;  ///< bin centres (geometric) [rad/m]
    std::vector<double> energy;      ///< energy density per unit wavenumber
    std::vector<int> count;          ///< FFT coefficients per bin
    double total_energy = 0.0;       ///< sum of energy * bin width
    double fit_kmin = 0.0;
    double fit_kmax = 0.0;
    double slope = 0.0;              ///< log-log slope over [fit_kmin, fit_kmax]
    bool empty = true;               ///< true when the field carries no energy
};

struct SpectrumOptions {
    int samples = 512;     ///< grid points per side
    double box = 0.0;      ///< side length [m]; 0 means L_int
    int bins = 48;         ///< logarithmic bins
    double time = 0.0;
};

/// Samples the KS field on a periodic square (Hann-windowed), FFTs it and bins
/// |u_hat|^2 on logarithmic shells. The slope is fitted over the inertial range
/// [4 pi / L_int, pi / (2 eta)].
[[nodiscard]] EnergySpectrum sample_spectrum(const KinematicTurbulence& field,
                                             const SpectrumOptions& options = {});

}  // namespace flam
