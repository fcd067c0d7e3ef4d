#include <cmath>
#include <complex>
#include <memory>
#include <numbers>

#include <fftw3.h>

#include "flam/errors.hpp"
#include "flam/flow_models.hpp"

namespace flam {

namespace {

constexpr double kPi = std::numbers::pi;

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
struct FftwFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};

}  // namespace

EnergySpectrum sample_spectrum(const KinematicTurbulence& field, const SpectrumOptions& options) {
    const int n = options.samples;
    if (n < 8 || (n % 2) != 0) {
        throw ConfigError("spectrum sample count must be an even number >= 8");
    }
    if (options.bins < 2) {
        throw ConfigError("spectrum needs at least two bins");
    }
    const KsParams& ks = field.params();
    const double box = options.box > 0.0 ? options.box : ks.integral_scale;
    const double h = box / n;

    EnergySpectrum out;
    out.fit_kmin = 4.0 * kPi / ks.integral_scale;
    out.fit_kmax = kPi / (2.0 * ks.kolmogorov_scale);
    if (field.modes().empty() || field.mean_square_speed() == 0.0) {
        return out;
    }

    const auto total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    std::unique_ptr<fftw_complex, FftwFree> data(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total)));

    // Hann window; u + i v packed into one complex transform. Shells are
    // symmetric under k -> -k so |F(k)|^2 summed over a shell equals the sum
    // of |U|^2 + |V|^2.
    std::vector<double> window(n);
    double w2_mean = 0.0;
    for (int i = 0; i < n; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
        w2_mean += window[i] * window[i];
    }
    w2_mean /= n;
    w2_mean *= w2_mean;  // 2D window

    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Vec2 u = field.velocity(Vec2(i * h, j * h), options.time);
            const double w = window[i] * window[j];
            const std::size_t idx = static_cast<std::size_t>(j) * n + i;
            data.get()[idx][0] = w * u.x();
            data.get()[idx][1] = w * u.y();
        }
    }

    std::unique_ptr<fftw_plan_s, FftwPlanDeleter> plan(
        fftw_plan_dft_2d(n, n, data.get(), data.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    fftw_execute(plan.get());

    const double dk = 2.0 * kPi / box;
    const double k_lo = dk;
    const double k_hi = dk * (n / 2);
    const double log_lo = std::log(k_lo);
    const double log_step = (std::log(k_hi) - log_lo) / options.bins;

    std::vector<double> shell_energy(options.bins, 0.0);
    std::vector<int> shell_count(options.bins, 0);
    const double norm = 1.0 / (static_cast<double>(total) * static_cast<double>(total) * w2_mean);
    for (int j = 0; j < n; ++j) {
        const int my = j < n / 2 ? j : j - n;
        for (int i = 0; i < n; ++i) {
            const int mx = i < n / 2 ? i : i - n;
            if (mx == 0 && my == 0) {
                continue;
            }
            const double k = dk * std::hypot(mx, my);
            const int bin = static_cast<int>(std::floor((std::log(k) - log_lo) / log_step));
            if (bin < 0 || bin >= options.bins) {
                continue;
            }
            const std::size_t idx = static_cast<std::size_t>(j) * n + i;
            const double re = data.get()[idx][0];
            const double im = data.get()[idx][1];
            shell_energy[bin] += 0.5 * (re * re + im * im) * norm;
            shell_count[bin] += 1;
        }
    }

    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    int fit_n = 0;
    for (int b = 0; b < options.bins; ++b) {
        const double lo = std::exp(log_lo + b * log_step);
        const double hi = std::exp(log_lo + (b + 1) * log_step);
        const double centre = std::sqrt(lo * hi);
        const double density = shell_energy[b] / (hi - lo);
        out.total_energy += shell_energy[b];
        if (shell_count[b] == 0) {
            continue;
        }
        out.wavenumber.push_back(centre);
        out.energy.push_back(density);
        out.count.push_back(shell_count[b]);
        if (centre >= out.fit_kmin && centre <= out.fit_kmax && density > 0.0) {
            const double x = std::log(centre);
            const double y = std::log(density);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++fit_n;
        }
    }
    out.empty = out.total_energy <= 0.0;
    if (fit_n >= 2) {
        out.slope = (fit_n * sxy - sx * sy) / (fit_n * sxx - sx * sx);
    }
    return out;
}

}  // namespace flam
