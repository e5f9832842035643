#ifndef HKLAB_ANALYSIS_HPP
#define HKLAB_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "hklab/core.hpp"
#include "hklab/kernel.hpp"

namespace hklab {

inline constexpr double pi_const = 3.14159265358979323846264338327950288;

/// Discrete L^p norm under the periodic rectangle rule, p in {1, 2}.
inline double lp_norm(const DensityField& field, int p) {
    const double h = field.grid.h;
    double s = 0.0;
    if (p == 1) {
        for (double v : field.values) s += std::abs(v);
        return h * s;
    }
    if (p == 2) {
        for (double v : field.values) s += v * v;
        return std::sqrt(h * s);
    }
    throw config_error("lp_norm: only p = 1 and p = 2 are supported");
}

/// Discrete H^1 seminorm with centered differences.
inline double h1_seminorm(const DensityField& field) {
    const int m = field.grid.m;
    const double h = field.grid.h;
    double s = 0.0;
    for (int j = 0; j < m; ++j) {
        const int jp = (j + 1 == m) ? 0 : j + 1;
        const int jm = (j == 0) ? m - 1 : j - 1;
        const double dx = (field.values[static_cast<std::size_t>(jp)] -
                           field.values[static_cast<std::size_t>(jm)]) /
                          (2.0 * h);
        s += dx * dx;
    }
    return std::sqrt(h * s);
}

/// Fluctuation about the uniform state, psi = rho - 1/(2*ell).
inline DensityField fluctuation(const DensityField& rho) {
    const double level = 1.0 / (2.0 * rho.grid.ell);
    DensityField psi = rho;
    for (double& v : psi.values) v -= level;
    return psi;
}

/// Noise strength above which the uniform state attracts every initial
/// density: sigma^2_* = (2*ell/pi) * (2R + R^2/(sqrt(3)*ell)).
inline double global_stability_threshold(const Params& params) {
    const double R = params.radius;
    const double ell = params.ell;
    return (2.0 * ell / pi_const) * (2.0 * R + R * R / (std::sqrt(3.0) * ell));
}

/// Exponent in the energy envelope d/dt ||psi||_2^2 <= kappa ||psi||_2^2:
///   kappa = (2/sigma^2)(2R + R^2/(sqrt(3) ell))^2 - pi^2 sigma^2 / (2 ell^2).
/// Negative exactly when sigma^2 exceeds the global threshold.
inline double decay_rate_bound(const Params& params) {
    const double s2 = params.sigma2();
    if (!(s2 > 0.0)) throw config_error("decay_rate_bound: sigma must be positive");
    const double R = params.radius;
    const double ell = params.ell;
    const double a = 2.0 * R + R * R / (std::sqrt(3.0) * ell);
    return (2.0 / s2) * a * a - pi_const * pi_const * s2 / (2.0 * ell * ell);
}

/// Linear growth rate of the mode e^{ikx} about the uniform state:
///   lambda(k) = -sigma^2 k^2 / 2 + m(k) / (2*ell).
inline double dispersion_growth_rate(double k, const Params& params) {
    return -0.5 * params.sigma2() * k * k + fourier_multiplier(k, params) / (2.0 * params.ell);
}

/// Largest sigma^2 for which some admissible mode k = m*pi/ell still grows:
///   sigma^2_lin = max_m 2 (sin(kR) - kR cos(kR)) / (ell k^3).
inline double linear_instability_threshold(const Params& params, int max_mode = 512) {
    double best = 0.0;
    for (int m = 1; m <= max_mode; ++m) {
        const double k = static_cast<double>(m) * pi_const / params.ell;
        best = std::max(best, fourier_multiplier(k, params) / (params.ell * k * k));
    }
    return best;
}

enum class Regime { supercritical, bistable_candidate, linearly_unstable };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::supercritical: return "supercritical";
        case Regime::bistable_candidate: return "bistable-candidate";
        default: return "linearly-unstable";
    }
}

struct StabilityReport {
    double sigma2_global = 0.0;
    double sigma2_linear = 0.0;
    double kappa_bound = 0.0;
    Regime regime = Regime::bistable_candidate;
};

inline StabilityReport stability_report(const Params& params) {
    StabilityReport rep;
    rep.sigma2_global = global_stability_threshold(params);
    rep.sigma2_linear = linear_instability_threshold(params);
    rep.kappa_bound = params.sigma > 0.0 ? decay_rate_bound(params)
                                         : std::numeric_limits<double>::infinity();
    const double s2 = params.sigma2();
    if (s2 > rep.sigma2_global)
        rep.regime = Regime::supercritical;
    else if (s2 < rep.sigma2_linear)
        rep.regime = Regime::linearly_unstable;
    else
        rep.regime = Regime::bistable_candidate;
    return rep;
}

struct DecayFit {
    double rate = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
};

/// Least-squares line on (t, log value) over the samples inside the window.
inline DecayFit fit_exponential_decay(const std::vector<double>& times,
                                      const std::vector<double>& values, double t_lo,
                                      double t_hi) {
    if (times.size() != values.size())
        throw config_error("fit: times/values size mismatch");
    if (!(t_lo < t_hi)) throw config_error("fit: need t_lo < t_hi");
    std::vector<double> t, y;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_lo || times[i] > t_hi) continue;
        if (!(values[i] > 0.0)) throw config_error("fit: values must be positive");
        t.push_back(times[i]);
        y.push_back(std::log(values[i]));
    }
    if (t.size() < 5) throw config_error("fit: need at least 5 samples in window");

    const double n = static_cast<double>(t.size());
    double tm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) { tm += t[i]; ym += y[i]; }
    tm /= n; ym /= n;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        stt += (t[i] - tm) * (t[i] - tm);
        sty += (t[i] - tm) * (y[i] - ym);
        syy += (y[i] - ym) * (y[i] - ym);
    }
    if (!(stt > 0.0)) throw config_error("fit: degenerate time window");

    DecayFit fit;
    fit.window_lo = t_lo;
    fit.window_hi = t_hi;
    if (syy <= 1e-300) { // constant series
        fit.rate = 0.0;
        fit.intercept = ym;
        fit.r_squared = 0.0;
        return fit;
    }
    fit.rate = sty / stt;
    fit.intercept = ym - fit.rate * tm;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double e = y[i] - (fit.intercept + fit.rate * t[i]);
        ss_res += e * e;
    }
    fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    return fit;
}

struct Classification {
    bool uniform = false;
    int cluster_count = 0;
};

/// Uniform when ||field - 1/(2*ell)||_2 < tol (default 0.05/sqrt(2*ell)),
/// otherwise Clustered with the number of strict local maxima of the
/// 3-point-smoothed profile above 1.5x the uniform level.
inline Classification classify_state(const DensityField& field, const Params& params,
                                     double tol = -1.0) {
    const double ell = params.ell;
    if (tol < 0.0) tol = 0.05 / std::sqrt(2.0 * ell);
    const DensityField psi = fluctuation(field);
    if (lp_norm(psi, 2) < tol) return Classification{true, 0};

    const int m = field.grid.m;
    std::vector<double> smooth(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const int jp = (j + 1 == m) ? 0 : j + 1;
        const int jm = (j == 0) ? m - 1 : j - 1;
        smooth[static_cast<std::size_t>(j)] =
            (field.values[static_cast<std::size_t>(jm)] +
             field.values[static_cast<std::size_t>(j)] +
             field.values[static_cast<std::size_t>(jp)]) /
            3.0;
    }
    const double level = 1.5 / (2.0 * ell);
    int count = 0;
    for (int j = 0; j < m; ++j) {
        const int jp = (j + 1 == m) ? 0 : j + 1;
        const int jm = (j == 0) ? m - 1 : j - 1;
        const double v = smooth[static_cast<std::size_t>(j)];
        if (v > level && v > smooth[static_cast<std::size_t>(jm)] &&
            v > smooth[static_cast<std::size_t>(jp)])
            ++count;
    }
    return Classification{false, count};
}

} // namespace hklab

#endif
