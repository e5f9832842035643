#ifndef HKLAB_PARTICLES_HPP
#define HKLAB_PARTICLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hklab/core.hpp"
#include "hklab/detail/rng.hpp"

namespace hklab {

/// N agents on the periodic interval [-ell, ell). Noise is drawn from
/// counter-based streams keyed by (seed, streams[i], step_index), so a run is
/// reproducible from the seed alone and per-agent streams can be permuted
/// together with the positions.
struct ParticleEnsemble {
    std::vector<double> positions;
    std::vector<std::uint64_t> streams;
    std::uint64_t seed = 0;
    std::uint64_t step_index = 0;
    double time = 0.0;

    int n() const { return static_cast<int>(positions.size()); }
};

inline double wrap_position(double x, double ell) {
    const double width = 2.0 * ell;
    double w = x - width * std::floor((x + ell) / width);
    if (w < -ell) w = -ell; // guard against rounding at the seam
    if (w >= ell) w -= width;
    return w;
}

/// Signed minimal periodic representative of a displacement.
inline double minimal_image(double d, double ell) {
    const double width = 2.0 * ell;
    return d - width * std::nearbyint(d / width);
}

inline ParticleEnsemble make_ensemble(std::vector<double> positions, double ell,
                                      std::uint64_t seed) {
    if (positions.size() < 2)
        throw config_error("particles: need at least 2 agents");
    ParticleEnsemble ens;
    for (double& x : positions) x = wrap_position(x, ell);
    ens.positions = std::move(positions);
    ens.streams.resize(ens.positions.size());
    std::iota(ens.streams.begin(), ens.streams.end(), std::uint64_t{0});
    ens.seed = seed;
    return ens;
}

enum class ForcePath { automatic, direct, sorted };

namespace detail {

/// Raw interaction sums sum_j 1_{d(x_i,x_j)<=R} (x_i - x_j)_signed by the
/// O(N^2) pairwise loop.
inline std::vector<double> drift_sums_direct(const std::vector<double>& x,
                                             const Params& params) {
    const std::size_t n = x.size();
    const double R = params.radius;
    std::vector<double> f(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = minimal_image(x[i] - x[j], params.ell);
            if (std::abs(d) <= R) acc += d;
        }
        f[i] = acc;
    }
    return f;
}

/// Same sums in O(N log N): sort positions, then each interaction window is a
/// contiguous run of the periodically tripled sorted array, evaluated with
/// prefix sums.
inline std::vector<double> drift_sums_sorted(const std::vector<double>& x,
                                             const Params& params) {
    const std::size_t n = x.size();
    const double R = params.radius;
    const double width = 2.0 * params.ell;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> sorted(n);
    for (std::size_t q = 0; q < n; ++q) sorted[q] = x[order[q]];

    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t q = 0; q < n; ++q) prefix[q + 1] = prefix[q] + sorted[q];
    const double total = prefix[n];

    // Index into the virtual tripled array [sorted-width, sorted, sorted+width].
    const auto lb = [&](double v) -> std::size_t {
        auto it = std::lower_bound(sorted.begin(), sorted.end(), v + width);
        if (it != sorted.end()) return static_cast<std::size_t>(it - sorted.begin());
        it = std::lower_bound(sorted.begin(), sorted.end(), v);
        if (it != sorted.end()) return n + static_cast<std::size_t>(it - sorted.begin());
        it = std::lower_bound(sorted.begin(), sorted.end(), v - width);
        return 2 * n + static_cast<std::size_t>(it - sorted.begin());
    };
    const auto ub = [&](double v) -> std::size_t {
        auto it = std::upper_bound(sorted.begin(), sorted.end(), v + width);
        if (it != sorted.end()) return static_cast<std::size_t>(it - sorted.begin());
        it = std::upper_bound(sorted.begin(), sorted.end(), v);
        if (it != sorted.end()) return n + static_cast<std::size_t>(it - sorted.begin());
        it = std::upper_bound(sorted.begin(), sorted.end(), v - width);
        return 2 * n + static_cast<std::size_t>(it - sorted.begin());
    };
    // Sum of tripled-array entries with indices in [0, t).
    const auto cumsum = [&](std::size_t t) -> double {
        const std::size_t copies = t / n;
        const std::size_t rem = t % n;
        double s = 0.0;
        for (std::size_t c = 0; c < copies; ++c)
            s += total + width * (static_cast<double>(c) - 1.0) * static_cast<double>(n);
        s += prefix[rem] + width * (static_cast<double>(copies) - 1.0) * static_cast<double>(rem);
        return s;
    };

    std::vector<double> f(n, 0.0);
    for (std::size_t q = 0; q < n; ++q) {
        const double p = sorted[q];
        const std::size_t lo = lb(p - R);
        const std::size_t hi = ub(p + R);
        const double cnt = static_cast<double>(hi - lo);
        const double sum = cumsum(hi) - cumsum(lo);
        f[order[q]] = cnt * p - sum;
    }
    return f;
}

inline std::vector<double> drift_sums(const std::vector<double>& x, const Params& params,
                                      ForcePath path) {
    if (path == ForcePath::direct) return drift_sums_direct(x, params);
    if (path == ForcePath::sorted) return drift_sums_sorted(x, params);
    return x.size() > 2048 ? drift_sums_sorted(x, params) : drift_sums_direct(x, params);
}

} // namespace detail

/// One Euler-Maruyama step of
///   dx_i = -(1/N) sum_j 1_{|x_i-x_j|<=R} (x_i - x_j) dt + sigma dW_i
/// with minimal-image displacements and periodic wrapping.
inline ParticleEnsemble em_step(const ParticleEnsemble& ens, const Params& params, double dt,
                                ForcePath path = ForcePath::automatic) {
    if (!(dt > 0.0)) throw config_error("particles: dt must be positive");
    const std::size_t n = ens.positions.size();
    const std::vector<double> sums = detail::drift_sums(ens.positions, params, path);
    const double drift_scale = dt / static_cast<double>(n);
    const double noise_scale = params.sigma * std::sqrt(dt);

    ParticleEnsemble out = ens;
    for (std::size_t i = 0; i < n; ++i) {
        double x = ens.positions[i] - drift_scale * sums[i];
        if (noise_scale != 0.0)
            x += noise_scale * detail::normal(ens.seed, ens.streams[i], ens.step_index);
        out.positions[i] = wrap_position(x, params.ell);
    }
    out.step_index = ens.step_index + 1;
    out.time = ens.time + dt;
    return out;
}

/// Normalized histogram of agent positions over the grid cells [x_j, x_j + h).
inline DensityField empirical_density(const ParticleEnsemble& ens, const Grid& grid) {
    DensityField out(grid);
    const double weight = 1.0 / (static_cast<double>(ens.positions.size()) * grid.h);
    for (double x : ens.positions) {
        int j = static_cast<int>(std::floor((x + grid.ell) / grid.h));
        if (j < 0) j = 0;
        if (j >= grid.m) j = grid.m - 1;
        out.values[static_cast<std::size_t>(j)] += weight;
    }
    return out;
}

/// Inverse-CDF sampling from a piecewise-constant density: cell j covers
/// [x_j, x_j + h) with constant value rho_j.
inline std::vector<double> sample_from_density(const DensityField& rho0, int n,
                                               std::uint64_t seed) {
    for (double v : rho0.values)
        if (v < 0.0) throw config_error("particles: initial density has negative entries");
    const double mass = total_mass(rho0);
    if (!(mass > 0.0)) throw config_error("particles: initial density has non-positive mass");
    const int m = rho0.grid.m;
    const double h = rho0.grid.h;
    std::vector<double> cdf(static_cast<std::size_t>(m) + 1, 0.0);
    for (int j = 0; j < m; ++j)
        cdf[static_cast<std::size_t>(j) + 1] =
            cdf[static_cast<std::size_t>(j)] + rho0.values[static_cast<std::size_t>(j)] * h / mass;
    cdf.back() = 1.0;

    const std::uint64_t sample_seed = detail::splitmix64(seed ^ 0xa02bdbf7bb3c0a7full);
    std::vector<double> positions(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double u = detail::uniform_unit(sample_seed, static_cast<std::uint64_t>(i), 0);
        const auto it = std::lower_bound(cdf.begin() + 1, cdf.end(), u);
        const int j = static_cast<int>(it - cdf.begin()) - 1;
        const double c0 = cdf[static_cast<std::size_t>(j)];
        const double c1 = cdf[static_cast<std::size_t>(j) + 1];
        const double frac = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.0;
        positions[static_cast<std::size_t>(i)] =
            wrap_position(rho0.grid.node(j) + frac * h, rho0.grid.ell);
    }
    return positions;
}

struct ParticleRun {
    ParticleEnsemble ensemble;
    std::vector<double> times;
    std::vector<DensityField> snapshots;
    std::vector<std::vector<double>> position_snapshots;
};

/// Sample rho0, iterate em_step to t_end, and record histogram + position
/// snapshots every snapshot_stride steps (plus the initial and final states).
inline ParticleRun run_particles(const DensityField& rho0, int n, const Params& params,
                                 double dt, double t_end, std::uint64_t seed,
                                 int snapshot_stride = 0,
                                 ForcePath path = ForcePath::automatic) {
    if (n < 2) throw config_error("particles: need at least 2 agents");
    if (!(dt > 0.0) || !(t_end >= dt))
        throw config_error("particles: need 0 < dt <= t_end");
    ParticleRun run;
    run.ensemble = make_ensemble(sample_from_density(rho0, n, seed), params.ell, seed);
    const int steps = std::max(1, static_cast<int>(std::ceil(t_end / dt - 1e-9)));
    const double dt_eff = t_end / static_cast<double>(steps);
    if (snapshot_stride <= 0) snapshot_stride = steps;
    const auto record = [&run, &rho0]() {
        run.times.push_back(run.ensemble.time);
        run.snapshots.push_back(empirical_density(run.ensemble, rho0.grid));
        run.position_snapshots.push_back(run.ensemble.positions);
    };
    record();
    for (int s = 1; s <= steps; ++s) {
        run.ensemble = em_step(run.ensemble, params, dt_eff, path);
        if (s % snapshot_stride == 0 || s == steps) record();
    }
    return run;
}

} // namespace hklab

#endif
