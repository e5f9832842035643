#ifndef HKLAB_INITIAL_HPP
#define HKLAB_INITIAL_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "hklab/analysis.hpp"
#include "hklab/core.hpp"
#include "hklab/detail/rng.hpp"

namespace hklab {

/// Uniform state plus low-mode random noise: modes 1..n_modes in both
/// quadratures with coefficient magnitudes in [amplitude/2, amplitude] and
/// random signs. Clipped at zero and renormalized to unit mass.
inline DensityField perturbed_uniform(const Grid& grid, double amplitude, int n_modes,
                                      std::uint64_t seed) {
    DensityField rho = uniform_density(grid);
    const std::uint64_t s = detail::splitmix64(seed ^ 0x7c6a4d1f0b5e3a99ull);
    for (int mode = 1; mode <= n_modes; ++mode) {
        const std::uint64_t st = static_cast<std::uint64_t>(mode);
        const double ua = detail::uniform_unit(s, st, 0);
        const double ub = detail::uniform_unit(s, st, 1);
        const double sa = detail::uniform_unit(s, st, 2) < 0.5 ? -1.0 : 1.0;
        const double sb = detail::uniform_unit(s, st, 3) < 0.5 ? -1.0 : 1.0;
        const double a = sa * amplitude * (0.5 + 0.5 * ua);
        const double b = sb * amplitude * (0.5 + 0.5 * ub);
        const double kk = static_cast<double>(mode) * pi_const / grid.ell;
        for (int j = 0; j < grid.m; ++j) {
            const double x = grid.node(j);
            rho.values[static_cast<std::size_t>(j)] += a * std::cos(kk * x) + b * std::sin(kk * x);
        }
    }
    for (double& v : rho.values) v = std::max(v, 0.0);
    return normalize(rho);
}

/// Single cosine mode of given wavenumber index added to the uniform state;
/// mass stays exactly 1 for integer mode >= 1.
inline DensityField cosine_perturbation(const Grid& grid, int mode, double amplitude) {
    DensityField rho = uniform_density(grid);
    const double kk = static_cast<double>(mode) * pi_const / grid.ell;
    for (int j = 0; j < grid.m; ++j)
        rho.values[static_cast<std::size_t>(j)] += amplitude * std::cos(kk * grid.node(j));
    return rho;
}

/// Smooth unimodal bump (1 + cos(pi x / ell)) / (2*ell); a C-infinity periodic
/// probability density.
inline DensityField cosine_bump(const Grid& grid) {
    DensityField rho(grid);
    for (int j = 0; j < grid.m; ++j)
        rho.values[static_cast<std::size_t>(j)] =
            (1.0 + std::cos(pi_const * grid.node(j) / grid.ell)) / (2.0 * grid.ell);
    return normalize(rho);
}

/// Wrapped Gaussian bump centered at `center` with width `width`, normalized.
inline DensityField gaussian_bump(const Grid& grid, double center, double width) {
    if (!(width > 0.0)) throw config_error("gaussian_bump: width must be positive");
    DensityField rho(grid);
    for (int j = 0; j < grid.m; ++j) {
        const double x = grid.node(j);
        double v = 0.0;
        for (int image = -2; image <= 2; ++image) {
            const double d = x - center + 2.0 * grid.ell * static_cast<double>(image);
            v += std::exp(-0.5 * d * d / (width * width));
        }
        rho.values[static_cast<std::size_t>(j)] = v;
    }
    return normalize(rho);
}

/// Random smooth probability density: a uniform floor plus 1..4 wrapped
/// Gaussian bumps with random centers, widths and weights. Band-limited and
/// strictly nonnegative, suitable as rho0 for the solver.
inline DensityField random_smooth_density(const Grid& grid, std::uint64_t seed) {
    const std::uint64_t s = detail::splitmix64(seed ^ 0x2d99787926d46932ull);
    const int n_bumps = 1 + static_cast<int>(detail::uniform_unit(s, 0, 0) * 4.0);
    DensityField rho(grid, 0.2 / (2.0 * grid.ell));
    for (int b = 1; b <= n_bumps; ++b) {
        const std::uint64_t st = static_cast<std::uint64_t>(b);
        const double center = grid.ell * (2.0 * detail::uniform_unit(s, st, 0) - 1.0);
        const double width = grid.ell * (0.05 + 0.20 * detail::uniform_unit(s, st, 1));
        const double weight = 0.2 + detail::uniform_unit(s, st, 2);
        const DensityField bump = gaussian_bump(grid, center, width);
        for (int j = 0; j < grid.m; ++j)
            rho.values[static_cast<std::size_t>(j)] +=
                weight * bump.values[static_cast<std::size_t>(j)];
    }
    return normalize(rho);
}

} // namespace hklab

#endif
