#ifndef HKLAB_CORE_HPP
#define HKLAB_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hklab {

inline constexpr const char* version = "0.1.0";

/// Invalid parameters, grids or run configuration.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Runtime numerical failure (blow-up, NaN, CFL violation, iteration limit).
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Physical problem parameters: half-domain length ell, interaction radius,
/// noise magnitude sigma. Opinion space is the periodic interval [-ell, ell).
struct Params {
    double ell = 1.0;
    double radius = 0.5;
    double sigma = 1.0;

    double sigma2() const { return sigma * sigma; }
};

inline Params make_params(double ell, double radius, double sigma) {
    if (!(ell > 0.0))
        throw config_error("params: ell must be positive");
    if (!(radius > 0.0 && radius < ell))
        throw config_error("params: radius must satisfy 0 < radius < ell");
    if (!(sigma >= 0.0))
        throw config_error("params: sigma must be nonnegative");
    return Params{ell, radius, sigma};
}

inline Params make_params_sigma2(double ell, double radius, double sigma2) {
    if (!(sigma2 >= 0.0))
        throw config_error("params: sigma2 must be nonnegative");
    return make_params(ell, radius, std::sqrt(sigma2));
}

/// Uniform periodic mesh on [-ell, ell): m cells of width h = 2*ell/m,
/// nodes x_j = -ell + j*h for j = 0..m-1. The right endpoint is identified
/// with the left one.
struct Grid {
    double ell = 1.0;
    int m = 0;
    double h = 0.0;

    double node(int j) const { return -ell + h * static_cast<double>(j); }

    /// Index wrapped into [0, m).
    int wrap(int j) const {
        int r = j % m;
        return r < 0 ? r + m : r;
    }

    bool operator==(const Grid& other) const {
        return ell == other.ell && m == other.m && h == other.h;
    }
};

inline Grid make_grid(double ell, int m) {
    if (!(ell > 0.0))
        throw config_error("grid: ell must be positive");
    if (m < 8)
        throw config_error("grid: need at least 8 cells");
    if (m % 2 != 0)
        throw config_error("grid: cell count must be even");
    return Grid{ell, m, 2.0 * ell / static_cast<double>(m)};
}

/// Grid-sampled density rho(x_j). The same type represents fluctuations
/// psi = rho - 1/(2*ell).
struct DensityField {
    Grid grid;
    std::vector<double> values;

    DensityField() = default;
    explicit DensityField(const Grid& g, double fill = 0.0)
        : grid(g), values(static_cast<std::size_t>(g.m), fill) {}
    DensityField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != static_cast<std::size_t>(g.m))
            throw config_error("field: value count does not match grid");
    }

    int size() const { return grid.m; }
    double& operator[](std::size_t j) { return values[j]; }
    double operator[](std::size_t j) const { return values[j]; }
};

inline bool all_finite(const DensityField& f) {
    for (double v : f.values)
        if (!std::isfinite(v)) return false;
    return true;
}

inline void require_same_grid(const DensityField& a, const Grid& g, const char* what) {
    if (!(a.grid == g))
        throw config_error(std::string(what) + ": field/grid mismatch");
}

/// The spatially uniform probability density rho = 1/(2*ell).
inline DensityField uniform_density(const Grid& grid) {
    return DensityField(grid, 1.0 / (2.0 * grid.ell));
}

/// Periodic rectangle rule: h * sum of samples. Matches the discrete
/// conservation law of the solver exactly.
inline double total_mass(const DensityField& field) {
    double s = 0.0;
    for (double v : field.values) s += v;
    return field.grid.h * s;
}

inline DensityField scale(const DensityField& field, double c) {
    DensityField out = field;
    for (double& v : out.values) v *= c;
    return out;
}

/// Circular node shift: out[j] = in[(j - jshift) mod m].
inline DensityField shift_nodes(const DensityField& field, int jshift) {
    const int m = field.grid.m;
    DensityField out(field.grid);
    for (int j = 0; j < m; ++j)
        out.values[static_cast<std::size_t>(j)] =
            field.values[static_cast<std::size_t>(field.grid.wrap(j - jshift))];
    return out;
}

/// Rescale a nonnegative field to unit mass.
inline DensityField normalize(const DensityField& field) {
    for (double v : field.values)
        if (v < 0.0) throw config_error("normalize: negative entries");
    const double mass = total_mass(field);
    if (!(mass > 0.0)) throw config_error("normalize: zero mass");
    return scale(field, 1.0 / mass);
}

inline double min_value(const DensityField& field) {
    double mn = field.values.front();
    for (double v : field.values) mn = std::min(mn, v);
    return mn;
}

inline double max_value(const DensityField& field) {
    double mx = field.values.front();
    for (double v : field.values) mx = std::max(mx, v);
    return mx;
}

} // namespace hklab

#endif
