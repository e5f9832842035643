#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "hklab/analysis.hpp"
#include "hklab/kernel.hpp"

using namespace hklab;

namespace {

// Independent brute-force quadrature oracle for G_rho: plain trapezoid over
// the window with explicit modulo wrapping, no pairing tricks.
DensityField oracle_g(const DensityField& rho, const Params& params) {
    const Grid& g = rho.grid;
    const int r = static_cast<int>(std::lround(params.radius / g.h));
    DensityField out(g);
    for (int j = 0; j < g.m; ++j) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
            const double weight = (std::abs(k) == r) ? 0.5 : 1.0;
            const double xminusy = -static_cast<double>(k) * g.h;
            acc += weight * xminusy * rho.values[g.wrap(j + k)] * g.h;
        }
        out.values[j] = acc;
    }
    return out;
}

DensityField random_field(const Grid& g, std::mt19937& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> uni(lo, hi);
    DensityField f(g);
    for (double& v : f.values) v = uni(rng);
    return f;
}

DensityField centered_diff(const DensityField& f) {
    const Grid& g = f.grid;
    DensityField out(g);
    for (int j = 0; j < g.m; ++j)
        out.values[j] = (f.values[g.wrap(j + 1)] - f.values[g.wrap(j - 1)]) / (2.0 * g.h);
    return out;
}

double max_abs_diff(const DensityField& a, const DensityField& b) {
    double mx = 0.0;
    for (int j = 0; j < a.grid.m; ++j)
        mx = std::max(mx, std::abs(a.values[j] - b.values[j]));
    return mx;
}

} // namespace

TEST_CASE("stencil weights are antisymmetric with zero sum") {
    const Grid g = make_grid(1.0, 256);
    const Params p = make_params(1.0, 0.5, 1.0);
    const KernelStencil st = make_stencil(g, p);
    CHECK(st.radius_cells == 64);
    CHECK(st.snapped_radius == Approx(0.5).epsilon(1e-15));
    CHECK_FALSE(st.snap_warning);
    const int r = st.radius_cells;
    CHECK(st.weights[r] == 0.0);
    double sum = 0.0;
    for (int k = 1; k <= r; ++k) {
        CHECK(st.weights[r + k] == -st.weights[r - k]);
        sum += st.weights[r + k] + st.weights[r - k];
    }
    CHECK(sum == 0.0);
}

TEST_CASE("radius snapping warns when off-grid") {
    const Grid g = make_grid(1.0, 256);
    const KernelStencil st = make_stencil(g, make_params(1.0, 0.5012345, 1.0));
    CHECK(st.snap_warning);
    CHECK(st.radius_cells == 64); // 0.5012345/h = 64.158 -> 64
}

TEST_CASE("G of the uniform state vanishes identically") {
    const Grid g = make_grid(1.0, 256);
    const Params p = make_params(1.0, 0.5, 1.0);
    const DensityField gv = apply_g_direct(uniform_density(g), make_stencil(g, p));
    for (int j = 0; j < g.m; ++j) CHECK(gv.values[j] == 0.0);
}

TEST_CASE("G of a discrete delta matches the analytic window profile") {
    // rho = delta at 0 (mass 1): G(x) = x on |x| <= R, 0 outside; the
    // trapezoid window edge carries half weight.
    const Grid g = make_grid(1.0, 256);
    const Params p = make_params(1.0, 0.5, 1.0);
    const KernelStencil st = make_stencil(g, p);
    const int j0 = g.m / 2; // node at x = 0
    DensityField delta(g);
    delta.values[j0] = 1.0 / g.h;
    const DensityField gv = apply_g_direct(delta, st);
    const int r = st.radius_cells;
    for (int j = 0; j < g.m; ++j) {
        const int off = j - j0;
        const double x = g.node(j);
        if (std::abs(off) < r)
            CHECK(gv.values[j] == Approx(x).margin(1e-12));
        else if (std::abs(off) == r)
            CHECK(gv.values[j] == Approx(0.5 * x).margin(1e-12));
        else
            CHECK(gv.values[j] == 0.0);
    }
}

TEST_CASE("G of a cosine profile matches oracle and analytic convolution") {
    const Grid g = make_grid(1.0, 256);
    const Params p = make_params(1.0, 0.5, 1.0);
    const KernelStencil st = make_stencil(g, p);
    DensityField rho(g);
    const double k = pi_const;
    for (int j = 0; j < g.m; ++j)
        rho.values[j] = std::cos(k * g.node(j)) / 2.0 + 0.5;
    const DensityField gv = apply_g_direct(rho, st);
    CHECK(max_abs_diff(gv, oracle_g(rho, p)) <= 1e-12);
    // analytic: G of A cos(kx) is A (m(k)/k) sin(kx)
    const double amp = 0.5 * fourier_multiplier(k, p) / k;
    for (int j = 0; j < g.m; ++j)
        CHECK(gv.values[j] == Approx(amp * std::sin(k * g.node(j))).margin(2e-4));
}

TEST_CASE("apply_g agrees with the brute-force oracle on random fields") {
    std::mt19937 rng(123);
    for (int trial = 0; trial < 25; ++trial) {
        const int m = 64 << (trial % 3);
        const Grid g = make_grid(1.0, m);
        const Params p = make_params(1.0, 0.1 + 0.7 * (trial % 5) / 5.0, 1.0);
        const DensityField rho = random_field(g, rng);
        CHECK(max_abs_diff(apply_g_direct(rho, make_stencil(g, p)), oracle_g(rho, p)) <= 1e-12);
    }
}

TEST_CASE("fft path agrees with direct summation") {
    std::mt19937 rng(321);
    for (int trial = 0; trial < 25; ++trial) {
        const int m = 64 << (trial % 4);
        const Grid g = make_grid(1.0, m);
        const Params p = make_params(1.0, 0.05 + 0.9 * (trial % 7) / 7.0, 1.0);
        const KernelStencil st = make_stencil(g, p);
        const DensityField rho = random_field(g, rng);
        CHECK(max_abs_diff(apply_g_fft(rho, st), apply_g_direct(rho, st)) <= 1e-10);
    }
    const Grid g = make_grid(1.0, 96); // not a power of two
    const KernelStencil st = make_stencil(g, make_params(1.0, 0.5, 1.0));
    CHECK_THROWS_AS(apply_g_fft(random_field(g, rng), st), config_error);
}

TEST_CASE("apply_g_x of the uniform state vanishes") {
    const Grid g = make_grid(1.0, 256);
    const DensityField gx = apply_g_x(uniform_density(g), make_params(1.0, 0.5, 1.0));
    for (int j = 0; j < g.m; ++j) CHECK(gx.values[j] == Approx(0.0).margin(1e-13));
}

TEST_CASE("apply_g_x of a discrete delta shows the boundary spikes") {
    // (G_rho)_x = -R(rho(x+R)+rho(x-R)) + window integral: spikes -R/h at
    // x = +-R (plus the half-weight window edge) and the indicator inside.
    const Grid g = make_grid(1.0, 256);
    const Params p = make_params(1.0, 0.5, 1.0);
    const KernelStencil st = make_stencil(g, p);
    const int j0 = g.m / 2;
    DensityField delta(g);
    delta.values[j0] = 1.0 / g.h;
    const DensityField gx = apply_g_x(delta, st);
    const int r = st.radius_cells;
    const double R = st.snapped_radius;
    for (int j = 0; j < g.m; ++j) {
        const int off = std::abs(j - j0);
        if (off == r)
            CHECK(gx.values[j] == Approx(-R / g.h + 0.5).margin(1e-9));
        else if (off < r)
            CHECK(gx.values[j] == Approx(1.0).margin(1e-12));
        else
            CHECK(gx.values[j] == 0.0);
    }
}

TEST_CASE("apply_g_x is the h^2-consistent derivative of apply_g") {
    // Richardson refinement: max |apply_g_x - D_c(apply_g)| should shrink at
    // second order for a smooth density.
    const Params p = make_params(1.0, 0.5, 1.0);
    double err_prev = 0.0;
    double order_min = 10.0;
    for (int level = 0; level < 3; ++level) {
        const int m = 64 << level;
        const Grid g = make_grid(1.0, m);
        DensityField rho(g);
        for (int j = 0; j < g.m; ++j)
            rho.values[j] = std::exp(std::cos(pi_const * g.node(j)));
        const DensityField direct = normalize(rho);
        const KernelStencil st = make_stencil(g, p);
        const double err =
            max_abs_diff(apply_g_x(direct, st), centered_diff(apply_g_direct(direct, st)));
        if (level > 0) order_min = std::min(order_min, std::log2(err_prev / err));
        err_prev = err;
    }
    CHECK(order_min >= 1.7);
}

TEST_CASE("fourier multiplier values") {
    const Params p = make_params(1.0, 0.5, 1.0);
    CHECK(fourier_multiplier(0.0, p) == 0.0);
    CHECK(fourier_multiplier(pi_const, p) == Approx(2.0 / pi_const).epsilon(1e-12));
    // small-k series oracle: (2/3) k^2 R^3
    CHECK(fourier_multiplier(0.01, p) ==
          Approx((2.0 / 3.0) * 1e-4 * 0.125).margin(1e-9));
    // continuity across the series/closed-form switch (m(k)/k^2 is smooth)
    const Params p2 = make_params(1.0, 0.3, 1.0);
    const double k_below = 0.99e-3 / 0.3;
    const double k_above = 1.01e-3 / 0.3;
    const double below = fourier_multiplier(k_below, p2) / (k_below * k_below);
    const double above = fourier_multiplier(k_above, p2) / (k_above * k_above);
    CHECK(below == Approx(above).epsilon(1e-7));
}

TEST_CASE("fourier multiplier matches differentiated apply_g on a grid mode") {
    const Grid g = make_grid(1.0, 256);
    const Params p = make_params(1.0, 0.5, 1.0);
    const KernelStencil st = make_stencil(g, p);
    DensityField mode(g);
    const double k = pi_const;
    for (int j = 0; j < g.m; ++j) mode.values[j] = std::cos(k * g.node(j));
    const DensityField dg = centered_diff(apply_g_direct(mode, st));
    const double mk = fourier_multiplier(k, p);
    for (int j = 0; j < g.m; ++j)
        CHECK(dg.values[j] == Approx(mk * mode.values[j]).margin(2e-3));
}

TEST_CASE("kernel invariants on random fields") {
    std::mt19937 rng(999);
    const Grid g = make_grid(1.0, 256);
    const Params p = make_params(1.0, 0.5, 1.0);
    const KernelStencil st = make_stencil(g, p);
    const double R = p.radius;
    std::uniform_int_distribution<int> shift_dist(1, g.m - 1);

    for (int trial = 0; trial < 200; ++trial) {
        DensityField psi = random_field(g, rng);
        const DensityField gpsi = apply_g_direct(psi, st);

        // zero mean
        CHECK(std::abs(total_mass(gpsi)) <= 1e-12);

        // sup bounds (discrete analogues of the L1-based estimates)
        const double l1 = lp_norm(psi, 1);
        double sup = 0.0;
        for (double v : gpsi.values) sup = std::max(sup, std::abs(v));
        CHECK(sup <= R * l1 * (1.0 + 1e-10) + 1e-300);
        if (l1 <= 2.0) CHECK(sup <= 2.0 * R + 1e-10);

        // L2 bound  ||G_psi||_2^2 <= (4R^4/3) ||psi||_2^2
        const double g2 = lp_norm(gpsi, 2);
        const double p2 = lp_norm(psi, 2);
        CHECK(g2 * g2 <= (4.0 * R * R * R * R / 3.0) * p2 * p2 * (1.0 + 1e-8));

        // exact translation equivariance
        const int s = shift_dist(rng);
        const DensityField lhs = apply_g_direct(shift_nodes(psi, s), st);
        const DensityField rhs = shift_nodes(gpsi, s);
        for (int j = 0; j < g.m; ++j) CHECK(lhs.values[j] == rhs.values[j]);
    }
}

TEST_CASE("apply_g is linear") {
    std::mt19937 rng(17);
    const Grid g = make_grid(1.0, 128);
    const Params p = make_params(1.0, 0.35, 1.0);
    const KernelStencil st = make_stencil(g, p);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        const DensityField f1 = random_field(g, rng);
        const DensityField f2 = random_field(g, rng);
        const double a = coef(rng), b = coef(rng);
        DensityField combo(g);
        for (int j = 0; j < g.m; ++j) combo.values[j] = a * f1.values[j] + b * f2.values[j];
        const DensityField lhs = apply_g_direct(combo, st);
        const DensityField g1 = apply_g_direct(f1, st);
        const DensityField g2 = apply_g_direct(f2, st);
        for (int j = 0; j < g.m; ++j)
            CHECK(lhs.values[j] == Approx(a * g1.values[j] + b * g2.values[j]).margin(1e-12));
    }
}

TEST_CASE("apply_g rejects mismatched grids") {
    const Grid g = make_grid(1.0, 256);
    const Grid other = make_grid(1.0, 128);
    const KernelStencil st = make_stencil(g, make_params(1.0, 0.5, 1.0));
    CHECK_THROWS_AS(apply_g_direct(uniform_density(other), st), config_error);
}
