#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hklab/analysis.hpp"
#include "hklab/initial.hpp"
#include "hklab/particles.hpp"
#include "hklab/solver.hpp"

using namespace hklab;

TEST_CASE("wrapping and minimal image") {
    CHECK(wrap_position(1.0, 1.0) == -1.0);
    CHECK(wrap_position(-1.0, 1.0) == -1.0);
    CHECK(wrap_position(2.3, 1.0) == Approx(0.3).margin(1e-14));
    CHECK(wrap_position(-1.2, 1.0) == Approx(0.8).margin(1e-14));
    CHECK(minimal_image(1.8, 1.0) == Approx(-0.2).margin(1e-15));
    CHECK(minimal_image(-1.8, 1.0) == Approx(0.2).margin(1e-15));
    CHECK(minimal_image(0.3, 1.0) == 0.3);
}

TEST_CASE("two-agent drift step") {
    const Params p = make_params(1.0, 0.5, 0.0);
    ParticleEnsemble ens = make_ensemble({0.0, 0.2}, 1.0, 1);
    ens = em_step(ens, p, 0.1);
    CHECK(ens.positions[0] == Approx(0.01).margin(1e-15));
    CHECK(ens.positions[1] == Approx(0.19).margin(1e-15));
    CHECK(ens.time == Approx(0.1));
}

TEST_CASE("agents attract across the periodic seam") {
    const Params p = make_params(1.0, 0.5, 0.0);
    ParticleEnsemble ens = make_ensemble({-0.9, 0.9}, 1.0, 1);
    ens = em_step(ens, p, 0.1);
    CHECK(ens.positions[0] == Approx(-0.91).margin(1e-15));
    CHECK(ens.positions[1] == Approx(0.91).margin(1e-15));

    // brute-force oracle: place agent 2 at its nearest unwrapped image and
    // evolve on the line
    const double x1 = -0.9, x2_image = 0.9 - 2.0;
    const double d = x1 - x2_image; // 0.2, within range
    const double x1_line = x1 - (0.1 / 2.0) * d;
    CHECK(ens.positions[0] == Approx(x1_line).margin(1e-15));
}

TEST_CASE("agents beyond the radius do not move") {
    const Params p = make_params(1.0, 0.3, 0.0);
    ParticleEnsemble ens = make_ensemble({-0.8, 0.8}, 1.0, 1);
    const ParticleEnsemble out = em_step(ens, p, 0.1);
    // periodic distance is 0.4 > R = 0.3
    CHECK(out.positions[0] == -0.8);
    CHECK(out.positions[1] == 0.8);
}

TEST_CASE("zero noise and negligible radius freeze the ensemble") {
    const Grid g = make_grid(1.0, 64);
    const Params p = make_params(1.0, 1e-9, 0.0);
    const ParticleRun run = run_particles(uniform_density(g), 50, p, 0.01, 0.5, 9);
    // positions never leave the initial sample
    const std::vector<double> init = sample_from_density(uniform_density(g), 50, 9);
    for (int i = 0; i < 50; ++i) CHECK(run.ensemble.positions[i] == init[i]);
}

TEST_CASE("empirical density basics") {
    const Grid g = make_grid(1.0, 64);
    SECTION("all agents in one cell") {
        ParticleEnsemble ens = make_ensemble(std::vector<double>(100, 0.0), 1.0, 1);
        const DensityField f = empirical_density(ens, g);
        int nonzero = 0;
        for (double v : f.values)
            if (v != 0.0) {
                ++nonzero;
                CHECK(v == Approx(1.0 / g.h));
            }
        CHECK(nonzero == 1);
        CHECK(total_mass(f) == Approx(1.0).margin(1e-12));
    }
    SECTION("one agent per node gives the uniform density") {
        std::vector<double> pos(64);
        for (int j = 0; j < 64; ++j) pos[j] = g.node(j);
        const DensityField f = empirical_density(make_ensemble(pos, 1.0, 1), g);
        for (double v : f.values) CHECK(v == Approx(0.5).margin(1e-12));
    }
}

TEST_CASE("inverse-cdf sampling of the uniform density is calibrated") {
    const Grid g = make_grid(1.0, 64);
    const DensityField u = uniform_density(g);
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ParticleEnsemble ens = make_ensemble(sample_from_density(u, 10000, seed), 1.0, seed);
        DensityField f = empirical_density(ens, g);
        for (int j = 0; j < g.m; ++j) f.values[j] -= 0.5;
        if (lp_norm(f, 1) > 0.1) ++failures;
    }
    CHECK(failures <= 1);
}

TEST_CASE("sampling respects a nonuniform density") {
    const Grid g = make_grid(1.0, 64);
    const DensityField bump = cosine_bump(g);
    ParticleEnsemble ens = make_ensemble(sample_from_density(bump, 20000, 3), 1.0, 3);
    DensityField f = empirical_density(ens, g);
    for (int j = 0; j < g.m; ++j) f.values[j] -= bump.values[j];
    CHECK(lp_norm(f, 1) < 0.1);
    CHECK_THROWS_AS(sample_from_density(DensityField(g, 0.0), 10, 1), config_error);
}

TEST_CASE("runs are deterministic in the seed") {
    const Grid g = make_grid(1.0, 64);
    const Params p = make_params_sigma2(1.0, 0.5, 0.2);
    const ParticleRun a = run_particles(cosine_bump(g), 500, p, 0.01, 0.5, 42);
    const ParticleRun b = run_particles(cosine_bump(g), 500, p, 0.01, 0.5, 42);
    for (int i = 0; i < 500; ++i) CHECK(a.ensemble.positions[i] == b.ensemble.positions[i]);
    // positions stay inside [-ell, ell) through every noisy step
    for (double x : a.ensemble.positions) {
        CHECK(x >= -1.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("direct and sorted force paths agree") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const Params p = make_params(1.0, 0.5, 0.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> pos(1000);
        for (double& x : pos) x = uni(rng);
        const ParticleEnsemble ens = make_ensemble(pos, 1.0, 7);
        const ParticleEnsemble via_direct = em_step(ens, p, 0.01, ForcePath::direct);
        const ParticleEnsemble via_sorted = em_step(ens, p, 0.01, ForcePath::sorted);
        for (int i = 0; i < 1000; ++i)
            CHECK(via_direct.positions[i] == Approx(via_sorted.positions[i]).margin(1e-12));
    }
}

TEST_CASE("permuting positions and streams permutes the trajectory") {
    std::mt19937 rng(57);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const Params p = make_params_sigma2(1.0, 0.5, 0.3);
    const int n = 200;
    std::vector<double> pos(n);
    for (double& x : pos) x = uni(rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);

    ParticleEnsemble a = make_ensemble(pos, 1.0, 2024);
    ParticleEnsemble b = a;
    for (int i = 0; i < n; ++i) {
        b.positions[i] = a.positions[perm[i]];
        b.streams[i] = a.streams[perm[i]];
    }
    for (int s = 0; s < 20; ++s) {
        a = em_step(a, p, 0.01, ForcePath::sorted);
        b = em_step(b, p, 0.01, ForcePath::sorted);
    }
    for (int i = 0; i < n; ++i) CHECK(b.positions[i] == a.positions[perm[i]]);
}

TEST_CASE("noiseless pair converges monotonically to an invariant midpoint") {
    const Params p = make_params(1.0, 0.5, 0.0);
    ParticleEnsemble ens = make_ensemble({-0.1, 0.3}, 1.0, 1);
    const double mid = 0.1;
    double gap = 0.4;
    for (int s = 0; s < 200; ++s) {
        ens = em_step(ens, p, 0.05);
        const double new_gap = std::abs(ens.positions[1] - ens.positions[0]);
        CHECK(new_gap < gap);
        gap = new_gap;
        CHECK(0.5 * (ens.positions[0] + ens.positions[1]) == Approx(mid).margin(1e-12));
    }
    CHECK(gap < 1e-4);
}

TEST_CASE("ensemble validation") {
    CHECK_THROWS_AS(make_ensemble({0.0}, 1.0, 1), config_error);
    const Grid g = make_grid(1.0, 64);
    CHECK_THROWS_AS(run_particles(uniform_density(g), 1, make_params(1, 0.5, 1), 0.01, 1.0, 1),
                    config_error);
    CHECK_THROWS_AS(run_particles(uniform_density(g), 10, make_params(1, 0.5, 1), 0.0, 1.0, 1),
                    config_error);
}

TEST_CASE("supercritical noise keeps a uniform ensemble uniform", "[montecarlo]") {
    const Grid g = make_grid(1.0, 64);
    const Params p = make_params_sigma2(1.0, 0.5, 1.0);
    const DensityField u = uniform_density(g);
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const ParticleRun run = run_particles(u, 10000, p, 0.01, 2.0, seed);
        DensityField diff = run.snapshots.back();
        for (int j = 0; j < g.m; ++j) diff.values[j] -= 0.5;
        total += lp_norm(diff, 1);
    }
    CHECK(total / 20.0 <= 0.15);
}

TEST_CASE("subcritical noise lets sampling fluctuations nucleate clusters", "[montecarlo]") {
    const Grid g = make_grid(1.0, 64);
    const Params p = make_params_sigma2(1.0, 0.5, 0.02);
    const DensityField u = uniform_density(g);
    int clustered = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const ParticleRun run = run_particles(u, 10000, p, 0.01, 20.0, seed);
        const Classification c = classify_state(run.snapshots.back(), p);
        if (!c.uniform && c.cluster_count >= 1) ++clustered;
    }
    CHECK(clustered >= 18);
}

TEST_CASE("empirical density tracks the mean-field solution (smoke)") {
    const Grid g = make_grid(1.0, 64);
    const Params p = make_params_sigma2(1.0, 0.5, 0.2);
    const DensityField rho0 = cosine_bump(g);
    const double T = 0.5;

    const Trajectory pde = solve(rho0, p, default_solver_config(g, p, T));
    const ParticleRun mc = run_particles(rho0, 8000, p, 0.005, T, 11);
    DensityField diff = mc.snapshots.back();
    for (int j = 0; j < g.m; ++j) diff.values[j] -= pde.final_field().values[j];
    CHECK(lp_norm(diff, 1) < 0.2);
}
