#ifndef HKLAB_CLI_HPP
#define HKLAB_CLI_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hklab/analysis.hpp"
#include "hklab/core.hpp"
#include "hklab/initial.hpp"
#include "hklab/io.hpp"
#include "hklab/particles.hpp"
#include "hklab/solver.hpp"

namespace hklab {

/// Effective configuration of one CLI invocation. Every field can be set in a
/// flat key-value config file and overridden by command-line flags.
struct RunConfig {
    // problem
    double ell = 1.0;
    double radius = 0.5;
    double sigma2 = 1.0;
    int grid_m = 256;
    // time stepping
    double dt = 0.0; // 0 -> stable default
    double t_end = 5.0;
    std::string scheme = "imex_be";
    int record_every = 0; // 0 -> about 400 records per run
    // initial condition: uniform | perturbed | cosine | bump | gaussian | random
    std::string ic = "perturbed";
    double ic_amplitude = 0.01;
    int ic_modes = 4;
    int ic_mode = 1;
    double ic_center = 0.0;
    double ic_width = 0.1;
    // picard
    double picard_tol = 1e-8;
    int picard_max_iter = 64;
    // particles
    int n_particles = 10000;
    double particle_dt = 0.005;
    int snapshot_stride = 0;
    // dispersion table
    int dispersion_modes = 20;
    // phase-diagram sweep
    std::vector<double> sweep_radius = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    std::vector<double> sweep_sigma2 = {0.006, 0.018, 0.05, 0.12, 0.28, 0.6, 1.1, 1.7};
    double sweep_t_end = 40.0;
    double sweep_amplitude = 0.02;
    // orchestration
    std::uint64_t seed = 42;
    std::string out_dir = "out";
    int workers = 1;
    bool timings = false; // emit measured runtime_seconds in sweep.csv
};

inline std::string join_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += format_float(v[i]);
    }
    return s;
}

inline void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "ell") c.ell = parse_double(key, value);
    else if (key == "radius") c.radius = parse_double(key, value);
    else if (key == "sigma2") c.sigma2 = parse_double(key, value);
    else if (key == "grid_m") c.grid_m = static_cast<int>(parse_int(key, value));
    else if (key == "dt") c.dt = parse_double(key, value);
    else if (key == "t_end") c.t_end = parse_double(key, value);
    else if (key == "scheme") c.scheme = value;
    else if (key == "record_every") c.record_every = static_cast<int>(parse_int(key, value));
    else if (key == "ic") c.ic = value;
    else if (key == "ic_amplitude") c.ic_amplitude = parse_double(key, value);
    else if (key == "ic_modes") c.ic_modes = static_cast<int>(parse_int(key, value));
    else if (key == "ic_mode") c.ic_mode = static_cast<int>(parse_int(key, value));
    else if (key == "ic_center") c.ic_center = parse_double(key, value);
    else if (key == "ic_width") c.ic_width = parse_double(key, value);
    else if (key == "picard_tol") c.picard_tol = parse_double(key, value);
    else if (key == "picard_max_iter") c.picard_max_iter = static_cast<int>(parse_int(key, value));
    else if (key == "n_particles") c.n_particles = static_cast<int>(parse_int(key, value));
    else if (key == "particle_dt") c.particle_dt = parse_double(key, value);
    else if (key == "snapshot_stride") c.snapshot_stride = static_cast<int>(parse_int(key, value));
    else if (key == "dispersion_modes") c.dispersion_modes = static_cast<int>(parse_int(key, value));
    else if (key == "sweep_radius") c.sweep_radius = parse_double_list(value);
    else if (key == "sweep_sigma2") c.sweep_sigma2 = parse_double_list(value);
    else if (key == "sweep_t_end") c.sweep_t_end = parse_double(key, value);
    else if (key == "sweep_amplitude") c.sweep_amplitude = parse_double(key, value);
    else if (key == "seed") c.seed = parse_uint(key, value);
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "workers") c.workers = static_cast<int>(parse_int(key, value));
    else if (key == "timings") c.timings = (value == "1" || value == "true");
    else throw config_error("config: unknown key '" + key + "'");
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
    for (const auto& [k, v] : parse_kv_file(path)) apply_config_entry(c, k, v);
}

inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["ell"] = c.ell;
    j["radius"] = c.radius;
    j["sigma2"] = c.sigma2;
    j["grid_m"] = c.grid_m;
    j["dt"] = c.dt;
    j["t_end"] = c.t_end;
    j["scheme"] = c.scheme;
    j["record_every"] = c.record_every;
    j["ic"] = c.ic;
    j["ic_amplitude"] = c.ic_amplitude;
    j["ic_modes"] = c.ic_modes;
    j["ic_mode"] = c.ic_mode;
    j["ic_center"] = c.ic_center;
    j["ic_width"] = c.ic_width;
    j["picard_tol"] = c.picard_tol;
    j["picard_max_iter"] = c.picard_max_iter;
    j["n_particles"] = c.n_particles;
    j["particle_dt"] = c.particle_dt;
    j["snapshot_stride"] = c.snapshot_stride;
    j["dispersion_modes"] = c.dispersion_modes;
    j["sweep_radius"] = join_list(c.sweep_radius);
    j["sweep_sigma2"] = join_list(c.sweep_sigma2);
    j["sweep_t_end"] = c.sweep_t_end;
    j["sweep_amplitude"] = c.sweep_amplitude;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["workers"] = c.workers;
    j["timings"] = c.timings ? 1 : 0;
    return j;
}

namespace cli_detail {

inline Params params_from(const RunConfig& c) {
    return make_params_sigma2(c.ell, c.radius, c.sigma2);
}

inline Grid grid_from(const RunConfig& c) { return make_grid(c.ell, c.grid_m); }

inline DensityField initial_condition(const RunConfig& c, const Grid& grid) {
    if (c.ic == "uniform") return uniform_density(grid);
    if (c.ic == "perturbed") return perturbed_uniform(grid, c.ic_amplitude, c.ic_modes, c.seed);
    if (c.ic == "cosine") return cosine_perturbation(grid, c.ic_mode, c.ic_amplitude);
    if (c.ic == "bump") return cosine_bump(grid);
    if (c.ic == "gaussian") return gaussian_bump(grid, c.ic_center, c.ic_width);
    if (c.ic == "random") return random_smooth_density(grid, c.seed);
    throw config_error("config: unknown ic '" + c.ic + "'");
}

inline SolverConfig solver_config_from(const RunConfig& c, const Grid& grid,
                                       const Params& params, double t_end) {
    SolverConfig sc = default_solver_config(grid, params, t_end, parse_scheme(c.scheme));
    if (c.dt > 0.0) {
        sc.dt = c.dt;
        const double steps = std::ceil(t_end / sc.dt);
        sc.record_every = std::max(1, static_cast<int>(steps / 400.0));
    }
    if (c.record_every > 0) sc.record_every = c.record_every;
    sc.picard_tol = c.picard_tol;
    sc.picard_max_iter = c.picard_max_iter;
    validate_solver_config(sc);
    return sc;
}

inline void ensure_out_dir(const RunConfig& c) {
    std::error_code ec;
    std::filesystem::create_directories(c.out_dir, ec);
    if (ec) throw config_error("cannot create output directory: " + c.out_dir);
}

inline std::string out_path(const RunConfig& c, const std::string& name) {
    return (std::filesystem::path(c.out_dir) / name).string();
}

inline std::string diagnostics_csv(const Trajectory& traj) {
    std::string s = "t,mass,min_rho,l1,psi_l2,psi_h1\n";
    for (const auto& d : traj.diagnostics) {
        s += format_float(d.time);
        s += ',';
        s += format_float(d.mass);
        s += ',';
        s += format_float(d.min_value);
        s += ',';
        s += format_float(d.l1);
        s += ',';
        s += format_float(d.psi_l2);
        s += ',';
        s += format_float(d.psi_h1);
        s += '\n';
    }
    return s;
}

inline std::string field_csv(const DensityField& f) {
    std::string s = "x,rho\n";
    for (int j = 0; j < f.grid.m; ++j) {
        s += format_float(f.grid.node(j));
        s += ',';
        s += format_float(f.values[static_cast<std::size_t>(j)]);
        s += '\n';
    }
    return s;
}

class WallTimer {
public:
    WallTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline void write_meta(const RunConfig& c, const std::string& command, double wall_seconds,
                       const std::vector<std::string>& outputs,
                       nlohmann::json extra = nlohmann::json::object()) {
    nlohmann::json j;
    j["command"] = command;
    j["tool"] = "hklab";
    j["version"] = version;
    j["config"] = config_to_json(c);
    j["wall_time_seconds"] = wall_seconds;
    j["outputs"] = outputs;
    if (!extra.empty()) j["extra"] = extra;
    write_text_file(out_path(c, "meta.json"), j.dump(2) + "\n");
}

} // namespace cli_detail

namespace cli_detail {

inline void warn_if_snapped(const Grid& grid, const Params& params) {
    const KernelStencil st = make_stencil(grid, params);
    if (st.snap_warning)
        std::cerr << "warning: interaction radius snapped to " << format_float(st.snapped_radius)
                  << " (" << st.radius_cells << " cells)\n";
}

} // namespace cli_detail

inline void cmd_solve(const RunConfig& c) {
    using namespace cli_detail;
    WallTimer timer;
    const Params params = params_from(c);
    const Grid grid = grid_from(c);
    warn_if_snapped(grid, params);
    const DensityField rho0 = initial_condition(c, grid);
    const SolverConfig sc = solver_config_from(c, grid, params, c.t_end);
    const Trajectory traj = solve(rho0, params, sc);
    ensure_out_dir(c);
    write_text_file(out_path(c, "diagnostics.csv"), diagnostics_csv(traj));
    write_text_file(out_path(c, "final_field.csv"), field_csv(traj.final_field()));
    const Classification cls = classify_state(traj.final_field(), params);
    nlohmann::json extra;
    extra["classification"] = cls.uniform ? "Uniform" : "Clustered";
    extra["cluster_count"] = cls.cluster_count;
    extra["effective_dt"] = sc.t_end / detail::step_count(sc.t_end, sc.dt);
    write_meta(c, "solve", timer.seconds(), {"diagnostics.csv", "final_field.csv"}, extra);
}

inline void cmd_picard(const RunConfig& c) {
    using namespace cli_detail;
    WallTimer timer;
    const Params params = params_from(c);
    const Grid grid = grid_from(c);
    warn_if_snapped(grid, params);
    const DensityField rho0 = initial_condition(c, grid);
    const SolverConfig sc = solver_config_from(c, grid, params, c.t_end);
    const PicardResult result = picard_solve(rho0, params, sc);
    ensure_out_dir(c);
    write_text_file(out_path(c, "diagnostics.csv"), diagnostics_csv(result.trajectory));
    write_text_file(out_path(c, "final_field.csv"), field_csv(result.trajectory.final_field()));
    std::string res = "iteration,residual\n";
    for (std::size_t i = 0; i < result.residuals.size(); ++i)
        res += std::to_string(i + 1) + "," + format_float(result.residuals[i]) + "\n";
    write_text_file(out_path(c, "residuals.csv"), res);
    nlohmann::json extra;
    extra["iterations"] = result.iterations;
    write_meta(c, "picard", timer.seconds(),
               {"diagnostics.csv", "final_field.csv", "residuals.csv"}, extra);
}

inline void cmd_particles(const RunConfig& c) {
    using namespace cli_detail;
    WallTimer timer;
    const Params params = params_from(c);
    const Grid grid = grid_from(c);
    const DensityField rho0 = initial_condition(c, grid);
    int stride = c.snapshot_stride;
    if (stride <= 0) {
        const int steps =
            std::max(1, static_cast<int>(std::ceil(c.t_end / c.particle_dt - 1e-9)));
        stride = std::max(1, steps / 20);
    }
    const ParticleRun run =
        run_particles(rho0, c.n_particles, params, c.particle_dt, c.t_end, c.seed, stride);
    ensure_out_dir(c);
    std::string hist = "t,x,rho\n";
    for (std::size_t s = 0; s < run.snapshots.size(); ++s) {
        const DensityField& f = run.snapshots[s];
        for (int j = 0; j < f.grid.m; ++j) {
            hist += format_float(run.times[s]);
            hist += ',';
            hist += format_float(f.grid.node(j));
            hist += ',';
            hist += format_float(f.values[static_cast<std::size_t>(j)]);
            hist += '\n';
        }
    }
    write_text_file(out_path(c, "histograms.csv"), hist);
    std::vector<std::string> outputs = {"histograms.csv"};
    if (c.n_particles <= 256) {
        // small ensembles also get raw trajectories
        std::string pos = "t,agent,x\n";
        for (std::size_t s = 0; s < run.position_snapshots.size(); ++s) {
            for (std::size_t i = 0; i < run.position_snapshots[s].size(); ++i) {
                pos += format_float(run.times[s]);
                pos += ',';
                pos += std::to_string(i);
                pos += ',';
                pos += format_float(run.position_snapshots[s][i]);
                pos += '\n';
            }
        }
        write_text_file(out_path(c, "positions.csv"), pos);
        outputs.push_back("positions.csv");
    }
    write_meta(c, "particles", timer.seconds(), outputs);
}

inline void cmd_dispersion(const RunConfig& c) {
    using namespace cli_detail;
    WallTimer timer;
    const Params params = params_from(c);
    if (c.dispersion_modes < 1) throw config_error("config: dispersion_modes must be >= 1");
    std::string s = "mode,k,lambda\n";
    for (int m = 1; m <= c.dispersion_modes; ++m) {
        const double k = static_cast<double>(m) * pi_const / params.ell;
        s += std::to_string(m);
        s += ',';
        s += format_float(k);
        s += ',';
        s += format_float(dispersion_growth_rate(k, params));
        s += '\n';
    }
    ensure_out_dir(c);
    write_text_file(out_path(c, "dispersion.csv"), s);
    write_meta(c, "dispersion", timer.seconds(), {"dispersion.csv"});
}

inline std::string cmd_threshold_report(const RunConfig& c) {
    const Params params = cli_detail::params_from(c);
    const StabilityReport rep = stability_report(params);
    std::string s;
    s += "sigma2_global=" + format_float7(rep.sigma2_global) + "\n";
    s += "sigma2_linear=" + format_float7(rep.sigma2_linear) + "\n";
    if (params.sigma > 0.0)
        s += "kappa_bound=" + format_float7(rep.kappa_bound) + "\n";
    s += std::string("regime=") + regime_name(rep.regime) + "\n";
    return s;
}

inline void cmd_threshold(const RunConfig& c, std::ostream& out) {
    using namespace cli_detail;
    WallTimer timer;
    const Params params = params_from(c);
    const StabilityReport rep = stability_report(params);
    out << cmd_threshold_report(c);
    ensure_out_dir(c);
    std::string s = "ell,radius,sigma2,sigma2_global,sigma2_linear,kappa_bound,regime\n";
    s += format_float(c.ell) + "," + format_float(c.radius) + "," + format_float(c.sigma2) +
         "," + format_float(rep.sigma2_global) + "," + format_float(rep.sigma2_linear) + "," +
         (params.sigma > 0.0 ? format_float(rep.kappa_bound) : std::string("nan")) + "," +
         regime_name(rep.regime) + "\n";
    write_text_file(out_path(c, "threshold.csv"), s);
    write_meta(c, "threshold", timer.seconds(), {"threshold.csv"});
}

struct SweepRecord {
    double ell = 0.0;
    double radius = 0.0;
    double sigma2 = 0.0;
    double final_psi_l2 = 0.0;
    std::string classification;
    int cluster_count = 0;
    double fitted_rate = 0.0;
    double sigma2_global = 0.0;
    double sigma2_linear = 0.0;
    double runtime_seconds = 0.0;
};

namespace cli_detail {

inline SweepRecord sweep_point(const RunConfig& c, double radius, double sigma2,
                               std::uint64_t point_seed) {
    WallTimer timer;
    SweepRecord rec;
    rec.ell = c.ell;
    rec.radius = radius;
    rec.sigma2 = sigma2;
    const Params params = make_params_sigma2(c.ell, radius, sigma2);
    rec.sigma2_global = global_stability_threshold(params);
    rec.sigma2_linear = linear_instability_threshold(params);
    try {
        const Grid grid = make_grid(c.ell, c.grid_m);
        const DensityField rho0 = perturbed_uniform(grid, c.sweep_amplitude, 4, point_seed);
        SolverConfig sc = default_solver_config(grid, params, c.sweep_t_end,
                                                parse_scheme(c.scheme));
        const Trajectory traj = solve(rho0, params, sc);
        rec.final_psi_l2 = traj.diagnostics.back().psi_l2;
        const Classification cls = classify_state(traj.final_field(), params);
        rec.classification = cls.uniform ? "Uniform" : "Clustered";
        rec.cluster_count = cls.cluster_count;
        try {
            std::vector<double> t, v;
            for (const auto& d : traj.diagnostics) {
                t.push_back(d.time);
                v.push_back(d.psi_l2 * d.psi_l2);
            }
            const double lo = std::min(0.5, 0.5 * c.sweep_t_end);
            rec.fitted_rate = fit_exponential_decay(t, v, lo, c.sweep_t_end).rate;
        } catch (const config_error&) {
            rec.fitted_rate = std::numeric_limits<double>::quiet_NaN();
        }
    } catch (const numerical_error&) {
        rec.classification = "failed";
        rec.final_psi_l2 = std::numeric_limits<double>::quiet_NaN();
        rec.fitted_rate = std::numeric_limits<double>::quiet_NaN();
    }
    rec.runtime_seconds = c.timings ? timer.seconds() : 0.0;
    return rec;
}

} // namespace cli_detail

/// Phase-diagram sweep over the (radius, sigma2) grid. Points are computed by
/// a fixed-size worker pool and emitted in deterministic radius-major order;
/// per-point seeds depend only on the master seed and the point index, so the
/// CSV bytes are identical for any worker count. runtime_seconds is written
/// as 0 unless `timings` is set, keeping the data files byte-reproducible.
inline std::vector<SweepRecord> run_sweep(const RunConfig& c) {
    if (c.sweep_radius.empty() || c.sweep_sigma2.empty())
        throw config_error("config: sweep needs nonempty radius and sigma2 lists");
    // validate every grid point up front; workers must not throw
    for (double r : c.sweep_radius)
        for (double s2 : c.sweep_sigma2)
            (void)make_params_sigma2(c.ell, r, s2);
    (void)make_grid(c.ell, c.grid_m);
    (void)parse_scheme(c.scheme);
    const std::size_t n_points = c.sweep_radius.size() * c.sweep_sigma2.size();
    std::vector<SweepRecord> records(n_points);
    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, c.workers);
    auto work = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= n_points) return;
            const std::size_t ir = idx / c.sweep_sigma2.size();
            const std::size_t is = idx % c.sweep_sigma2.size();
            const std::uint64_t point_seed =
                detail::splitmix64(c.seed ^ (0x51a7b39cd104f2e1ull + idx));
            records[idx] =
                cli_detail::sweep_point(c, c.sweep_radius[ir], c.sweep_sigma2[is], point_seed);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return records;
}

inline std::string sweep_csv(const std::vector<SweepRecord>& records) {
    std::string s = "ell,radius,sigma2,final_psi_l2,classification,cluster_count,fitted_rate,"
                    "sigma2_global,sigma2_linear,runtime_seconds\n";
    for (const auto& r : records) {
        s += format_float(r.ell) + "," + format_float(r.radius) + "," + format_float(r.sigma2) +
             "," + format_float(r.final_psi_l2) + "," + r.classification + "," +
             std::to_string(r.cluster_count) + "," + format_float(r.fitted_rate) + "," +
             format_float(r.sigma2_global) + "," + format_float(r.sigma2_linear) + "," +
             format_float(r.runtime_seconds) + "\n";
    }
    return s;
}

inline std::string threshold_curves_csv(const RunConfig& c) {
    double rmin = c.sweep_radius.front(), rmax = c.sweep_radius.front();
    for (double r : c.sweep_radius) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    std::string s = "radius,sigma2_global,sigma2_linear\n";
    const int samples = 101;
    for (int i = 0; i < samples; ++i) {
        const double r = rmin + (rmax - rmin) * static_cast<double>(i) /
                                    static_cast<double>(samples - 1);
        const Params p = make_params_sigma2(c.ell, r, 1.0);
        s += format_float(r) + "," + format_float(global_stability_threshold(p)) + "," +
             format_float(linear_instability_threshold(p)) + "\n";
    }
    return s;
}

inline void cmd_sweep(const RunConfig& c) {
    using namespace cli_detail;
    WallTimer timer;
    const std::vector<SweepRecord> records = run_sweep(c);
    ensure_out_dir(c);
    write_text_file(out_path(c, "sweep.csv"), sweep_csv(records));
    write_text_file(out_path(c, "curves.csv"), threshold_curves_csv(c));
    write_meta(c, "sweep", timer.seconds(), {"sweep.csv", "curves.csv"});
}

} // namespace hklab

#endif
