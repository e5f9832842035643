#ifndef HKLAB_SOLVER_HPP
#define HKLAB_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hklab/core.hpp"
#include "hklab/kernel.hpp"

namespace hklab {

/// Time discretizations: implicit-Euler diffusion with lagged explicit drift,
/// or Crank-Nicolson diffusion with second-order extrapolated (AB2) drift.
enum class Scheme { imex_be, imex_cn };

inline const char* scheme_name(Scheme s) {
    return s == Scheme::imex_be ? "imex_be" : "imex_cn";
}

inline Scheme parse_scheme(const std::string& s) {
    if (s == "imex_be") return Scheme::imex_be;
    if (s == "imex_cn") return Scheme::imex_cn;
    throw config_error("unknown scheme '" + s + "' (expected imex_be or imex_cn)");
}

struct SolverConfig {
    double dt = 0.0;
    double t_end = 0.0;
    Scheme scheme = Scheme::imex_be;
    double picard_tol = 1e-8;
    int picard_max_iter = 64;
    int record_every = 1;
};

inline void validate_solver_config(const SolverConfig& c) {
    if (!(c.dt > 0.0)) throw config_error("solver: dt must be positive");
    if (!(c.t_end >= c.dt)) throw config_error("solver: t_end must be at least dt");
    if (!(c.picard_tol > 0.0)) throw config_error("solver: picard_tol must be positive");
    if (c.picard_max_iter < 1) throw config_error("solver: picard_max_iter must be >= 1");
    if (c.record_every < 1) throw config_error("solver: record_every must be >= 1");
}

/// Stable default step size. The diffusion solve is implicit, so dt is set by
/// the explicit drift alone: the transport CFL dt <= h/(4R) (using the bound
/// max|G| <= 2R) and the von Neumann limit dt <= 2D/v^2 for centered advection
/// fluxes stabilized by implicit diffusion, again with v = 2R and a 0.5 margin.
inline double default_dt(const Grid& grid, const Params& params) {
    const double R = params.radius;
    double dt = 0.5 * grid.h / (2.0 * R);
    const double s2 = params.sigma2();
    if (s2 > 0.0) dt = std::min(dt, s2 / (8.0 * R * R));
    return dt;
}

inline SolverConfig default_solver_config(const Grid& grid, const Params& params,
                                          double t_end, Scheme scheme = Scheme::imex_be) {
    SolverConfig c;
    c.dt = std::min(default_dt(grid, params), t_end);
    c.t_end = t_end;
    c.scheme = scheme;
    const double steps = std::ceil(t_end / c.dt);
    c.record_every = std::max(1, static_cast<int>(steps / 400.0));
    return c;
}

struct DiagnosticsRecord {
    double time = 0.0;
    double mass = 0.0;
    double min_value = 0.0;
    double l1 = 0.0;
    double psi_l2 = 0.0;
    double psi_h1 = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityField> fields;
    std::vector<DiagnosticsRecord> diagnostics;

    const DensityField& final_field() const { return fields.back(); }
    double final_time() const { return times.back(); }
};

namespace detail {

/// Factorization of the periodic tridiagonal system
///   (1 + 2*beta) x_j - beta (x_{j-1} + x_{j+1}) = d_j  (indices mod n)
/// via Thomas elimination plus a Sherman-Morrison corner correction.
/// The matrix is strictly diagonally dominant for beta >= 0.
class PeriodicDiffusionSolve {
public:
    PeriodicDiffusionSolve() = default;

    PeriodicDiffusionSolve(int n, double beta) : n_(n), beta_(beta) {
        if (beta_ == 0.0) return;
        const double b = 1.0 + 2.0 * beta_;
        const double gamma = -b;
        diag_.assign(static_cast<std::size_t>(n_), b);
        diag_[0] = b - gamma;
        diag_[static_cast<std::size_t>(n_ - 1)] = b - beta_ * beta_ / gamma;
        cp_.assign(static_cast<std::size_t>(n_), 0.0);
        cp_[0] = -beta_ / diag_[0];
        denom_.assign(static_cast<std::size_t>(n_), diag_[0]);
        for (int i = 1; i < n_; ++i) {
            const double den = diag_[static_cast<std::size_t>(i)] +
                               beta_ * cp_[static_cast<std::size_t>(i - 1)];
            denom_[static_cast<std::size_t>(i)] = den;
            cp_[static_cast<std::size_t>(i)] = -beta_ / den;
        }
        // z = T^{-1} u with u = (gamma, 0, ..., 0, -beta)
        z_.assign(static_cast<std::size_t>(n_), 0.0);
        z_[0] = gamma;
        z_[static_cast<std::size_t>(n_ - 1)] = -beta_;
        thomas(z_);
        vz_ = z_[0] - (beta_ / gamma) * z_[static_cast<std::size_t>(n_ - 1)];
    }

    void solve(std::vector<double>& d) const {
        if (beta_ == 0.0) return;
        thomas(d);
        const double gamma = -(1.0 + 2.0 * beta_);
        const double vy = d[0] - (beta_ / gamma) * d[static_cast<std::size_t>(n_ - 1)];
        const double factor = vy / (1.0 + vz_);
        for (int i = 0; i < n_; ++i)
            d[static_cast<std::size_t>(i)] -= factor * z_[static_cast<std::size_t>(i)];
    }

private:
    void thomas(std::vector<double>& d) const {
        d[0] /= denom_[0];
        for (int i = 1; i < n_; ++i)
            d[static_cast<std::size_t>(i)] =
                (d[static_cast<std::size_t>(i)] + beta_ * d[static_cast<std::size_t>(i - 1)]) /
                denom_[static_cast<std::size_t>(i)];
        for (int i = n_ - 2; i >= 0; --i)
            d[static_cast<std::size_t>(i)] -=
                cp_[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i + 1)];
    }

    int n_ = 0;
    double beta_ = 0.0;
    double vz_ = 0.0;
    std::vector<double> diag_, cp_, denom_, z_;
};

/// One IMEX step of the linear problem rho_t - (sigma^2/2) rho_xx = (rho G)_x
/// with a supplied drift field G. The drift flux is conservative centered
/// differencing, so the discrete mass telescopes exactly.
class ImexStepper {
public:
    ImexStepper(const Grid& grid, const Params& params, double dt, Scheme scheme,
                bool clip_negative)
        : grid_(grid), params_(params), dt_(dt), scheme_(scheme),
          clip_negative_(clip_negative) {
        const double kappa = 0.5 * params.sigma2();
        const double theta = (scheme == Scheme::imex_cn) ? 0.5 : 1.0;
        beta_ = theta * dt * kappa / (grid.h * grid.h);
        explicit_beta_ = (scheme == Scheme::imex_cn) ? beta_ : 0.0;
        diffusion_ = PeriodicDiffusionSolve(grid.m, beta_);
        flux_.resize(static_cast<std::size_t>(grid.m));
        drift_.resize(static_cast<std::size_t>(grid.m));
        prev_drift_.resize(static_cast<std::size_t>(grid.m));
    }

    /// Advance rho by one step; g is the frozen/lagged drift field G.
    DensityField step(const DensityField& rho, const DensityField& g) {
        require_same_grid(rho, grid_, "step");
        require_same_grid(g, grid_, "step drift");
        const int m = grid_.m;
        const double h = grid_.h;

        double gmax = 0.0;
        for (double v : g.values) gmax = std::max(gmax, std::abs(v));
        if (dt_ * gmax > h)
            throw numerical_error("cfl violation: dt*max|G| exceeds h");

        for (int j = 0; j < m; ++j)
            flux_[static_cast<std::size_t>(j)] =
                rho.values[static_cast<std::size_t>(j)] * g.values[static_cast<std::size_t>(j)];
        for (int j = 0; j < m; ++j) {
            const int jp = (j + 1 == m) ? 0 : j + 1;
            const int jm = (j == 0) ? m - 1 : j - 1;
            drift_[static_cast<std::size_t>(j)] =
                (flux_[static_cast<std::size_t>(jp)] - flux_[static_cast<std::size_t>(jm)]) /
                (2.0 * h);
        }

        DensityField out(grid_);
        const bool ab2 = (scheme_ == Scheme::imex_cn) && have_prev_;
        for (int j = 0; j < m; ++j) {
            const std::size_t sj = static_cast<std::size_t>(j);
            double rhs = rho.values[sj];
            rhs += ab2 ? dt_ * (1.5 * drift_[sj] - 0.5 * prev_drift_[sj])
                       : dt_ * drift_[sj];
            if (explicit_beta_ != 0.0) {
                const int jp = (j + 1 == m) ? 0 : j + 1;
                const int jm = (j == 0) ? m - 1 : j - 1;
                rhs += explicit_beta_ *
                       (rho.values[static_cast<std::size_t>(jp)] - 2.0 * rho.values[sj] +
                        rho.values[static_cast<std::size_t>(jm)]);
            }
            out.values[sj] = rhs;
        }
        diffusion_.solve(out.values);

        if (scheme_ == Scheme::imex_cn) {
            prev_drift_.swap(drift_);
            have_prev_ = true;
        }

        postprocess(out);
        return out;
    }

private:
    void postprocess(DensityField& out) const {
        double mn = 0.0;
        bool finite = true;
        for (double v : out.values) {
            if (!std::isfinite(v)) { finite = false; break; }
            mn = std::min(mn, v);
        }
        if (!finite)
            throw numerical_error("blow-up: non-finite field values");
        if (!clip_negative_) return;
        if (mn < -1e-8)
            throw numerical_error("blow-up: density undershoot " + std::to_string(mn));
        if (mn < 0.0) {
            // clip rounding-level undershoots, then restore the pre-clip mass
            const double mass0 = total_mass(out);
            for (double& v : out.values) v = std::max(v, 0.0);
            const double mass1 = total_mass(out);
            if (mass1 > 0.0) {
                const double s = mass0 / mass1;
                for (double& v : out.values) v *= s;
            }
        }
    }

    Grid grid_;
    Params params_;
    double dt_ = 0.0;
    Scheme scheme_ = Scheme::imex_be;
    bool clip_negative_ = true;
    double beta_ = 0.0;
    double explicit_beta_ = 0.0;
    bool have_prev_ = false;
    PeriodicDiffusionSolve diffusion_;
    std::vector<double> flux_, drift_, prev_drift_;
};

inline DiagnosticsRecord make_record(double t, const DensityField& f, double uniform_level) {
    const int m = f.grid.m;
    const double h = f.grid.h;
    DiagnosticsRecord rec;
    rec.time = t;
    rec.mass = total_mass(f);
    rec.min_value = min_value(f);
    double l1 = 0.0, p2 = 0.0, h1 = 0.0;
    for (int j = 0; j < m; ++j) {
        const double v = f.values[static_cast<std::size_t>(j)];
        const double psi = v - uniform_level;
        l1 += std::abs(v);
        p2 += psi * psi;
        const int jp = (j + 1 == m) ? 0 : j + 1;
        const int jm = (j == 0) ? m - 1 : j - 1;
        const double dx = (f.values[static_cast<std::size_t>(jp)] -
                           f.values[static_cast<std::size_t>(jm)]) /
                          (2.0 * h);
        h1 += dx * dx;
    }
    rec.l1 = h * l1;
    rec.psi_l2 = std::sqrt(h * p2);
    rec.psi_h1 = std::sqrt(h * h1);
    return rec;
}

inline void validate_initial_density(const DensityField& rho0) {
    if (!all_finite(rho0))
        throw config_error("initial density has non-finite values");
    if (min_value(rho0) < -1e-12)
        throw config_error("initial density must be nonnegative");
    if (std::abs(total_mass(rho0) - 1.0) > 1e-8)
        throw config_error("initial density must have unit mass");
}

/// Number of steps landing exactly on t_end (dt is nudged down if needed).
inline int step_count(double t_end, double dt) {
    return std::max(1, static_cast<int>(std::ceil(t_end / dt - 1e-9)));
}

} // namespace detail

/// One step of the linear parabolic problem with frozen drift field g:
/// implicit diffusion, explicit conservative drift flux.
inline DensityField step_linear_frozen(const DensityField& rho, const DensityField& g_field,
                                       const Params& params, double dt,
                                       Scheme scheme = Scheme::imex_be) {
    if (!(dt > 0.0)) throw config_error("step: dt must be positive");
    detail::ImexStepper stepper(rho.grid, params, dt, scheme, true);
    return stepper.step(rho, g_field);
}

/// One step of the full equation; the nonlinearity is lagged one step.
inline DensityField step_imex(const DensityField& rho, const Params& params, double dt,
                              Scheme scheme = Scheme::imex_be) {
    return step_linear_frozen(rho, apply_g(rho, params), params, dt, scheme);
}

/// Time integration of the full nonlocal equation.
inline Trajectory solve(const DensityField& rho0, const Params& params,
                        const SolverConfig& config) {
    validate_solver_config(config);
    detail::validate_initial_density(rho0);
    const Grid grid = rho0.grid;
    const KernelStencil stencil = make_stencil(grid, params);
    const double uniform_level = 1.0 / (2.0 * grid.ell);

    const int n = detail::step_count(config.t_end, config.dt);
    const double dt = config.t_end / static_cast<double>(n);
    detail::ImexStepper stepper(grid, params, dt, config.scheme, true);

    Trajectory traj;
    DensityField rho = rho0;
    traj.times.push_back(0.0);
    traj.fields.push_back(rho);
    traj.diagnostics.push_back(detail::make_record(0.0, rho, uniform_level));
    for (int i = 1; i <= n; ++i) {
        rho = stepper.step(rho, apply_g(rho, stencil));
        if (i % config.record_every == 0 || i == n) {
            const double t = dt * static_cast<double>(i);
            traj.times.push_back(t);
            traj.fields.push_back(rho);
            traj.diagnostics.push_back(detail::make_record(t, rho, uniform_level));
        }
    }
    return traj;
}

struct PicardResult {
    Trajectory trajectory;
    int iterations = 0;
    std::vector<double> residuals; // integral_0^T ||rho_n - rho_{n-1}||_1 dt per iteration
};

/// Error carrying the last residual when the Picard iteration hits its cap.
struct picard_limit_error : numerical_error {
    picard_limit_error(double residual, int iters)
        : numerical_error("picard: no convergence after " + std::to_string(iters) +
                          " iterations, residual " + std::to_string(residual)),
          last_residual(residual), iterations(iters) {}
    double last_residual;
    int iterations;
};

/// Frozen-drift iteration: each pass solves the linear problem on [0, t_end]
/// with the drift taken from the previous iterate's full trajectory; the 0th
/// iterate is the initial datum held constant in time. Stops when the
/// L1-in-time L1-in-space increment drops below picard_tol.
inline PicardResult picard_solve(const DensityField& rho0, const Params& params,
                                 const SolverConfig& config) {
    validate_solver_config(config);
    detail::validate_initial_density(rho0);
    const Grid grid = rho0.grid;
    const KernelStencil stencil = make_stencil(grid, params);
    const double uniform_level = 1.0 / (2.0 * grid.ell);

    const int n = detail::step_count(config.t_end, config.dt);
    const double dt = config.t_end / static_cast<double>(n);
    const std::size_t sm = static_cast<std::size_t>(grid.m);

    // previous iterate's states at every step, rho_{n-1}(t_m), m = 0..n
    std::vector<std::vector<double>> prev(static_cast<std::size_t>(n + 1), rho0.values);
    std::vector<std::vector<double>> cur(static_cast<std::size_t>(n + 1));
    std::vector<double> residuals;

    DensityField frozen(grid);
    for (int iter = 1; iter <= config.picard_max_iter; ++iter) {
        detail::ImexStepper stepper(grid, params, dt, config.scheme, true);
        DensityField rho = rho0;
        cur[0] = rho0.values;
        double residual = 0.0;
        for (int m = 1; m <= n; ++m) {
            frozen.values = prev[static_cast<std::size_t>(m - 1)];
            rho = stepper.step(rho, apply_g(frozen, stencil));
            cur[static_cast<std::size_t>(m)] = rho.values;
            double l1 = 0.0;
            const std::vector<double>& p = prev[static_cast<std::size_t>(m)];
            for (std::size_t j = 0; j < sm; ++j)
                l1 += std::abs(rho.values[j] - p[j]);
            residual += dt * grid.h * l1;
        }
        residuals.push_back(residual);
        prev.swap(cur);
        if (residual < config.picard_tol) {
            Trajectory traj;
            for (int m = 0; m <= n; ++m) {
                if (m % config.record_every == 0 || m == n) {
                    const double t = dt * static_cast<double>(m);
                    DensityField f(grid, prev[static_cast<std::size_t>(m)]);
                    traj.times.push_back(t);
                    traj.diagnostics.push_back(detail::make_record(t, f, uniform_level));
                    traj.fields.push_back(std::move(f));
                }
            }
            return PicardResult{std::move(traj), iter, std::move(residuals)};
        }
    }
    throw picard_limit_error(residuals.back(), config.picard_max_iter);
}

/// Evolution of the fluctuation psi about the uniform state under the
/// linearized dynamics psi_t - (sigma^2/2) psi_xx = (1/(2*ell)) (G_psi)_x.
/// The drift uses the same conservative flux differencing as the nonlinear
/// solver; no nonnegativity processing is applied (psi is signed).
inline Trajectory solve_linearized(const DensityField& psi0, const Params& params,
                                   const SolverConfig& config) {
    validate_solver_config(config);
    if (!all_finite(psi0)) throw config_error("initial fluctuation has non-finite values");
    const Grid grid = psi0.grid;
    const KernelStencil stencil = make_stencil(grid, params);
    const double level = 1.0 / (2.0 * grid.ell);
    const int m = grid.m;
    const double h = grid.h;

    const int n = detail::step_count(config.t_end, config.dt);
    const double dt = config.t_end / static_cast<double>(n);
    const double kappa = 0.5 * params.sigma2();
    const double theta = (config.scheme == Scheme::imex_cn) ? 0.5 : 1.0;
    const double beta = theta * dt * kappa / (h * h);
    const double explicit_beta = (config.scheme == Scheme::imex_cn) ? beta : 0.0;
    detail::PeriodicDiffusionSolve diffusion(m, beta);

    Trajectory traj;
    DensityField psi = psi0;
    std::vector<double> drift(static_cast<std::size_t>(m)), prev_drift;
    traj.times.push_back(0.0);
    traj.fields.push_back(psi);
    traj.diagnostics.push_back(detail::make_record(0.0, psi, 0.0));
    for (int i = 1; i <= n; ++i) {
        const DensityField g = apply_g(psi, stencil);
        for (int j = 0; j < m; ++j) {
            const int jp = (j + 1 == m) ? 0 : j + 1;
            const int jm = (j == 0) ? m - 1 : j - 1;
            drift[static_cast<std::size_t>(j)] =
                level *
                (g.values[static_cast<std::size_t>(jp)] - g.values[static_cast<std::size_t>(jm)]) /
                (2.0 * h);
        }
        DensityField next(grid);
        const bool ab2 = (config.scheme == Scheme::imex_cn) && !prev_drift.empty();
        for (int j = 0; j < m; ++j) {
            const std::size_t sj = static_cast<std::size_t>(j);
            double rhs = psi.values[sj];
            rhs += ab2 ? dt * (1.5 * drift[sj] - 0.5 * prev_drift[sj]) : dt * drift[sj];
            if (explicit_beta != 0.0) {
                const int jp = (j + 1 == m) ? 0 : j + 1;
                const int jm = (j == 0) ? m - 1 : j - 1;
                rhs += explicit_beta *
                       (psi.values[static_cast<std::size_t>(jp)] - 2.0 * psi.values[sj] +
                        psi.values[static_cast<std::size_t>(jm)]);
            }
            next.values[sj] = rhs;
        }
        diffusion.solve(next.values);
        if (!all_finite(next))
            throw numerical_error("blow-up: non-finite fluctuation values");
        if (config.scheme == Scheme::imex_cn) prev_drift = drift;
        psi = std::move(next);
        if (i % config.record_every == 0 || i == n) {
            const double t = dt * static_cast<double>(i);
            traj.times.push_back(t);
            traj.fields.push_back(psi);
            traj.diagnostics.push_back(detail::make_record(t, psi, 0.0));
        }
    }
    return traj;
}

} // namespace hklab

#endif
