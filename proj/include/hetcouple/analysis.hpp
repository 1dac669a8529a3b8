#pragma once
/**
 * @file analysis.hpp
 * @brief Discrete norms, coupled-vs-reference error studies and the
 * model-reduction error bound  M * eps * sqrt(1 + delta^2),
 * delta = L1 / (L1 - L0).
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hetcouple/schwarz.hpp"

namespace hetcouple {

// ---------------------------------------------------------------------------
// norms

/// Trapezoidal quadrature weight (dual-cell area) of every node.
inline std::vector<double> node_weights(const Domain2D& d) {
    const Grid2D& g = d.grid();
    std::vector<double> w(g.node_count(), 0.0);
    const double q = 0.25 * g.hx * g.hz;
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (!d.cell_active(i, j)) continue;
            w[g.index(i, j)] += q;
            w[g.index(i + 1, j)] += q;
            w[g.index(i, j + 1)] += q;
            w[g.index(i + 1, j + 1)] += q;
        }
    return w;
}

namespace detail {

/// Derivative along one grid direction: central where possible, else second-order one-sided.
inline double directional_derivative(const Field2D& f, int i, int j, int di, int dj, double h) {
    const Grid2D& g = f.grid();
    const bool fwd = g.node_active(i + di, j + dj);
    const bool bwd = g.node_active(i - di, j - dj);
    if (fwd && bwd) return (f.at(i + di, j + dj) - f.at(i - di, j - dj)) / (2.0 * h);
    if (fwd) {
        if (g.node_active(i + 2 * di, j + 2 * dj))
            return (-3.0 * f.at(i, j) + 4.0 * f.at(i + di, j + dj) - f.at(i + 2 * di, j + 2 * dj)) / (2.0 * h);
        return (f.at(i + di, j + dj) - f.at(i, j)) / h;
    }
    if (bwd) {
        if (g.node_active(i - 2 * di, j - 2 * dj))
            return (3.0 * f.at(i, j) - 4.0 * f.at(i - di, j - dj) + f.at(i - 2 * di, j - 2 * dj)) / (2.0 * h);
        return (f.at(i, j) - f.at(i - di, j - dj)) / h;
    }
    return 0.0;
}

}  // namespace detail

struct FieldNorms {
    double h1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
};

/// Discrete H1 (values plus gradient), L2 and max norms over the active nodes.
inline FieldNorms norms(const Field2D& f) {
    const Domain2D& d = *f.domain;
    const Grid2D& g = d.grid();
    const auto w = node_weights(d);
    double s0 = 0.0, s1 = 0.0, m = 0.0;
    for (int j = 0; j <= g.nz; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            if (!g.node_active(i, j)) continue;
            const double v = f.at(i, j);
            const double dx = detail::directional_derivative(f, i, j, 1, 0, g.hx);
            const double dz = detail::directional_derivative(f, i, j, 0, 1, g.hz);
            const double wt = w[g.index(i, j)];
            s0 += wt * v * v;
            s1 += wt * (dx * dx + dz * dz);
            m = std::max(m, std::abs(v));
        }
    return {std::sqrt(s0 + s1), std::sqrt(s0), m};
}

inline Field2D difference(const Field2D& a, const Field2D& b) {
    if (a.values.size() != b.values.size() || a.grid().nx != b.grid().nx || a.grid().nz != b.grid().nz)
        throw std::invalid_argument("fields live on different grids");
    Field2D out(a.domain);
    for (std::size_t n = 0; n < out.values.size(); ++n)
        if (out.grid().active[n]) out.values[n] = a.values[n] - b.values[n];
    return out;
}

struct RelativeErrors {
    double h1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    bool absolute = false;  ///< reference norm vanished, absolute norms returned
};

/// ||u_ref - u|| / ||u_ref|| in the three norms.
inline RelativeErrors relative_errors(const Field2D& u_ref, const Field2D& u) {
    const auto e = norms(difference(u_ref, u));
    const auto r = norms(u_ref);
    if (r.h1 == 0.0) return {e.h1, e.l2, e.linf, true};
    return {e.h1 / r.h1, r.l2 > 0 ? e.l2 / r.l2 : e.l2, r.linf > 0 ? e.linf / r.linf : e.linf, false};
}

inline RelativeErrors h1_error(const Field2D& u_ref, const Field2D& u) { return relative_errors(u_ref, u); }

// ---------------------------------------------------------------------------
// error bound

/// delta = L1 / (L1 - L0); empty outside the validity region L0 >= L1.
inline std::optional<double> bound_delta(double L0, double L1) {
    if (!(L1 > 0) || L0 >= L1) return std::nullopt;
    return L1 / (L1 - L0);
}

/// M eps sqrt(1 + delta^2); empty ("out of validity") when delta is not finite.
inline std::optional<double> bound_rhs(double epsilon, std::optional<double> delta, double M) {
    if (!delta || !std::isfinite(*delta)) return std::nullopt;
    if (*delta < 1.0) throw std::invalid_argument("delta must be >= 1");
    if (!(M > 0)) throw std::invalid_argument("M must be positive");
    return M * epsilon * std::sqrt(1.0 + (*delta) * (*delta));
}

struct ErrorRow {
    std::string sweep_param;
    double sweep_value = 0.0;
    double L0 = 0.0;
    double rel_h1 = NAN;
    double rel_l2 = NAN;
    double rel_linf = NAN;
    std::optional<double> bound;  ///< filled after calibration
    std::optional<double> delta;  ///< empty when L0 >= L1
    double epsilon = NAN;         ///< H / L1 (bound convention)
    double epsilon_geom = NAN;    ///< H / L (sweep axis convention)
    int iterations = 0;
    double lambda = NAN;
    std::string failure;  ///< non-empty when the run failed

    bool ok() const { return failure.empty() && std::isfinite(rel_h1); }
};

struct ErrorReport {
    std::vector<ErrorRow> rows;
    std::optional<double> L1;
    std::optional<double> M;
};

/// M anchored so that the bound equals the measured H1 error at the smallest valid sweep value.
inline double calibrate_M(const ErrorReport& report) {
    const ErrorRow* anchor = nullptr;
    for (const auto& r : report.rows) {
        if (!r.ok() || !r.delta || !(r.epsilon > 0)) continue;
        if (!anchor || r.sweep_value < anchor->sweep_value) anchor = &r;
    }
    if (!anchor) throw std::invalid_argument("no row inside the validity region to calibrate M");
    const double d = *anchor->delta;
    return anchor->rel_h1 / (anchor->epsilon * std::sqrt(1.0 + d * d));
}

/// Calibrates M and fills the bound column (empty for rows outside the validity region).
inline void apply_bound(ErrorReport& report) {
    const double M = calibrate_M(report);
    report.M = M;
    for (auto& r : report.rows) r.bound = r.delta && r.epsilon > 0 ? bound_rhs(r.epsilon, r.delta, M) : std::nullopt;
}

// ---------------------------------------------------------------------------
// sweeps

namespace detail {

/// Runs f(0..n-1) on up to `jobs` threads; results land in index order.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& f) {
    const std::size_t workers = std::clamp<std::size_t>(jobs > 0 ? static_cast<std::size_t>(jobs) : 1, 1, std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) f(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace detail

struct SweepOptions {
    std::optional<double> L1;         ///< enables delta and the bound column
    std::optional<double> lambda;     ///< fixed lambda; default is lambda_opt per row
    double length = NAN;              ///< domain length L for epsilon_geom; default: x extent
    int jobs = 1;
};

namespace detail {

inline void fill_row(ErrorRow& row, const CouplingConfig& cfg, const Field2D& reference, const SweepOptions& o) {
    row.L0 = cfg.L0();
    row.lambda = cfg.lambda;
    const double H = cfg.H();
    const double L = std::isfinite(o.length) ? o.length : cfg.split.full.x_max() - cfg.split.full.x_min();
    row.epsilon_geom = H / L;
    if (o.L1) {
        row.epsilon = H / *o.L1;
        row.delta = bound_delta(cfg.L0(), *o.L1);
    }
    try {
        const auto s = schwarz_solve(cfg);
        row.iterations = static_cast<int>(s.trace.iterations());
        const auto e = relative_errors(restrict_to_omega2(reference, cfg.split), s.u2);
        row.rel_h1 = e.h1;
        row.rel_l2 = e.l2;
        row.rel_linf = e.linf;
    } catch (const NonConvergence& nc) {
        row.iterations = static_cast<int>(nc.partial().trace.iterations());
        row.failure = nc.what();
    } catch (const std::exception& ex) {
        row.failure = ex.what();
    }
}

inline Field2D reference_for(const CouplingConfig& cfg) {
    return solve_reference(std::make_shared<const Domain2D>(cfg.split.full), cfg.forcing, cfg.gamma1, cfg.gamma2,
                           cfg.kappa, cfg.solver);
}

}  // namespace detail

/// Coupled-vs-reference error on Omega_2 for each interface location.
/// Rows come back sorted by L0; a failed row records its error and the sweep continues.
inline ErrorReport sweep_interface(const CouplingConfig& base, std::vector<double> L0_values, const SweepOptions& o = {}) {
    if (L0_values.empty()) throw std::invalid_argument("empty interface sweep");
    std::sort(L0_values.begin(), L0_values.end());
    const Field2D reference = detail::reference_for(base);
    ErrorReport rep;
    rep.L1 = o.L1;
    rep.rows.resize(L0_values.size());
    detail::parallel_for(L0_values.size(), o.jobs, [&](std::size_t k) {
        ErrorRow& row = rep.rows[k];
        row.sweep_param = "L0";
        row.sweep_value = L0_values[k];
        row.L0 = L0_values[k];
        try {
            CouplingConfig cfg = base;
            cfg.split = split_at_interface(base.split.full, L0_values[k]);
            cfg.initial_guess.reset();
            cfg.lambda = o.lambda ? *o.lambda : lambda_opt(base.kappa, cfg.H(), L0_values[k]).value;
            detail::fill_row(row, cfg, reference, o);
        } catch (const std::exception& ex) {
            row.failure = ex.what();
        }
    });
    return rep;
}

/// Builds the coupled configuration for one aspect ratio eps = H / L.
using EpsilonBuilder = std::function<CouplingConfig(double epsilon)>;

/// Coupled-vs-reference error for each aspect ratio; each row solves its own reference.
inline ErrorReport sweep_epsilon(const EpsilonBuilder& build, std::vector<double> eps_values, const SweepOptions& o = {}) {
    if (eps_values.empty()) throw std::invalid_argument("empty epsilon sweep");
    std::sort(eps_values.begin(), eps_values.end());
    ErrorReport rep;
    rep.L1 = o.L1;
    rep.rows.resize(eps_values.size());
    detail::parallel_for(eps_values.size(), o.jobs, [&](std::size_t k) {
        ErrorRow& row = rep.rows[k];
        row.sweep_param = "epsilon";
        row.sweep_value = eps_values[k];
        try {
            CouplingConfig cfg = build(eps_values[k]);
            if (!o.lambda) cfg.lambda = lambda_opt(cfg.kappa, cfg.H(), cfg.L0()).value;
            else cfg.lambda = *o.lambda;
            detail::fill_row(row, cfg, detail::reference_for(cfg), o);
        } catch (const std::exception& ex) {
            row.failure = ex.what();
        }
    });
    return rep;
}

struct LambdaRun {
    double lambda = 0.0;
    bool is_optimal = false;
    double predicted_ratio = 0.0;  ///< contraction_ratio(lambda)
    IterationTrace trace;
    std::string failure;
};

/// Schwarz traces for each lambda (lambda_opt added when absent), sorted by lambda.
inline std::vector<LambdaRun> sweep_lambda(const CouplingConfig& base, std::vector<double> lambda_values, int jobs = 1) {
    for (double l : lambda_values)
        if (!(l > 0)) throw std::invalid_argument("lambda values must be positive");
    const double lopt = lambda_opt(base.kappa, base.H(), base.L0()).value;
    bool has_opt = false;
    for (double l : lambda_values) has_opt = has_opt || std::abs(l - lopt) <= 1e-12 * lopt;
    if (!has_opt) lambda_values.push_back(lopt);
    std::sort(lambda_values.begin(), lambda_values.end());
    std::vector<LambdaRun> runs(lambda_values.size());
    detail::parallel_for(runs.size(), jobs, [&](std::size_t k) {
        LambdaRun& r = runs[k];
        r.lambda = lambda_values[k];
        r.is_optimal = std::abs(r.lambda - lopt) <= 1e-12 * lopt;
        r.predicted_ratio = contraction_ratio(r.lambda, base.kappa, base.H(), base.L0());
        CouplingConfig cfg = base;
        cfg.lambda = r.lambda;
        try {
            r.trace = schwarz_solve(cfg).trace;
        } catch (const NonConvergence& nc) {
            r.trace = nc.partial().trace;
            r.failure = nc.what();
        } catch (const std::exception& ex) {
            r.failure = ex.what();
        }
    });
    return runs;
}

/// Smallest L0 whose error exceeds jump_factor times the median error of all smaller L0.
/// Needs at least three successful rows; returns empty when no jump is found.
inline std::optional<double> detect_threshold(const ErrorReport& report, double jump_factor = 5.0) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : report.rows)
        if (r.ok()) pts.emplace_back(r.L0, r.rel_h1);
    if (pts.size() < 3) return std::nullopt;
    std::sort(pts.begin(), pts.end());
    for (std::size_t k = 1; k < pts.size(); ++k) {
        std::vector<double> prev;
        for (std::size_t m = 0; m < k; ++m) prev.push_back(pts[m].second);
        std::sort(prev.begin(), prev.end());
        const std::size_t n = prev.size();
        const double median = n % 2 ? prev[n / 2] : 0.5 * (prev[n / 2 - 1] + prev[n / 2]);
        if (pts[k].second > jump_factor * median) return pts[k].first;
    }
    return std::nullopt;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// ||u2^{lambda1} - u2^{lambda2}||_H1(Omega_2) divided by ||u_ref||_H1(Omega_2).
inline double lambda_limit_distance(const CouplingConfig& base, double lambda1, double lambda2) {
    CouplingConfig c1 = base, c2 = base;
    c1.lambda = lambda1;
    c2.lambda = lambda2;
    const auto s1 = schwarz_solve(c1);
    const auto s2 = schwarz_solve(c2);
    const auto ref = restrict_to_omega2(detail::reference_for(base), base.split);
    const double r = norms(ref).h1;
    const double d = norms(difference(s1.u2, s2.u2)).h1;
    return r > 0 ? d / r : d;
}

}  // namespace hetcouple
