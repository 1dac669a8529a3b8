#pragma once
/**
 * @file verification.hpp
 * @brief Manufactured-solution refinement studies and the Schwarz checks
 * shared by the CLI verify command and the test suites.
 */

#include <cmath>
#include <string>
#include <vector>

#include "hetcouple/schwarz.hpp"

namespace hetcouple {

struct OrderStudy {
    std::vector<double> h;
    std::vector<double> errors;  ///< max-norm error at each level

    /// error(h) / error(h/2) for consecutive levels
    std::vector<double> ratios() const {
        std::vector<double> r;
        for (std::size_t k = 1; k < errors.size(); ++k) r.push_back(errors[k - 1] / errors[k]);
        return r;
    }
    double min_ratio() const {
        double m = INFINITY;
        for (double r : ratios()) m = std::min(m, r);
        return m;
    }
};

namespace manufactured {

// u = sinh(2x) + cos(3x) on (0, 1), a2 = 0.5, lambda = 1.5
inline double u1(double x) { return std::sinh(2 * x) + std::cos(3 * x); }
inline double du1(double x) { return 2 * std::cosh(2 * x) - 3 * std::sin(3 * x); }

inline double error_1d(int cells) {
    const double a2 = 0.5, lambda = 1.5;
    const Grid1D g{cells, 1.0 / cells, 0.0};
    Reduced1DProblem p;
    p.a2 = a2;
    p.forcing = sample(g, [&](double x) { return -4 * std::sinh(2 * x) + 9 * std::cos(3 * x) + a2 * u1(x); });
    p.left_dirichlet = u1(0.0);
    p.lambda = lambda;
    p.g = du1(1.0) + lambda * u1(1.0);
    const auto u = solve_1d(p);
    double e = 0.0;
    for (int i = 0; i < g.nodes(); ++i) e = std::max(e, std::abs(u[static_cast<std::size_t>(i)] - u1(g.x(i))));
    return e;
}

// u = cos(1.3x + 0.4) cos(1.7z + 0.2) + 0.3xz, harmonic part included so the data are not symmetric
inline double u2(double x, double z) { return std::cos(1.3 * x + 0.4) * std::cos(1.7 * z + 0.2) + 0.3 * x * z; }
inline double u2x(double x, double z) { return -1.3 * std::sin(1.3 * x + 0.4) * std::cos(1.7 * z + 0.2) + 0.3 * z; }
inline double u2z(double x, double z) { return -1.7 * std::cos(1.3 * x + 0.4) * std::sin(1.7 * z + 0.2) + 0.3 * x; }
inline double f2(double x, double z) { return (1.3 * 1.3 + 1.7 * 1.7) * std::cos(1.3 * x + 0.4) * std::cos(1.7 * z + 0.2); }

inline double flux(const BoundaryPoint& b) { return u2x(b.x, b.z) * b.nx + u2z(b.x, b.z) * b.nz; }

/// Top Neumann, Bottom Robin(0.7), Right Dirichlet, Interface Robin(1.3), all from u2.
inline BoundarySpec conditions_2d() {
    const double kb = 0.7, li = 1.3;
    BoundarySpec bcs;
    bcs.set(BoundaryTag::Top, BoundaryCondition::neumann(flux));
    bcs.set(BoundaryTag::Bottom, BoundaryCondition::robin(kb, [kb](const BoundaryPoint& b) { return flux(b) + kb * u2(b.x, b.z); }));
    bcs.set(BoundaryTag::Right, BoundaryCondition::dirichlet([](const BoundaryPoint& b) { return u2(b.x, b.z); }));
    bcs.set(BoundaryTag::Interface,
            BoundaryCondition::robin(li, [li](const BoundaryPoint& b) { return flux(b) + li * u2(b.x, b.z); }));
    return bcs;
}

inline double error_2d(const Domain2D& d) {
    auto dom = std::make_shared<const Domain2D>(d);
    const auto u = solve(assemble(dom, sample(dom, f2), conditions_2d()));
    const Grid2D& g = dom->grid();
    double e = 0.0;
    for (int j = 0; j <= g.nz; ++j)
        for (int i = 0; i <= g.nx; ++i)
            if (g.node_active(i, j)) e = std::max(e, std::abs(u.at(i, j) - u2(g.x(i), g.z(j))));
    return e;
}

/// Omega_2 of a [0,1]x[0,0.5] rectangle split at x = 0.25; n cells across the height.
inline Domain2D rectangle_omega2(int n) { return split_at_interface(build_rectangle(1.0, 0.5, 2 * n, n), 0.25).omega2; }

/// Omega_2 of a stepped funnel (channel 0.5 x 0.25, expansion 0.25 x 0.5) split at x = 0.25.
inline Domain2D funnel_omega2(int n) {
    const double h = 0.25 / n;
    return split_at_interface(build_funnel(0.5, 0.25, 0.25, 0.5, h, h), 0.25).omega2;
}

}  // namespace manufactured

inline OrderStudy order_study_1d(int base_cells, int levels = 3) {
    OrderStudy s;
    for (int k = 0; k < levels; ++k) {
        const int n = base_cells << k;
        s.h.push_back(1.0 / n);
        s.errors.push_back(manufactured::error_1d(n));
    }
    return s;
}

inline OrderStudy order_study_rectangle(int base_n, int levels = 3) {
    OrderStudy s;
    for (int k = 0; k < levels; ++k) {
        const int n = base_n << k;
        s.h.push_back(0.5 / n);
        s.errors.push_back(manufactured::error_2d(manufactured::rectangle_omega2(n)));
    }
    return s;
}

inline OrderStudy order_study_funnel(int base_n, int levels = 3) {
    OrderStudy s;
    for (int k = 0; k < levels; ++k) {
        const int n = base_n << k;
        s.h.push_back(0.25 / n);
        s.errors.push_back(manufactured::error_2d(manufactured::funnel_omega2(n)));
    }
    return s;
}

/// Largest |alpha_{k+1} / alpha_k| over consecutive trace rows, taken while the earlier
/// change is still above `floor` (past it only the stopping tolerance is being resolved).
inline double max_alpha_ratio(const IterationTrace& t, double floor) {
    double m = 0.0;
    for (std::size_t k = 1; k < t.rows.size(); ++k) {
        const auto& a = t.rows[k - 1];
        const auto& b = t.rows[k];
        if (a.diff() <= floor || a.alpha == 0.0) continue;
        m = std::max(m, std::abs(b.alpha / a.alpha));
    }
    return m;
}

/// Iteration-2 over iteration-1 successive difference (0 when the first change already met tol).
inline double second_iteration_ratio(const IterationTrace& t) {
    if (t.rows.size() < 2) return 0.0;
    return t.rows[1].diff() / t.rows[0].diff();
}

}  // namespace hetcouple
