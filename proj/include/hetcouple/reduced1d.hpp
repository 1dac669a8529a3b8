#pragma once
/**
 * @file reduced1d.hpp
 * @brief Vertically averaged 1-D model on (0, L0):
 *
 *     -u'' + a2 u = Fbar,   u(0) = gamma1_bar,   u'(L0) + lambda u(L0) = g.
 *
 * Vertex-centred discretisation: interior rows are the standard three-point
 * stencil, the Robin row is the half-cell balance (identical to eliminating a
 * ghost node through the equation at x = L0), so the scheme is second order
 * and the system is tridiagonal.
 */

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hetcouple/field.hpp"

namespace hetcouple {

struct Reduced1DProblem {
    double a2 = 0.0;           ///< kappa / H
    Field1D forcing;           ///< Fbar at the 1-D nodes
    double left_dirichlet = 0.0;
    double lambda = 1.0;       ///< Robin coefficient at x = L0 (outward normal +x)
    double g = 0.0;            ///< Robin data at x = L0

    const Grid1D& grid() const { return forcing.grid; }
};

/// Per-column trapezoidal vertical average of a 2-D field over the columns of omega1.
inline Field1D average_forcing(const Field2D& F, const Grid1D& omega1) {
    const Grid2D& g = F.grid();
    if (omega1.cells > g.nx || std::abs(omega1.h - g.hx) > 1e-12 * g.hx)
        throw std::invalid_argument("forcing grid does not cover the 1-D grid");
    Field1D out(omega1);
    for (int i = 0; i < omega1.nodes(); ++i) {
        const auto col = column_values(F, i);
        out[static_cast<std::size_t>(i)] = trapezoid_mean(col);
    }
    return out;
}

namespace detail {

/// Tridiagonal rows of the 1-D operator: sub[i] u[i-1] + diag[i] u[i] + sup[i] u[i+1] = rhs[i].
struct Tridiagonal {
    std::vector<double> sub, diag, sup, rhs;
};

inline Tridiagonal assemble_1d(const Reduced1DProblem& p) {
    const Grid1D& g = p.grid();
    const std::size_t n = static_cast<std::size_t>(g.nodes());
    const double h = g.h;
    const double ih2 = 1.0 / (h * h);
    Tridiagonal t{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                  std::vector<double>(n, 0.0)};
    t.diag[0] = 1.0;
    t.rhs[0] = p.left_dirichlet;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        t.sub[i] = -ih2;
        t.diag[i] = 2.0 * ih2 + p.a2;
        t.sup[i] = -ih2;
        t.rhs[i] = p.forcing[i];
    }
    // half-cell balance at x = L0, scaled by 2/h to match the interior rows
    const std::size_t N = n - 1;
    t.sub[N] = -2.0 * ih2;
    t.diag[N] = 2.0 * ih2 + 2.0 * p.lambda / h + p.a2;
    t.rhs[N] = p.forcing[N] + 2.0 * p.g / h;
    return t;
}

}  // namespace detail

/// Max-norm residual of the discrete 1-D system, relative to max(|rhs|, |diag*u|).
inline double residual_1d(const Reduced1DProblem& p, const Field1D& u) {
    const auto t = detail::assemble_1d(p);
    const std::size_t n = t.diag.size();
    double r = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double Au = t.diag[i] * u[i];
        if (i > 0) Au += t.sub[i] * u[i - 1];
        if (i + 1 < n) Au += t.sup[i] * u[i + 1];
        r = std::max(r, std::abs(Au - t.rhs[i]));
        scale = std::max({scale, std::abs(t.rhs[i]), std::abs(t.diag[i] * u[i])});
    }
    return scale > 0 ? r / scale : r;
}

/// Direct tridiagonal elimination (Thomas); the matrix is diagonally dominant for a2 >= 0, lambda > 0.
inline Field1D solve_1d(const Reduced1DProblem& p) {
    if (p.grid().cells < 1) throw std::invalid_argument("1-D grid needs at least one cell");
    if (!(p.a2 >= 0.0)) throw std::invalid_argument("a2 must be non-negative");
    if (!(p.lambda > 0.0)) throw std::invalid_argument("Robin coefficient must be positive");
    auto t = detail::assemble_1d(p);
    const std::size_t n = t.diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        assert(t.diag[i - 1] != 0.0);
        const double w = t.sub[i] / t.diag[i - 1];
        t.diag[i] -= w * t.sup[i - 1];
        t.rhs[i] -= w * t.rhs[i - 1];
    }
    Field1D u(p.grid());
    u[n - 1] = t.rhs[n - 1] / t.diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) u[i] = (t.rhs[i] - t.sup[i] * u[i + 1]) / t.diag[i];
    assert(residual_1d(p, u) <= 1e-12);
    return u;
}

/// du/dx at x = L0 implied by the discrete equation in the last half cell.
/// For a discrete solution this equals g - lambda*u(L0) exactly.
inline double boundary_derivative(const Reduced1DProblem& p, const Field1D& u) {
    const std::size_t N = u.size() - 1;
    const double h = p.grid().h;
    return (u[N] - u[N - 1]) / h + 0.5 * h * (p.a2 * u[N] - p.forcing[N]);
}

/// Second-order one-sided difference at the last node, independent of any equation.
inline double one_sided_derivative(const Field1D& u) {
    const std::size_t N = u.size() - 1;
    if (N < 2) return (u[N] - u[N - 1]) / u.grid.h;
    return (3.0 * u[N] - 4.0 * u[N - 1] + u[N - 2]) / (2.0 * u.grid.h);
}

/// The homogeneous-problem iterate difference alpha * sinh(a x).
inline double analytic_error_mode(double alpha, double a, double x) { return alpha * std::sinh(a * x); }

}  // namespace hetcouple
