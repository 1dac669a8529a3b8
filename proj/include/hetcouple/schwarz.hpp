#pragma once
/**
 * @file schwarz.hpp
 * @brief Robin-exchange Schwarz coupling between the reduced 1-D model on
 * (0, L0) and the 2-D model on Omega_2 = Omega ∩ {x > L0}.
 *
 * One sweep solves the 1-D problem with Robin data
 *     u1' + lambda u1 = d/dx avg(u2) + lambda avg(u2)        at x = L0
 * taken from the previous 2-D iterate, then the 2-D problem with
 *     -du2/dx + lambda u2 = -u1' + lambda u1                 on Gamma
 * where avg is the trapezoidal vertical average over Gamma (restriction) and
 * the 1-D value is broadcast as a constant along Gamma (extension).
 *
 * Interface derivatives of discrete iterates are read from the discrete
 * balance of the interface node (the derivative each subproblem enforces), so
 * the exchanged Robin data are exactly consistent between the two solves.
 */

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetcouple/elliptic2d.hpp"
#include "hetcouple/reduced1d.hpp"

namespace hetcouple {

/// Vertical average of an interface trace (restriction R).
inline double restrict_average(std::span<const double> trace) { return trapezoid_mean(trace); }

/// Constant broadcast of a 1-D interface value along Gamma (extension E).
inline std::vector<double> extend_constant(double value, std::size_t nodes) {
    return std::vector<double>(nodes, value);
}

struct OptimalLambda {
    double value;
    bool zero_kappa_limit;  ///< kappa == 0: the a -> 0 limit 1/L0 was returned
};

/// lambda_opt = a coth(a L0), a = sqrt(kappa/H): the absorbing Robin coefficient of the 1-D model.
inline OptimalLambda lambda_opt(double kappa, double H, double L0) {
    if (!(H > 0) || !(L0 > 0) || !(kappa >= 0)) throw std::invalid_argument("lambda_opt needs kappa >= 0, H, L0 > 0");
    if (kappa == 0.0) return {1.0 / L0, true};
    const double a = std::sqrt(kappa / H);
    const double t = a * L0;
    if (t < 1e-4) return {(1.0 + t * t / 3.0) / L0, false};
    return {a / std::tanh(t), false};
}

/// |B/A| with A = a cosh(a L0) + lambda sinh(a L0), B = -a cosh(a L0) + lambda sinh(a L0).
inline double contraction_ratio(double lambda, double kappa, double H, double L0) {
    if (!(lambda > 0)) throw std::invalid_argument("contraction_ratio needs lambda > 0");
    const double a = std::sqrt(kappa / H);
    if (a == 0.0) return std::abs((lambda * L0 - 1.0) / (lambda * L0 + 1.0));
    const double c = a * std::cosh(a * L0);
    const double s = lambda * std::sinh(a * L0);
    return std::abs((s - c) / (s + c));
}

struct CouplingConfig {
    DomainSplit split;
    double kappa = 0.0;
    double lambda = 1.0;
    ScalarFunction2D forcing = [](double, double) { return 0.0; };
    std::function<double(double)> gamma1 = [](double) { return 0.0; };
    std::function<double(double)> gamma2 = [](double) { return 0.0; };
    double tol = 1e-8;
    int max_iter = 50;
    std::optional<Field2D> initial_guess;  ///< on Omega_2; zero when absent
    SolveOptions solver;

    double H() const { return split.H; }
    double L0() const { return split.L0; }
};

/// Row k (k = 1, 2, ...) holds the change made by Schwarz iteration k, i.e. between
/// iterates u^k and u^{k+1}; iteration 0 only produces u^1 from the initial guess u2^0.
struct IterationRecord {
    int iter = 0;
    double diff1 = 0.0;           ///< max |u1^{k+1} - u1^k| on Omega_1
    double diff2 = 0.0;           ///< max |u2^{k+1} - u2^k| on Omega_2
    double alpha = 0.0;           ///< fitted amplitude of (u1^{k+1} - u1^k) = alpha sinh(a x)
    double value_residual = 0.0;  ///< |u1(L0) - avg u2(L0, .)| of the current pair
    double flux_residual = 0.0;   ///< |u1'(L0) - avg du2/dx(L0, .)| of the current pair
    double exchange1 = 0.0;       ///< |B1 u1 - B1 avg(u2)|
    double exchange2 = 0.0;       ///< max over Gamma of |B2 u2 - B2 u1|

    double diff() const { return std::max(diff1, diff2); }
};

enum class ConvergenceStatus { Converged, MaxIterations };

struct IterationTrace {
    std::vector<IterationRecord> rows;
    ConvergenceStatus status = ConvergenceStatus::MaxIterations;

    std::size_t iterations() const { return rows.size(); }
    bool converged() const { return status == ConvergenceStatus::Converged; }
};

struct CoupledSolution {
    Field1D u1;
    Field2D u2;
    IterationTrace trace;
    double lambda = 0.0;
    Reduced1DProblem problem1;  ///< last 1-D problem (its g is the final Robin data)
    Field2D forcing2;           ///< F sampled on Omega_2
    BoundarySpec bcs2;          ///< last 2-D conditions (Interface data = final Robin data)
    double L0 = 0.0;
    double H = 0.0;
};

class NonConvergence : public std::runtime_error {
public:
    explicit NonConvergence(CoupledSolution partial)
        : std::runtime_error("Schwarz iteration did not converge within max_iter"), partial_(std::move(partial)) {}
    const CoupledSolution& partial() const { return partial_; }

private:
    CoupledSolution partial_;
};

/// B1 data for the 1-D problem from an arbitrary Omega_2 field (one-sided derivative).
inline double robin_data_for_1d(const Field2D& u2, double lambda) {
    const double x = u2.grid().x0;
    const auto v = interface_trace(u2, x, TraceKind::Value);
    const auto dv = interface_trace(u2, x, TraceKind::XDerivative);
    return restrict_average(dv) + lambda * restrict_average(v);
}

/// B1 data from a discrete 2-D solution, using the derivative its own interface row enforces.
inline double robin_data_for_1d(const Field2D& u2, const Field2D& F2, const BoundarySpec& bcs2, double lambda) {
    const auto v = interface_trace(u2, u2.grid().x0, TraceKind::Value);
    const auto dv = interface_x_derivative(u2, F2, bcs2);
    return restrict_average(dv) + lambda * restrict_average(v);
}

/// B2 data (constant along Gamma) from an arbitrary 1-D field: -u1'(L0) + lambda u1(L0), n2 = -x.
inline double robin_data_for_2d(const Field1D& u1, double lambda) {
    return -one_sided_derivative(u1) + lambda * u1.back();
}

/// B2 data from a discrete 1-D solution, using the derivative its Robin row enforces.
inline double robin_data_for_2d(const Reduced1DProblem& p, const Field1D& u1, double lambda) {
    return -boundary_derivative(p, u1) + lambda * u1.back();
}

struct ConstraintResiduals {
    double value;
    double flux;
};

/// Value and flux constraints at x = L0 for an arbitrary pair (one-sided derivatives).
inline ConstraintResiduals check_constraints(const Field1D& u1, const Field2D& u2) {
    const double x = u2.grid().x0;
    const double ubar = restrict_average(interface_trace(u2, x, TraceKind::Value));
    const double dubar = restrict_average(interface_trace(u2, x, TraceKind::XDerivative));
    return {std::abs(u1.back() - ubar), std::abs(one_sided_derivative(u1) - dubar)};
}

/// Value and flux constraints of a coupled pair, with the derivatives enforced by the discrete subproblems.
inline ConstraintResiduals check_constraints(const CoupledSolution& s) {
    const double ubar = restrict_average(interface_trace(s.u2, s.u2.grid().x0, TraceKind::Value));
    const double dubar = restrict_average(interface_x_derivative(s.u2, s.forcing2, s.bcs2));
    return {std::abs(s.u1.back() - ubar), std::abs(boundary_derivative(s.problem1, s.u1) - dubar)};
}

inline BoundarySpec omega2_conditions(double kappa, double lambda, double g,
                                      const std::function<double(double)>& gamma2) {
    BoundarySpec bcs;
    bcs.set(BoundaryTag::Top, BoundaryCondition::neumann(0.0));
    bcs.set(BoundaryTag::Bottom, BoundaryCondition::robin(kappa, 0.0));
    bcs.set(BoundaryTag::Right,
            BoundaryCondition::dirichlet([gamma2](const BoundaryPoint& b) { return gamma2(b.z); }));
    bcs.set(BoundaryTag::Interface, BoundaryCondition::robin(lambda, g));
    return bcs;
}

/// Alternating 1-D / 2-D solves until both successive-iterate differences and both
/// Robin exchange residuals are below tol. Throws NonConvergence (carrying the
/// partial solution and trace) when max_iter iterations do not suffice.
inline CoupledSolution schwarz_solve(const CouplingConfig& cfg) {
    if (!(cfg.lambda > 0)) throw std::invalid_argument("lambda must be positive");
    if (!(cfg.tol > 0)) throw std::invalid_argument("tol must be positive");
    if (!(cfg.kappa >= 0)) throw std::invalid_argument("kappa must be non-negative");
    const DomainSplit& sp = cfg.split;
    const double H = cfg.H();
    const double L0 = cfg.L0();
    const double lambda = cfg.lambda;
    const double a = std::sqrt(cfg.kappa / H);
    const double mode_at_L0 = a > 0 ? std::sinh(a * L0) : L0;

    auto full = std::make_shared<const Domain2D>(sp.full);
    auto omega2 = std::make_shared<const Domain2D>(sp.omega2);

    CoupledSolution s;
    s.lambda = lambda;
    s.L0 = L0;
    s.H = H;
    s.forcing2 = sample(omega2, cfg.forcing);
    s.problem1.a2 = cfg.kappa / H;
    s.problem1.forcing = average_forcing(sample(full, cfg.forcing), sp.omega1);
    s.problem1.lambda = lambda;
    {
        // gamma1_bar: trapezoidal average of gamma1 over the left edge
        const auto [lo, hi] = sp.full.column_range(0);
        std::vector<double> g1;
        for (int j = lo; j <= hi; ++j) g1.push_back(cfg.gamma1(sp.full.grid().z(j)));
        s.problem1.left_dirichlet = trapezoid_mean(g1);
    }

    Field2D u2 = cfg.initial_guess ? *cfg.initial_guess : Field2D(omega2);
    if (u2.values.size() != omega2->grid().node_count())
        throw std::invalid_argument("initial guess does not match Omega_2");
    u2.domain = omega2;
    Field1D u1(sp.omega1);

    s.bcs2 = omega2_conditions(cfg.kappa, lambda, 0.0, cfg.gamma2);
    // the factorisation depends on lambda and kappa only; Robin data enter the right-hand side
    const EllipticSolver solver(assemble(omega2, s.forcing2, s.bcs2), cfg.solver);

    // the initial guess is not a discrete solution, so its derivative is the one-sided difference
    double g1 = robin_data_for_1d(u2, lambda);

    for (int sweep = 0; sweep <= cfg.max_iter; ++sweep) {
        s.problem1.g = g1;
        Field1D u1_new = solve_1d(s.problem1);
        const double g2 = robin_data_for_2d(s.problem1, u1_new, lambda);
        s.bcs2 = omega2_conditions(cfg.kappa, lambda, g2, cfg.gamma2);
        Field2D u2_new = solver.solve(assemble(omega2, s.forcing2, s.bcs2));
        const double g1_next = robin_data_for_1d(u2_new, s.forcing2, s.bcs2, lambda);

        if (sweep > 0) {
            IterationRecord r;
            r.iter = sweep;
            r.diff1 = max_abs_diff(u1_new.values, u1.values);
            r.diff2 = max_abs_diff(u2_new.values, u2.values);
            r.alpha = (u1_new.back() - u1.back()) / mode_at_L0;
            r.exchange1 = std::abs(g1 - g1_next);
            {
                const auto v = interface_trace(u2_new, u2_new.grid().x0, TraceKind::Value);
                const auto dv = interface_x_derivative(u2_new, s.forcing2, s.bcs2);
                double e2 = 0.0;
                for (std::size_t j = 0; j < v.size(); ++j) e2 = std::max(e2, std::abs(-dv[j] + lambda * v[j] - g2));
                r.exchange2 = e2;
            }
            s.u1 = u1_new;
            s.u2 = u2_new;
            const auto c = check_constraints(s);
            r.value_residual = c.value;
            r.flux_residual = c.flux;
            s.trace.rows.push_back(r);
        }
        u1 = std::move(u1_new);
        u2 = std::move(u2_new);
        g1 = g1_next;

        if (sweep > 0) {
            const auto& r = s.trace.rows.back();
            if (r.diff1 <= cfg.tol && r.diff2 <= cfg.tol && r.exchange1 <= cfg.tol && r.exchange2 <= cfg.tol) {
                s.trace.status = ConvergenceStatus::Converged;
                break;
            }
        }
    }
    s.u1 = std::move(u1);
    s.u2 = std::move(u2);
    if (!s.trace.converged()) throw NonConvergence(std::move(s));
    return s;
}

/// Omega_2 part of a full-domain field.
inline Field2D restrict_to_omega2(const Field2D& full, const DomainSplit& sp) {
    Field2D out(std::make_shared<const Domain2D>(sp.omega2));
    const Grid2D& g2 = out.grid();
    for (int j = 0; j <= g2.nz; ++j)
        for (int i = 0; i <= g2.nx; ++i)
            if (g2.node_active(i, j)) out.at(i, j) = full.at(i + sp.interface_column, j);
    return out;
}

}  // namespace hetcouple
