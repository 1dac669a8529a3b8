#include <gtest/gtest.h>

#include "hetcouple/elliptic2d.hpp"
#include "hetcouple/verification.hpp"

using namespace hetcouple;

namespace {

std::shared_ptr<const Domain2D> ptr(Domain2D d) { return std::make_shared<const Domain2D>(std::move(d)); }

const auto zero = [](double) { return 0.0; };

BoundarySpec all_dirichlet(double c) {
    BoundarySpec b;
    for (auto t : {BoundaryTag::Left, BoundaryTag::Right, BoundaryTag::Top, BoundaryTag::Bottom})
        b.set(t, BoundaryCondition::dirichlet(c));
    return b;
}

double test1_forcing(double x, double z) { return std::exp(-(x - 19) * (x - 19)) * std::sin(2 * M_PI * z / 0.5); }

}  // namespace

TEST(Assemble, SingleInteriorUnknown) {
    auto d = ptr(build_rectangle(1, 1, 2, 2));
    const auto sys = assemble(d, Field2D(d), all_dirichlet(0.0));
    EXPECT_EQ(sys.unknowns(), 1u);
    const auto u = solve(sys);
    for (double v : u.values) EXPECT_EQ(v, 0.0);
}

TEST(Assemble, MissingTagIsRejected) {
    auto d = ptr(build_rectangle(1, 1, 4, 4));
    BoundarySpec b;
    b.set(BoundaryTag::Left, BoundaryCondition::dirichlet(0.0));
    EXPECT_THROW(assemble(d, Field2D(d), b), std::invalid_argument);
}

TEST(Assemble, BottomRobinCorrection) {
    // Robin rows differ from the Neumann rows by kappa times the face length; in the
    // five-point form scaled to unit dual area this is the 2 kappa / hz ghost-node term.
    const double kappa = 0.001;
    auto d = ptr(build_rectangle(20, 0.5, 400, 10));
    const auto f = Field2D(d);
    const auto robin = assemble(d, f, reference_conditions(zero, zero, kappa));
    const auto neumann = assemble(d, f, reference_conditions(zero, zero, 0.0));
    const auto& g = d->grid();
    for (int i : {1, 57, 399}) {
        const int r = robin.unknown_of_node[g.index(i, 0)];
        ASSERT_GE(r, 0);
        const double dual_area = 0.5 * g.hx * g.hz;
        EXPECT_NEAR((robin.matrix.coeff(r, r) - neumann.matrix.coeff(r, r)) / dual_area, 2 * kappa / g.hz, 1e-12);
        const int q = robin.unknown_of_node[g.index(i, 1)];
        EXPECT_EQ(robin.matrix.coeff(q, q), neumann.matrix.coeff(q, q));
    }
}

TEST(Assemble, MatrixIsSymmetric) {
    for (auto d : {ptr(build_rectangle(2, 0.5, 8, 4)), ptr(build_funnel(1, 0.25, 0.5, 1, 0.125, 0.125)),
                   ptr(split_at_interface(build_funnel(1, 0.25, 0.5, 1, 0.125, 0.125), 0.5).omega2)}) {
        BoundarySpec b = reference_conditions(zero, zero, 0.3);
        b.set(BoundaryTag::Interface, BoundaryCondition::robin(0.9, 0.0));
        const auto sys = assemble(d, Field2D(d), b);
        const Eigen::SparseMatrix<double> A = sys.matrix;
        const Eigen::SparseMatrix<double> At = A.transpose();
        EXPECT_EQ((A - At).norm(), 0.0);
    }
}

TEST(Solve, ZeroDataGivesZeroField) {
    auto d = ptr(build_funnel(1, 0.25, 0.5, 1, 0.125, 0.125));
    const auto u = solve_reference(d, [](double, double) { return 0.0; }, zero, zero, 0.001);
    for (double v : u.values) EXPECT_EQ(v, 0.0);
}

TEST(Solve, SecondOrderOnRectangleAndFunnel) {
    EXPECT_GE(order_study_rectangle(4).min_ratio(), 3.8);
    EXPECT_GE(order_study_funnel(4).min_ratio(), 3.8);
}

TEST(Solve, ConjugateGradientsMatchFactorisation) {
    auto d = ptr(build_funnel(1, 0.25, 0.5, 1, 0.0625, 0.0625));
    const auto sys = assemble(d, sample(d, [](double x, double z) { return 1 + x * z; }),
                              reference_conditions(zero, [](double z) { return z; }, 0.2));
    SolveOptions cg;
    cg.method = SolverMethod::ConjugateGradient;
    cg.tol = 1e-13;
    SolveOptions direct;
    direct.method = SolverMethod::Direct;
    const auto a = solve(sys, cg);
    const auto b = solve(sys, direct);
    for (std::size_t n = 0; n < a.values.size(); ++n) EXPECT_NEAR(a.values[n], b.values[n], 1e-10);
}

TEST(Solve, ConjugateGradientFailureCarriesResidual) {
    auto d = ptr(build_rectangle(1, 1, 16, 16));
    const auto sys = assemble(d, sample(d, [](double, double) { return 1.0; }), all_dirichlet(0.0));
    SolveOptions o;
    o.method = SolverMethod::ConjugateGradient;
    o.max_iter = 2;
    try {
        solve(sys, o);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_GT(e.achieved_residual(), o.tol);
        EXPECT_EQ(e.iterations(), 2);
    }
}

TEST(Solve, ReusedSolverRejectsOtherSystems) {
    auto d1 = ptr(build_rectangle(1, 1, 4, 4));
    auto d2 = ptr(build_rectangle(1, 1, 8, 8));
    const EllipticSolver s(assemble(d1, Field2D(d1), all_dirichlet(0.0)));
    EXPECT_THROW(s.solve(assemble(d2, Field2D(d2), all_dirichlet(0.0))), std::invalid_argument);
}

TEST(Solve, SymmetricAboutMidHeight) {
    const double H = 0.5;
    auto d = ptr(build_rectangle(4, H, 40, 10));
    const auto u = solve_reference(
        d, [H](double x, double z) { return std::sin(x) * std::cos(2 * M_PI * (z - H / 2) / H) + (z - H / 2) * (z - H / 2); },
        zero, zero, 0.0);
    const auto& g = d->grid();
    for (int j = 0; j <= g.nz; ++j)
        for (int i = 0; i <= g.nx; ++i) EXPECT_NEAR(u.at(i, j), u.at(i, g.nz - j), 1e-12);
}

TEST(Solve, ConstantStateIsPreserved) {
    const auto c = [](double) { return 1.75; };
    for (auto d : {ptr(build_rectangle(2, 0.5, 16, 4)), ptr(build_funnel(1, 0.25, 0.5, 1, 0.125, 0.125))}) {
        const auto u = solve_reference(d, [](double, double) { return 0.0; }, c, c, 0.0);
        const auto& g = d->grid();
        for (std::size_t n = 0; n < u.values.size(); ++n)
            if (g.active[n]) { EXPECT_NEAR(u.values[n], 1.75, 1e-12); }
    }
}

TEST(SolveReference, FirstTestCaseIsLocalisedNearForcing) {
    auto d = ptr(build_rectangle(20, 0.5, 400, 10));
    const auto u = solve_reference(d, test1_forcing, zero, zero, 0.001);
    const auto& g = d->grid();
    double best = 0.0;
    int bi = 0;
    for (int j = 0; j <= g.nz; ++j)
        for (int i = 0; i <= g.nx; ++i)
            if (std::abs(u.at(i, j)) > best) best = std::abs(u.at(i, j)), bi = i;
    EXPECT_GE(g.x(bi), 17.0);
    EXPECT_LE(g.x(bi), 20.0);
    // opposite signs in the lower and upper halves below x*
    const int i19 = column_at(g, 19.0);
    EXPECT_LT(u.at(i19, 2) * u.at(i19, 8), 0.0);
    // only the slowly decaying kappa mode reaches the middle of the strip
    EXPECT_LT(std::abs(u.at(column_at(g, 10.0), 5)), 1e-2 * best);
    EXPECT_LT(std::abs(u.at(column_at(g, 10.0), 5)), std::abs(u.at(column_at(g, 16.0), 5)));
}

// The open expansion drains the channel end, so the profile rises to a single
// interior maximum and falls towards the step.
TEST(SolveReference, FunnelProfileIsUnimodalInChannel) {
    auto d = ptr(build_funnel(2, 0.05, 1, 3, 0.005, 0.005));
    const auto u = solve_reference(d, [](double, double) { return 1.0; }, zero, zero, 0.001);
    const auto& g = d->grid();
    const int nc = column_at(g, 2.0);
    int peak = 0;
    for (int i = 0; i <= nc; ++i)
        if (u.at(i, 5) > u.at(peak, 5)) peak = i;
    EXPECT_GT(peak, 0);
    EXPECT_LT(peak, nc);
    for (int i = 1; i <= peak; ++i) EXPECT_GT(u.at(i, 5), u.at(i - 1, 5));
    for (int i = peak + 1; i <= nc; ++i) EXPECT_LT(u.at(i, 5), u.at(i - 1, 5));
}

TEST(SolveReference, RejectsSplitDomain) {
    auto d = ptr(split_at_interface(build_rectangle(2, 1, 4, 2), 1.0).omega2);
    EXPECT_THROW(solve_reference(d, [](double, double) { return 0.0; }, zero, zero, 0.0), std::invalid_argument);
}

TEST(InterfaceTrace, ConstantAndLinearFields) {
    auto d = ptr(split_at_interface(build_rectangle(20, 0.5, 400, 10), 16).omega2);
    const auto c = sample(d, [](double, double) { return 3.0; });
    for (double v : interface_trace(c, 16, TraceKind::Value)) EXPECT_EQ(v, 3.0);
    for (double v : interface_trace(c, 16, TraceKind::XDerivative)) EXPECT_EQ(v, 0.0);
    const auto x = sample(d, [](double x, double) { return x; });
    for (double v : interface_trace(x, 16, TraceKind::XDerivative)) EXPECT_NEAR(v, 1.0, 1e-12);
    EXPECT_EQ(interface_trace(x, 16, TraceKind::Value).size(), 11u);
    EXPECT_THROW(interface_trace(x, 15, TraceKind::Value), std::invalid_argument);
    EXPECT_THROW(interface_trace(x, 16.01, TraceKind::Value), std::invalid_argument);
}

TEST(InterfaceTrace, BalanceDerivativeOfDiscreteSolution) {
    // for a discrete Robin solution the balance derivative reproduces the Robin data exactly
    auto d = ptr(split_at_interface(build_funnel(1, 0.25, 0.5, 1, 0.0625, 0.0625), 0.5).omega2);
    const auto F = sample(d, [](double x, double z) { return std::cos(x + z); });
    BoundarySpec b = reference_conditions(zero, zero, 0.1);
    b.set(BoundaryTag::Interface, BoundaryCondition::robin(0.8, 0.3));
    const auto u = solve(assemble(d, F, b));
    const auto v = interface_trace(u, 0.5, TraceKind::Value);
    const auto dv = interface_x_derivative(u, F, b);
    for (std::size_t j = 0; j < v.size(); ++j) EXPECT_NEAR(-dv[j] + 0.8 * v[j], 0.3, 1e-12);
}
