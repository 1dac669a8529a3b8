#pragma once
/**
 * @file elliptic2d.hpp
 * @brief -Laplace(u) = F on a rectilinear domain with per-tag Dirichlet,
 * Neumann or Robin conditions.
 *
 * Discretisation is vertex centred: each active cell hands a quarter of its
 * area to each corner node and couples its corners along its four edges.
 * On straight boundaries this reproduces the five-point stencil with ghost
 * nodes eliminated through the boundary condition (scaled by the dual-cell
 * fraction), so the operator stays second order and symmetric, including at
 * the re-entrant corners of the funnel. Dirichlet nodes are eliminated into
 * the right-hand side.
 */

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetcouple/field.hpp"
#include "hetcouple/geometry.hpp"

namespace hetcouple {

/// Boundary node position and the outward unit normal of the face being evaluated.
struct BoundaryPoint {
    double x;
    double z;
    int nx;
    int nz;
};

using BoundaryData = std::function<double(const BoundaryPoint&)>;

inline BoundaryData constant_data(double c) {
    return [c](const BoundaryPoint&) { return c; };
}

/// One boundary condition: Dirichlet u = data, Neumann du/dn = data, or Robin du/dn + coef*u = data.
struct BoundaryCondition {
    enum class Kind { Dirichlet, Neumann, Robin };
    Kind kind = Kind::Neumann;
    double coef = 0.0;
    BoundaryData data = constant_data(0.0);

    static BoundaryCondition dirichlet(BoundaryData d) { return {Kind::Dirichlet, 0.0, std::move(d)}; }
    static BoundaryCondition dirichlet(double c) { return dirichlet(constant_data(c)); }
    static BoundaryCondition neumann(BoundaryData d) { return {Kind::Neumann, 0.0, std::move(d)}; }
    static BoundaryCondition neumann(double c = 0.0) { return neumann(constant_data(c)); }
    static BoundaryCondition robin(double coef, BoundaryData d) {
        if (!(coef >= 0.0)) throw std::invalid_argument("Robin coefficient must be non-negative");
        return {Kind::Robin, coef, std::move(d)};
    }
    static BoundaryCondition robin(double coef, double c = 0.0) { return robin(coef, constant_data(c)); }
};

/// Conditions indexed by boundary tag. Top walls are Neumann, Bottom carries Robin(kappa),
/// Left/Right are Dirichlet and Interface is Robin(lambda) in every use in this library.
class BoundarySpec {
public:
    BoundarySpec& set(BoundaryTag tag, BoundaryCondition bc) {
        conds_[static_cast<std::size_t>(tag)] = std::move(bc);
        return *this;
    }
    bool has(BoundaryTag tag) const { return conds_[static_cast<std::size_t>(tag)].has_value(); }
    const BoundaryCondition& get(BoundaryTag tag) const {
        const auto& c = conds_[static_cast<std::size_t>(tag)];
        if (!c) throw std::invalid_argument(std::string("no boundary condition for tag ") + to_string(tag));
        return *c;
    }

private:
    std::array<std::optional<BoundaryCondition>, 5> conds_;
};

/// Sparse system over the non-Dirichlet active nodes. The matrix is stored in compressed row form.
struct LinearSystem {
    using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    std::shared_ptr<const Domain2D> domain;
    Matrix matrix;
    Eigen::VectorXd rhs;
    std::vector<int> unknown_of_node;       ///< -1 for inactive and Dirichlet nodes
    std::vector<std::size_t> node_of_unknown;
    std::vector<double> fixed_values;       ///< Dirichlet value per node (0 elsewhere)

    std::size_t unknowns() const { return node_of_unknown.size(); }
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double achieved_residual, int iterations)
        : std::runtime_error(what), residual_(achieved_residual), iterations_(iterations) {}
    double achieved_residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

enum class SolverMethod { Auto, Direct, ConjugateGradient };

struct SolveOptions {
    SolverMethod method = SolverMethod::Auto;
    double tol = 1e-10;  ///< relative residual for conjugate gradients
    int max_iter = 50000;
    /// Auto picks the sparse Cholesky factorisation up to this many unknowns.
    std::size_t direct_limit = 400000;
};

namespace detail {

/// Geometric contributions of one active cell to its corner nodes.
struct CellKernel {
    const Domain2D& d;

    template <class AreaFn, class CoupleFn, class FaceFn>
    void operator()(int i, int j, AreaFn&& area, CoupleFn&& couple, FaceFn&& face) const {
        const Grid2D& g = d.grid();
        const double hx = g.hx, hz = g.hz;
        const double cx = 0.5 * hz / hx;  // horizontal edge, half of the dual face height
        const double cz = 0.5 * hx / hz;
        const std::size_t p00 = g.index(i, j), p10 = g.index(i + 1, j);
        const std::size_t p01 = g.index(i, j + 1), p11 = g.index(i + 1, j + 1);
        const double a = 0.25 * hx * hz;
        area(p00, a);
        area(p10, a);
        area(p01, a);
        area(p11, a);
        couple(p00, p10, cx);
        couple(p01, p11, cx);
        couple(p00, p01, cz);
        couple(p10, p11, cz);
        if (!d.cell_active(i - 1, j)) {
            const auto t = d.tag_for(i, j, Side::West);
            face(p00, i, j, t, -1, 0, 0.5 * hz);
            face(p01, i, j + 1, t, -1, 0, 0.5 * hz);
        }
        if (!d.cell_active(i + 1, j)) {
            const auto t = d.tag_for(i, j, Side::East);
            face(p10, i + 1, j, t, 1, 0, 0.5 * hz);
            face(p11, i + 1, j + 1, t, 1, 0, 0.5 * hz);
        }
        if (!d.cell_active(i, j - 1)) {
            const auto t = d.tag_for(i, j, Side::South);
            face(p00, i, j, t, 0, -1, 0.5 * hx);
            face(p10, i + 1, j, t, 0, -1, 0.5 * hx);
        }
        if (!d.cell_active(i, j + 1)) {
            const auto t = d.tag_for(i, j, Side::North);
            face(p01, i, j + 1, t, 0, 1, 0.5 * hx);
            face(p11, i + 1, j + 1, t, 0, 1, 0.5 * hx);
        }
    }
};

}  // namespace detail

inline LinearSystem assemble(std::shared_ptr<const Domain2D> domain, const Field2D& F, const BoundarySpec& bcs) {
    const Domain2D& d = *domain;
    const Grid2D& g = d.grid();
    if (F.values.size() != g.node_count()) throw std::invalid_argument("forcing does not match the domain grid");
    for (const auto& e : d.boundary_edges())
        if (!bcs.has(e.tag))
            throw std::invalid_argument(std::string("boundary spec misses tag ") + to_string(e.tag));

    const std::size_t nn = g.node_count();
    LinearSystem sys;
    sys.domain = domain;
    sys.fixed_values.assign(nn, 0.0);
    std::vector<std::uint8_t> is_dirichlet(nn, 0);
    for (const auto& e : d.boundary_edges()) {
        const auto& bc = bcs.get(e.tag);
        if (bc.kind != BoundaryCondition::Kind::Dirichlet) continue;
        const int onx = e.outward == Side::West ? -1 : e.outward == Side::East ? 1 : 0;
        const int onz = e.outward == Side::South ? -1 : e.outward == Side::North ? 1 : 0;
        for (auto [i, j] : {std::pair{e.i0, e.j0}, std::pair{e.i1, e.j1}}) {
            const auto p = g.index(i, j);
            is_dirichlet[p] = 1;
            sys.fixed_values[p] = bc.data({g.x(i), g.z(j), onx, onz});
        }
    }
    sys.unknown_of_node.assign(nn, -1);
    for (std::size_t p = 0; p < nn; ++p)
        if (g.active[p] && !is_dirichlet[p]) {
            sys.unknown_of_node[p] = static_cast<int>(sys.node_of_unknown.size());
            sys.node_of_unknown.push_back(p);
        }

    const std::size_t n = sys.unknowns();
    sys.rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n);
    auto& rhs = sys.rhs;
    const auto& uid = sys.unknown_of_node;
    const auto& fixed = sys.fixed_values;

    auto area = [&](std::size_t p, double a) {
        if (uid[p] >= 0) rhs[uid[p]] += F.values[p] * a;
    };
    auto couple = [&](std::size_t p, std::size_t q, double c) {
        const int up = uid[p], uq = uid[q];
        if (up >= 0) {
            trip.emplace_back(up, up, c);
            if (uq >= 0)
                trip.emplace_back(up, uq, -c);
            else
                rhs[up] += c * fixed[q];
        }
        if (uq >= 0) {
            trip.emplace_back(uq, uq, c);
            if (up >= 0)
                trip.emplace_back(uq, up, -c);
            else
                rhs[uq] += c * fixed[p];
        }
    };
    auto face = [&](std::size_t p, int i, int j, BoundaryTag tag, int onx, int onz, double len) {
        const int up = uid[p];
        if (up < 0) return;
        const auto& bc = bcs.get(tag);
        switch (bc.kind) {
            case BoundaryCondition::Kind::Dirichlet:
                break;  // cannot happen: the node would be fixed
            case BoundaryCondition::Kind::Neumann:
                rhs[up] += bc.data({g.x(i), g.z(j), onx, onz}) * len;
                break;
            case BoundaryCondition::Kind::Robin:
                trip.emplace_back(up, up, bc.coef * len);
                rhs[up] += bc.data({g.x(i), g.z(j), onx, onz}) * len;
                break;
        }
    };
    detail::CellKernel kernel{d};
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (d.cell_active(i, j)) kernel(i, j, area, couple, face);

    sys.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    sys.matrix.setFromTriplets(trip.begin(), trip.end());
    sys.matrix.makeCompressed();
    return sys;
}

/// Scatters an unknown vector plus the Dirichlet values into a field.
inline Field2D to_field(const LinearSystem& sys, const Eigen::VectorXd& x) {
    Field2D out(sys.domain);
    const Grid2D& g = out.grid();
    for (std::size_t p = 0; p < g.node_count(); ++p) {
        if (!g.active[p]) continue;
        const int u = sys.unknown_of_node[p];
        out.values[p] = u >= 0 ? x[u] : sys.fixed_values[p];
    }
    return out;
}

/// ||A x - b||_2 / ||b||_2 (absolute when b = 0).
inline double relative_residual(const LinearSystem& sys, const Eigen::VectorXd& x) {
    const double r = (sys.matrix * x - sys.rhs).norm();
    const double b = sys.rhs.norm();
    return b > 0 ? r / b : r;
}

/// Jacobi-preconditioned conjugate gradients; deterministic sequential reductions.
inline Eigen::VectorXd conjugate_gradient(const LinearSystem::Matrix& A, const Eigen::VectorXd& b, double tol,
                                          int max_iter, int* iterations = nullptr) {
    const Eigen::Index n = b.size();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    const double bnorm = b.norm();
    if (iterations) *iterations = 0;
    if (bnorm == 0.0) return x;
    const Eigen::VectorXd inv_diag = A.diagonal().cwiseInverse();
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    double rel = 1.0;
    for (int k = 1; k <= max_iter; ++k) {
        const Eigen::VectorXd Ap = A * p;
        const double alpha = rz / p.dot(Ap);
        x += alpha * p;
        r -= alpha * Ap;
        rel = r.norm() / bnorm;
        if (rel <= tol) {
            if (iterations) *iterations = k;
            return x;
        }
        z = inv_diag.cwiseProduct(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    throw SolverError("conjugate gradients did not reach the requested residual", rel, max_iter);
}

/// Reusable solver for one matrix: the Cholesky factorisation is computed once and
/// every later right-hand side costs two triangular solves.
class EllipticSolver {
public:
    EllipticSolver(const LinearSystem& sys, SolveOptions opts = {}) : opts_(opts), matrix_(sys.matrix) {
        direct_ = opts_.method == SolverMethod::Direct ||
                  (opts_.method == SolverMethod::Auto && sys.unknowns() <= opts_.direct_limit);
        if (direct_) {
            Eigen::SparseMatrix<double> colmajor = sys.matrix;
            ldlt_ = std::make_unique<Ldlt>();
            ldlt_->compute(colmajor);
            if (ldlt_->info() != Eigen::Success)
                throw SolverError("sparse factorisation failed (matrix not positive definite?)", NAN, 0);
        }
    }

    Field2D solve(const LinearSystem& sys) const {
        if (sys.unknowns() != static_cast<std::size_t>(matrix_.rows()))
            throw std::invalid_argument("system does not match the factorised matrix");
        if (sys.unknowns() == 0) return to_field(sys, Eigen::VectorXd());
        Eigen::VectorXd x;
        if (direct_) {
            x = ldlt_->solve(sys.rhs);
        } else {
            x = conjugate_gradient(matrix_, sys.rhs, opts_.tol, opts_.max_iter, &last_iterations_);
        }
        return to_field(sys, x);
    }

    bool direct() const { return direct_; }
    int last_iterations() const { return last_iterations_; }

private:
    using Ldlt = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>>;
    SolveOptions opts_;
    LinearSystem::Matrix matrix_;
    std::unique_ptr<Ldlt> ldlt_;
    bool direct_ = false;
    mutable int last_iterations_ = 0;
};

inline Field2D solve(const LinearSystem& sys, SolveOptions opts = {}) {
    return EllipticSolver(sys, opts).solve(sys);
}

inline BoundarySpec reference_conditions(std::function<double(double)> gamma1, std::function<double(double)> gamma2,
                                         double kappa) {
    BoundarySpec bcs;
    bcs.set(BoundaryTag::Top, BoundaryCondition::neumann(0.0));
    bcs.set(BoundaryTag::Bottom, BoundaryCondition::robin(kappa, 0.0));
    bcs.set(BoundaryTag::Left,
            BoundaryCondition::dirichlet([gamma1](const BoundaryPoint& b) { return gamma1(b.z); }));
    bcs.set(BoundaryTag::Right,
            BoundaryCondition::dirichlet([gamma2](const BoundaryPoint& b) { return gamma2(b.z); }));
    return bcs;
}

/// Full-domain solution with u = gamma1 on the left and u = gamma2 on the right.
inline Field2D solve_reference(std::shared_ptr<const Domain2D> domain, const ScalarFunction2D& F,
                               std::function<double(double)> gamma1, std::function<double(double)> gamma2,
                               double kappa, SolveOptions opts = {}) {
    if (domain->left_is_interface()) throw std::invalid_argument("reference solve needs the unsplit domain");
    const Field2D f = sample(domain, F);
    return solve(assemble(domain, f, reference_conditions(std::move(gamma1), std::move(gamma2), kappa)), opts);
}

enum class TraceKind { Value, XDerivative };

/// Trace of a field along the grid column x = xc. The derivative is the
/// second-order one-sided difference towards increasing x.
inline std::vector<double> interface_trace(const Field2D& f, double xc, TraceKind which) {
    const Grid2D& g = f.grid();
    const int i = column_at(g, xc);
    if (i < 0) throw std::invalid_argument("no grid column at the requested abscissa");
    auto [lo, hi] = f.domain->column_range(i);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (int j = lo; j <= hi; ++j) {
        if (which == TraceKind::Value) {
            out.push_back(f.at(i, j));
            continue;
        }
        if (!g.node_active(i + 1, j)) throw std::invalid_argument("no grid column to the right of the trace");
        if (g.node_active(i + 2, j))
            out.push_back((-3.0 * f.at(i, j) + 4.0 * f.at(i + 1, j) - f.at(i + 2, j)) / (2.0 * g.hx));
        else
            out.push_back((f.at(i + 1, j) - f.at(i, j)) / g.hx);
    }
    return out;
}

/// Normal derivative du/dn on the faces tagged `tag` at node (i, j), read off the
/// discrete balance of the node's dual cell. For a discrete solution of a Robin
/// problem on that tag this reproduces data - coef*u exactly; for fields that are
/// not solutions it is a second-order approximation that uses the equation.
inline double balance_normal_derivative(const Field2D& u, const Field2D& F, const BoundarySpec& bcs, int i, int j,
                                        BoundaryTag tag) {
    const Domain2D& d = *u.domain;
    const Grid2D& g = d.grid();
    const std::size_t p = g.index(i, j);
    double flux = 0.0, area = 0.0, own_len = 0.0;
    auto on_area = [&](std::size_t q, double a) {
        if (q == p) area += a;
    };
    auto on_couple = [&](std::size_t a, std::size_t b, double c) {
        if (a == p) flux += c * (u.values[p] - u.values[b]);
        if (b == p) flux += c * (u.values[p] - u.values[a]);
    };
    auto on_face = [&](std::size_t q, int fi, int fj, BoundaryTag t, int onx, int onz, double len) {
        if (q != p) return;
        if (t == tag) {
            own_len += len;
            return;
        }
        const auto& bc = bcs.get(t);
        const double data = bc.data({g.x(fi), g.z(fj), onx, onz});
        switch (bc.kind) {
            case BoundaryCondition::Kind::Dirichlet:
                throw std::invalid_argument("normal derivative requested at a Dirichlet node");
            case BoundaryCondition::Kind::Neumann:
                flux -= data * len;
                break;
            case BoundaryCondition::Kind::Robin:
                flux += (bc.coef * u.values[p] - data) * len;
                break;
        }
    };
    detail::CellKernel kernel{d};
    for (int cj = j - 1; cj <= j; ++cj)
        for (int ci = i - 1; ci <= i; ++ci)
            if (d.cell_active(ci, cj)) kernel(ci, cj, on_area, on_couple, on_face);
    if (own_len == 0.0) throw std::invalid_argument("node has no face with the requested tag");
    return (flux - F.values[p] * area) / own_len;
}

/// du/dx along the Interface column (x = x_min), from the discrete balance.
inline std::vector<double> interface_x_derivative(const Field2D& u, const Field2D& F, const BoundarySpec& bcs) {
    auto [lo, hi] = u.domain->column_range(0);
    std::vector<double> out;
    for (int j = lo; j <= hi; ++j)
        out.push_back(-balance_normal_derivative(u, F, bcs, 0, j, BoundaryTag::Interface));
    return out;
}

}  // namespace hetcouple
