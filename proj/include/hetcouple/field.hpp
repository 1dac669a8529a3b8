#pragma once
// Grid-indexed scalar fields on the 1-D and 2-D grids.

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "hetcouple/geometry.hpp"

namespace hetcouple {

struct Field1D {
    Grid1D grid;
    std::vector<double> values;

    Field1D() = default;
    explicit Field1D(Grid1D g, double fill = 0.0) : grid(g), values(static_cast<std::size_t>(g.nodes()), fill) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    double back() const { return values.back(); }
};

/// Values are stored for every grid node; entries outside the active mask stay 0 and carry no meaning.
struct Field2D {
    std::shared_ptr<const Domain2D> domain;
    std::vector<double> values;

    Field2D() = default;
    explicit Field2D(std::shared_ptr<const Domain2D> d, double fill = 0.0)
        : domain(std::move(d)), values(domain->grid().node_count(), 0.0) {
        if (fill != 0.0) {
            const Grid2D& g = grid();
            for (std::size_t n = 0; n < values.size(); ++n)
                if (g.active[n]) values[n] = fill;
        }
    }

    const Grid2D& grid() const { return domain->grid(); }
    double& at(int i, int j) { return values[grid().index(i, j)]; }
    double at(int i, int j) const { return values[grid().index(i, j)]; }
};

using ScalarFunction2D = std::function<double(double x, double z)>;

inline Field1D sample(const Grid1D& g, const std::function<double(double)>& f) {
    Field1D out(g);
    for (int i = 0; i < g.nodes(); ++i) out[static_cast<std::size_t>(i)] = f(g.x(i));
    return out;
}

inline Field2D sample(std::shared_ptr<const Domain2D> d, const ScalarFunction2D& f) {
    Field2D out(std::move(d));
    const Grid2D& g = out.grid();
    for (int j = 0; j <= g.nz; ++j)
        for (int i = 0; i <= g.nx; ++i)
            if (g.node_active(i, j)) out.at(i, j) = f(g.x(i), g.z(j));
    return out;
}

/// Trapezoidal mean of uniformly spaced samples: (1/(n-1)) * (v0/2 + v1 + ... + v_{n-1}/2).
inline double trapezoid_mean(std::span<const double> v) {
    if (v.size() < 2) throw std::invalid_argument("trapezoid_mean needs at least two samples");
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
    return s / static_cast<double>(v.size() - 1);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Column i of a 2-D field over its active z-range.
inline std::vector<double> column_values(const Field2D& f, int i) {
    auto [lo, hi] = f.domain->column_range(i);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (int j = lo; j <= hi; ++j) out.push_back(f.at(i, j));
    return out;
}

}  // namespace hetcouple
