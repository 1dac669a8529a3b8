#pragma once
/**
 * @file geometry.hpp
 * @brief Rectilinear computational domains (rectangle, stepped funnel),
 * uniform node grids, boundary tagging and the 1-D / 2-D split at x = L0.
 *
 * The active region of a domain is a union of axis-aligned cell rectangles
 * expressed in grid index space, so every boundary edge lies on a grid line.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace hetcouple {

enum class BoundaryTag { Left, Right, Top, Bottom, Interface };

inline const char* to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::Left: return "left";
        case BoundaryTag::Right: return "right";
        case BoundaryTag::Top: return "top";
        case BoundaryTag::Bottom: return "bottom";
        case BoundaryTag::Interface: return "interface";
    }
    return "?";
}

/// Outward direction of a boundary edge.
enum class Side { West, East, South, North };

/// Uniform node grid: node (i, j) sits at (x0 + i*hx, z0 + j*hz).
struct Grid2D {
    int nx = 0;  ///< cells along x
    int nz = 0;  ///< cells along z
    double hx = 0.0;
    double hz = 0.0;
    double x0 = 0.0;
    double z0 = 0.0;
    std::vector<std::uint8_t> active;  ///< per-node flag, size (nx+1)*(nz+1)

    int nodes_x() const { return nx + 1; }
    int nodes_z() const { return nz + 1; }
    std::size_t node_count() const {
        return static_cast<std::size_t>(nodes_x()) * static_cast<std::size_t>(nodes_z());
    }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nodes_x()) +
               static_cast<std::size_t>(i);
    }
    double x(int i) const { return x0 + i * hx; }
    double z(int j) const { return z0 + j * hz; }
    bool node_active(int i, int j) const {
        return i >= 0 && j >= 0 && i <= nx && j <= nz && active[index(i, j)] != 0;
    }
    std::size_t active_count() const {
        std::size_t n = 0;
        for (auto a : active) n += a != 0;
        return n;
    }
};

/// Half-open block of cells [i0, i1) x [j0, j1) in cell index space.
struct CellRect {
    int i0, i1, j0, j1;
};

struct RectangleShape {
    double L;
    double H;
};

struct FunnelShape {
    double channel_len;
    double H;
    double expansion_len;
    double l;
};

/// Shape of the physical domain, or of the Omega_2 part left after a split.
using ShapeDescriptor = std::variant<RectangleShape, FunnelShape>;

struct BoundaryEdge {
    int i0, j0, i1, j1;  ///< end nodes
    Side outward;
    BoundaryTag tag;
};

class Domain2D {
public:
    Domain2D() = default;

    Domain2D(Grid2D grid, std::vector<CellRect> cells, ShapeDescriptor shape, bool left_is_interface)
        : grid_(std::move(grid)),
          rects_(std::move(cells)),
          shape_(shape),
          left_is_interface_(left_is_interface) {
        cell_active_.assign(static_cast<std::size_t>(grid_.nx) * grid_.nz, 0);
        grid_.active.assign(grid_.node_count(), 0);
        for (const auto& r : rects_) {
            if (r.i0 < 0 || r.j0 < 0 || r.i1 > grid_.nx || r.j1 > grid_.nz || r.i0 >= r.i1 || r.j0 >= r.j1)
                throw std::invalid_argument("cell rectangle outside grid");
            for (int j = r.j0; j < r.j1; ++j)
                for (int i = r.i0; i < r.i1; ++i) {
                    cell_active_[cell_index(i, j)] = 1;
                    for (int dj = 0; dj <= 1; ++dj)
                        for (int di = 0; di <= 1; ++di) grid_.active[grid_.index(i + di, j + dj)] = 1;
                }
        }
    }

    const Grid2D& grid() const { return grid_; }
    const std::vector<CellRect>& cell_rects() const { return rects_; }
    const ShapeDescriptor& shape() const { return shape_; }
    bool left_is_interface() const { return left_is_interface_; }

    bool cell_active(int i, int j) const {
        return i >= 0 && j >= 0 && i < grid_.nx && j < grid_.nz && cell_active_[cell_index(i, j)] != 0;
    }

    double x_min() const { return grid_.x0; }
    double x_max() const { return grid_.x(grid_.nx); }

    /// Tag of the boundary edge of cell (i, j) on the given side.
    BoundaryTag tag_for(int i, int j, Side side) const {
        switch (side) {
            case Side::West:
                if (i == 0) return left_is_interface_ ? BoundaryTag::Interface : BoundaryTag::Left;
                return BoundaryTag::Top;
            case Side::East:
                if (i + 1 == grid_.nx) return BoundaryTag::Right;
                return BoundaryTag::Top;
            case Side::South:
                if (j == 0) return BoundaryTag::Bottom;
                return BoundaryTag::Top;
            case Side::North:
                return BoundaryTag::Top;
        }
        return BoundaryTag::Top;
    }

    /// Every boundary edge of the active region, each listed once with its tag.
    std::vector<BoundaryEdge> boundary_edges() const {
        std::vector<BoundaryEdge> edges;
        for (int j = 0; j < grid_.nz; ++j)
            for (int i = 0; i < grid_.nx; ++i) {
                if (!cell_active(i, j)) continue;
                if (!cell_active(i - 1, j)) edges.push_back({i, j, i, j + 1, Side::West, tag_for(i, j, Side::West)});
                if (!cell_active(i + 1, j))
                    edges.push_back({i + 1, j, i + 1, j + 1, Side::East, tag_for(i, j, Side::East)});
                if (!cell_active(i, j - 1))
                    edges.push_back({i, j, i + 1, j, Side::South, tag_for(i, j, Side::South)});
                if (!cell_active(i, j + 1))
                    edges.push_back({i, j + 1, i + 1, j + 1, Side::North, tag_for(i, j, Side::North)});
            }
        return edges;
    }

    /// Active node range [j_lo, j_hi] of column i (columns are contiguous for these shapes).
    std::pair<int, int> column_range(int i) const {
        int lo = -1, hi = -1;
        for (int j = 0; j <= grid_.nz; ++j)
            if (grid_.node_active(i, j)) {
                if (lo < 0) lo = j;
                hi = j;
            }
        if (lo < 0) throw std::invalid_argument("empty grid column");
        return {lo, hi};
    }

private:
    std::size_t cell_index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(grid_.nx) + static_cast<std::size_t>(i);
    }

    Grid2D grid_;
    std::vector<CellRect> rects_;
    std::vector<std::uint8_t> cell_active_;
    ShapeDescriptor shape_ = RectangleShape{0.0, 0.0};
    bool left_is_interface_ = false;
};

/// Uniform 1-D node grid on [x0, x0 + cells*h].
struct Grid1D {
    int cells = 0;
    double h = 0.0;
    double x0 = 0.0;

    int nodes() const { return cells + 1; }
    double x(int i) const { return x0 + i * h; }
};

struct DomainSplit {
    Grid1D omega1;     ///< 1-D grid on (0, L0)
    Domain2D omega2;   ///< full domain restricted to x > L0, left edge tagged Interface
    Domain2D full;     ///< the unsplit domain
    double L0 = 0.0;
    int interface_column = 0;  ///< column index of x = L0 in the full grid
    double H = 0.0;            ///< height of the shallow part
};

namespace detail {

/// Returns n when length == n*h up to round-off, otherwise -1.
inline int exact_multiple(double length, double h) {
    const double q = length / h;
    const double n = std::round(q);
    if (n < 1 || std::abs(q - n) > 1e-9 * std::max(1.0, n)) return -1;
    return static_cast<int>(n);
}

}  // namespace detail

/// Column index of the grid line x, or -1 when x is off-grid or outside.
inline int column_at(const Grid2D& g, double x) {
    const double q = (x - g.x0) / g.hx;
    const double n = std::round(q);
    if (std::abs(q - n) > 1e-9 * std::max(1.0, std::abs(n)) || n < 0 || n > g.nx) return -1;
    return static_cast<int>(n);
}

inline Domain2D build_rectangle(double L, double H, int nx, int nz) {
    if (!(L > 0) || !(H > 0)) throw std::invalid_argument("rectangle dimensions must be positive");
    if (nx < 2 || nz < 2) throw std::invalid_argument("rectangle needs at least 2 cells per direction");
    Grid2D g;
    g.nx = nx;
    g.nz = nz;
    g.hx = L / nx;
    g.hz = H / nz;
    return Domain2D(std::move(g), {{0, nx, 0, nz}}, RectangleShape{L, H}, false);
}

/// Narrow channel [0, channel_len] x [0, H] joined to the box
/// [channel_len, channel_len + expansion_len] x [0, l].
inline Domain2D build_funnel(double channel_len, double H, double expansion_len, double l, double hx, double hz) {
    if (!(channel_len > 0) || !(H > 0) || !(expansion_len > 0) || !(l > 0) || !(hx > 0) || !(hz > 0))
        throw std::invalid_argument("funnel lengths and spacings must be positive");
    if (l < H) throw std::invalid_argument("funnel requires l >= H");
    const int nc = detail::exact_multiple(channel_len, hx);
    const int ne = detail::exact_multiple(expansion_len, hx);
    const int nh = detail::exact_multiple(H, hz);
    const int nl = detail::exact_multiple(l, hz);
    if (nc < 1 || ne < 1 || nh < 1 || nl < 1)
        throw std::invalid_argument("funnel extents must be integer multiples of the grid spacings");
    if (nc + ne < 2 || nl < 2) throw std::invalid_argument("funnel grid too coarse");
    Grid2D g;
    g.nx = nc + ne;
    g.nz = nl;
    g.hx = hx;
    g.hz = hz;
    std::vector<CellRect> cells;
    cells.push_back({0, nc, 0, nh});
    cells.push_back({nc, nc + ne, 0, nl});
    return Domain2D(std::move(g), std::move(cells), FunnelShape{channel_len, H, expansion_len, l}, false);
}

/// Height of the shallow (channel) part.
inline double shallow_height(const Domain2D& d) {
    return std::visit([](const auto& s) { return s.H; }, d.shape());
}

/// x-extent of the shallow part, measured from x = 0.
inline double shallow_length(const Domain2D& d) {
    struct V {
        double operator()(const RectangleShape& r) const { return r.L; }
        double operator()(const FunnelShape& f) const { return f.channel_len; }
    };
    return std::visit(V{}, d.shape());
}

inline DomainSplit split_at_interface(const Domain2D& domain, double L0) {
    const Grid2D& g = domain.grid();
    if (!(L0 > 0) || !(L0 < shallow_length(domain)))
        throw std::invalid_argument("interface must lie strictly inside the shallow part");
    const int k = detail::exact_multiple(L0 - g.x0, g.hx);
    if (k < 1 || k >= g.nx) throw std::invalid_argument("interface abscissa is not a grid line");

    DomainSplit s;
    s.L0 = L0;
    s.interface_column = k;
    s.full = domain;
    s.H = shallow_height(domain);
    s.omega1 = Grid1D{k, g.hx, g.x0};

    Grid2D g2;
    g2.nx = g.nx - k;
    g2.nz = g.nz;
    g2.hx = g.hx;
    g2.hz = g.hz;
    g2.x0 = g.x0 + k * g.hx;
    g2.z0 = g.z0;
    std::vector<CellRect> cells;
    for (const auto& r : domain.cell_rects()) {
        if (r.i1 <= k) continue;
        cells.push_back({std::max(r.i0, k) - k, r.i1 - k, r.j0, r.j1});
    }
    struct Restrict {
        double L0;
        ShapeDescriptor operator()(const RectangleShape& r) const { return RectangleShape{r.L - L0, r.H}; }
        ShapeDescriptor operator()(const FunnelShape& f) const {
            return FunnelShape{f.channel_len - L0, f.H, f.expansion_len, f.l};
        }
    };
    s.omega2 = Domain2D(std::move(g2), std::move(cells), std::visit(Restrict{L0}, domain.shape()), true);
    return s;
}

/// Active-node mask of the full grid rebuilt from the two halves of a split:
/// the Omega_1 footprint (columns 0..k of the full domain) and Omega_2 shifted back.
inline std::vector<std::uint8_t> merge_active_mask(const DomainSplit& s) {
    const Grid2D& g = s.full.grid();
    const Grid2D& g2 = s.omega2.grid();
    std::vector<std::uint8_t> mask(g.node_count(), 0);
    const int k = s.interface_column;
    for (const auto& r : s.full.cell_rects()) {
        if (r.i0 >= k) continue;
        for (int j = r.j0; j <= r.j1; ++j)
            for (int i = r.i0; i <= std::min(r.i1, k); ++i) mask[g.index(i, j)] = 1;
    }
    for (int j = 0; j <= g2.nz; ++j)
        for (int i = 0; i <= g2.nx; ++i)
            if (g2.node_active(i, j)) mask[g.index(i + k, j)] = 1;
    return mask;
}

}  // namespace hetcouple
