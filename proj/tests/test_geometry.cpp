#include <gtest/gtest.h>

#include <map>
#include <set>
#include <tuple>

#include "hetcouple/geometry.hpp"

using namespace hetcouple;

TEST(BuildRectangle, FirstTestCaseGrid) {
    const auto d = build_rectangle(20, 0.5, 400, 10);
    EXPECT_DOUBLE_EQ(d.grid().hx, 0.05);
    EXPECT_DOUBLE_EQ(d.grid().hz, 0.05);
    EXPECT_EQ(d.grid().active_count(), 401u * 11u);
    EXPECT_DOUBLE_EQ(d.x_max(), 20.0);
}

TEST(BuildRectangle, SmallestLegalGrid) {
    const auto d = build_rectangle(1, 1, 2, 2);
    EXPECT_EQ(d.grid().node_count(), 9u);
    EXPECT_DOUBLE_EQ(d.grid().hx, 0.5);
    EXPECT_DOUBLE_EQ(d.grid().hz, 0.5);
}

TEST(BuildRectangle, ChannelSpacing) {
    const auto d = build_rectangle(2, 0.05, 400, 10);
    EXPECT_DOUBLE_EQ(d.grid().hx, 0.005);
    EXPECT_DOUBLE_EQ(d.grid().hz, 0.005);
}

TEST(BuildRectangle, RejectsBadInput) {
    EXPECT_THROW(build_rectangle(0, 1, 4, 4), std::invalid_argument);
    EXPECT_THROW(build_rectangle(1, -1, 4, 4), std::invalid_argument);
    EXPECT_THROW(build_rectangle(1, 1, 1, 4), std::invalid_argument);
    EXPECT_THROW(build_rectangle(1, 1, 4, 1), std::invalid_argument);
}

TEST(BuildFunnel, SteppedExpansion) {
    const auto d = build_funnel(2, 0.05, 1, 3, 0.01, 0.01);
    const auto& g = d.grid();
    EXPECT_EQ(g.nx, 300);
    EXPECT_EQ(g.nz, 300);
    EXPECT_TRUE(g.node_active(200, 300));
    EXPECT_TRUE(g.node_active(199, 5));
    EXPECT_FALSE(g.node_active(199, 6));
    EXPECT_EQ(g.active_count(), 200u * 6u + 101u * 301u);

    // wall of the expansion belongs to Top, far end to Right, the whole floor to Bottom
    for (const auto& e : d.boundary_edges()) {
        if (e.outward == Side::West && e.i0 == 200) { EXPECT_EQ(e.tag, BoundaryTag::Top); }
        if (e.outward == Side::East) { EXPECT_EQ(e.tag, BoundaryTag::Right); }
        if (e.outward == Side::South) { EXPECT_EQ(e.tag, BoundaryTag::Bottom); }
    }
}

TEST(BuildFunnel, DegeneratesToRectangle) {
    const auto d = build_funnel(1, 1, 1, 1, 0.5, 0.5);
    EXPECT_EQ(d.grid().active_count(), d.grid().node_count());
}

TEST(BuildFunnel, RejectsMisalignedExtents) {
    EXPECT_THROW(build_funnel(2, 0.05, 1, 3, 0.03, 0.03), std::invalid_argument);
    EXPECT_THROW(build_funnel(2, 0.5, 1, 0.25, 0.05, 0.05), std::invalid_argument);
}

TEST(SplitAtInterface, Rectangle) {
    const auto d = build_rectangle(20, 0.5, 400, 10);
    const auto s = split_at_interface(d, 16);
    EXPECT_EQ(s.omega1.cells, 320);
    EXPECT_DOUBLE_EQ(s.omega1.x(s.omega1.cells), 16.0);
    EXPECT_EQ(s.omega2.grid().nx, 80);
    EXPECT_DOUBLE_EQ(s.omega2.x_min(), 16.0);
    EXPECT_DOUBLE_EQ(s.omega2.x_max(), 20.0);
    EXPECT_DOUBLE_EQ(s.H, 0.5);
    EXPECT_EQ(s.omega1.nodes() + s.omega2.grid().nodes_x(), d.grid().nodes_x() + 1);
}

TEST(SplitAtInterface, Funnel) {
    const auto d = build_funnel(2, 0.05, 1, 3, 0.005, 0.005);
    const auto s = split_at_interface(d, 1.5);
    EXPECT_EQ(s.omega1.cells, 300);
    EXPECT_DOUBLE_EQ(s.omega2.x_min(), 1.5);
    EXPECT_EQ(s.omega2.column_range(0), std::make_pair(0, 10));
    EXPECT_EQ(s.omega2.column_range(s.omega2.grid().nx), std::make_pair(0, 600));
}

TEST(SplitAtInterface, RejectsBadInterface) {
    const auto d = build_rectangle(20, 0.5, 400, 10);
    EXPECT_THROW(split_at_interface(d, 16.013), std::invalid_argument);
    EXPECT_THROW(split_at_interface(d, 0.0), std::invalid_argument);
    EXPECT_THROW(split_at_interface(d, 20.0), std::invalid_argument);
    const auto f = build_funnel(2, 0.05, 1, 3, 0.01, 0.01);
    EXPECT_THROW(split_at_interface(f, 2.5), std::invalid_argument);
}

class SplitRoundTrip : public ::testing::TestWithParam<std::tuple<bool, double>> {};

TEST_P(SplitRoundTrip, MergeReproducesMask) {
    const auto [funnel, L0] = GetParam();
    const auto d = funnel ? build_funnel(2, 0.05, 1, 3, 0.05, 0.05) : build_rectangle(20, 0.5, 40, 5);
    const auto s = split_at_interface(d, L0);
    EXPECT_EQ(merge_active_mask(s), d.grid().active);
}

INSTANTIATE_TEST_SUITE_P(Geometries, SplitRoundTrip,
                         ::testing::Values(std::make_tuple(false, 0.5), std::make_tuple(false, 16.0),
                                           std::make_tuple(false, 19.5), std::make_tuple(true, 0.05),
                                           std::make_tuple(true, 1.5), std::make_tuple(true, 1.95)));

namespace {

using EdgeKey = std::tuple<int, int, int, int>;

/// Every unit boundary edge of the active region, computed from the cell mask alone.
std::set<EdgeKey> mask_edges(const Domain2D& d) {
    std::set<EdgeKey> out;
    const auto& g = d.grid();
    for (int j = 0; j < g.nz; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (!d.cell_active(i, j)) continue;
            if (!d.cell_active(i - 1, j)) out.insert({i, j, i, j + 1});
            if (!d.cell_active(i + 1, j)) out.insert({i + 1, j, i + 1, j + 1});
            if (!d.cell_active(i, j - 1)) out.insert({i, j, i + 1, j});
            if (!d.cell_active(i, j + 1)) out.insert({i, j + 1, i + 1, j + 1});
        }
    return out;
}

void expect_partition(const Domain2D& d, bool interface_expected) {
    std::map<EdgeKey, int> seen;
    bool has_interface = false;
    for (const auto& e : d.boundary_edges()) {
        ++seen[{e.i0, e.j0, e.i1, e.j1}];
        has_interface = has_interface || e.tag == BoundaryTag::Interface;
        if (e.tag == BoundaryTag::Interface) { EXPECT_EQ(e.i0, 0); }
    }
    const auto expected = mask_edges(d);
    EXPECT_EQ(seen.size(), expected.size());
    for (const auto& [k, n] : seen) {
        EXPECT_EQ(n, 1);
        EXPECT_TRUE(expected.count(k));
    }
    EXPECT_EQ(has_interface, interface_expected);
}

}  // namespace

TEST(BoundaryTags, PartitionTheBoundary) {
    for (const auto& d : {build_rectangle(2, 0.5, 8, 4), build_funnel(1, 0.25, 0.5, 1, 0.125, 0.125)}) {
        expect_partition(d, false);
        const auto s = split_at_interface(d, 0.5);
        expect_partition(s.omega2, true);
    }
}

TEST(BoundaryTags, RectangleLayout) {
    const auto d = build_rectangle(2, 1, 4, 2);
    EXPECT_EQ(d.tag_for(0, 0, Side::West), BoundaryTag::Left);
    EXPECT_EQ(d.tag_for(3, 1, Side::East), BoundaryTag::Right);
    EXPECT_EQ(d.tag_for(1, 0, Side::South), BoundaryTag::Bottom);
    EXPECT_EQ(d.tag_for(1, 1, Side::North), BoundaryTag::Top);
    EXPECT_STREQ(to_string(BoundaryTag::Interface), "interface");
}
