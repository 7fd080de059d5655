#include "chimera/operators.hpp"
#include "chimera/overset.hpp"
#include "gen.hpp"

#include <doctest.h>

#include <cmath>

using namespace chimera;

namespace {

/// Background [0,1]^2 with n cells per side and a foreground sharing its vertices over [lo, hi] cells.
std::vector<Block> aligned_pair(int n, int lo, int hi) {
    const double h = 1.0 / n;
    Block bg = testgen::walled_box(n, n);
    Block fg = make_cartesian_block(lo * h, hi * h, lo * h, hi * h, hi - lo, hi - lo);
    fg.background = false;
    return {bg, fg};
}

} // namespace

TEST_CASE("point in polygon for either orientation") {
    const std::vector<Vec2> ccw{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const std::vector<Vec2> cw(ccw.rbegin(), ccw.rend());
    for (const auto* poly : {&ccw, &cw}) {
        CHECK(point_in_polygon(*poly, {0.5, 0.5}));
        CHECK(point_in_polygon(*poly, {1.0, 0.5}));
        CHECK_FALSE(point_in_polygon(*poly, {1.5, 0.5}));
        CHECK_FALSE(point_in_polygon(*poly, {-0.1, -0.1}));
    }
}

TEST_CASE("centroid bins agree with brute force (property)") {
    testgen::Rng r(31);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vec2> pts;
        std::vector<int> ids;
        const int n = r.integer(1, 200);
        for (int k = 0; k < n; ++k) {
            pts.push_back({r.uniform(-3, 3), r.uniform(-1, 2)});
            ids.push_back(3 * k + 1);
        }
        const CentroidBins bins(pts, ids, r.uniform(0.05, 1.0));
        for (int q = 0; q < 20; ++q) {
            const Vec2 p{r.uniform(-4, 4), r.uniform(-2, 3)};
            int best = -1;
            double bd = 1e300;
            for (int k = 0; k < n; ++k) {
                const double d = norm(pts[k] - p);
                if (d < bd || (d == bd && ids[k] < best)) {
                    bd = d;
                    best = ids[k];
                }
            }
            CHECK(bins.nearest(p) == best);
            const double rad = r.uniform(0.0, 1.5);
            auto got = bins.within(p, rad);
            std::sort(got.begin(), got.end());
            std::vector<int> want;
            for (int k = 0; k < n; ++k)
                if (norm(pts[k] - p) < rad) want.push_back(ids[k]);
            CHECK(got == want);
        }
    }
}

TEST_CASE("classification rings on aligned blocks") {
    // 12x12 covered background cells: two field rings, two fringe rings, the 4x4 core is a hole.
    Grid g(aligned_pair(24, 6, 18));
    const Geometry geo = compute_geometry(g, g.initial_vertices());
    const auto cls = classify(g, geo, 2);
    int bg_fringe = 0, bg_hole = 0, fg_fringe = 0, fg_field = 0;
    for (int c = 0; c < g.ncells(); ++c) {
        if (g.is_background(c)) {
            bg_fringe += cls[c] == CellClass::Fringe;
            bg_hole += cls[c] == CellClass::Hole;
        } else {
            fg_fringe += cls[c] == CellClass::Fringe;
            fg_field += cls[c] == CellClass::Field;
        }
    }
    CHECK(bg_hole == 16);
    CHECK(bg_fringe == 28 + 20);
    CHECK(fg_fringe == 44 + 36);
    CHECK(fg_field == 64);
    CHECK(to_string(CellClass::Hole) != nullptr);
}

TEST_CASE("fringe rows reduce to the identity on coincident centroids") {
    auto g = std::make_shared<const Grid>(aligned_pair(24, 6, 18));
    const auto f = make_frame(*g, g->initial_vertices(), 0.0, 2);
    testgen::Rng r(32);
    std::vector<double> phi(g->ncells());
    for (auto& v : phi) v = r.uniform(-1, 1);
    int seen = 0;
    for (int k = 0; k < g->ncells(); ++k) {
        if (f->st.cls[k] != CellClass::Fringe) continue;
        const int d = f->st.donor[k];
        REQUIRE(d >= 0);
        CHECK(g->is_background(d) != g->is_background(k));
        CHECK(f->st.field(d));
        if (norm(f->geo.xc[k] - f->geo.xc[d]) > 1e-13) continue;
        ++seen;
        const RowStencil row = fringe_row(*f, k);
        CHECK(row.coefficient(k) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(row.coefficient(d) == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(std::abs(row.apply(phi) - (phi[k] - phi[d])) < 1e-12);
    }
    CHECK(seen > 0);
}

TEST_CASE("fringe rows reproduce quadratics on misaligned blocks") {
    Block bg = testgen::walled_box(30, 30);
    Block fg = make_cartesian_block(0.31, 0.69, 0.28, 0.71, 11, 12);
    fg.background = false;
    rotate_block(fg, {0.5, 0.5}, 0.3);
    auto g = std::make_shared<const Grid>(std::vector<Block>{bg, fg});
    const auto f = make_frame(*g, g->initial_vertices(), 0.0, 2);
    std::vector<double> phi(g->ncells());
    for (int c = 0; c < g->ncells(); ++c) {
        const Vec2 x = f->geo.xc[c];
        phi[c] = 1.0 + x.x - 2.0 * x.y + 0.5 * x.x * x.y + x.x * x.x - 0.3 * x.y * x.y;
    }
    int rows = 0;
    for (int k = 0; k < g->ncells(); ++k) {
        if (f->st.cls[k] != CellClass::Fringe) continue;
        ++rows;
        CHECK(std::abs(fringe_row(*f, k).apply(phi)) < 1e-11);
    }
    CHECK(rows > 0);
}

TEST_CASE("reconcile keeps surviving values and fills born cells") {
    Block bg = testgen::walled_box(24, 24);
    Block fg = make_cartesian_block(0.2, 0.7, 0.2, 0.7, 14, 14);
    fg.background = false;
    Grid g({bg, fg});
    auto x0 = g.initial_vertices();
    auto x1 = x0;
    for (int v = g.vert_offset(1); v < g.nverts(); ++v) x1[v] += Vec2{0.12, 0.05};
    const Geometry g0 = compute_geometry(g, x0), g1 = compute_geometry(g, x1);
    const OversetState s0 = build_overset(g, g0, 2), s1 = build_overset(g, g1, 2);
    std::vector<double> phi(g.ncells());
    for (int c = 0; c < g.ncells(); ++c) phi[c] = s0.active(c) ? 2.0 + g0.xc[c].x : 0.0;
    const auto before = phi;
    const auto rep = reconcile(g, g0, s0, g1, s1, {&phi});
    CHECK(!rep.born.empty());
    CHECK(!rep.dead.empty());
    for (int c = 0; c < g.ncells(); ++c) {
        if (s0.active(c) && s1.active(c)) CHECK(phi[c] == before[c]);
        if (!s1.active(c)) CHECK(phi[c] == 0.0);
    }
    // Linear data is carried exactly to the born cells.
    for (int c : rep.born) CHECK(phi[c] == doctest::Approx(2.0 + g1.xc[c].x).epsilon(1e-10));
}
