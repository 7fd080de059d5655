#include "gen.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace chimera;

TEST_CASE("cartesian block geometry") {
    Grid g({testgen::walled_box(4, 3, 0.0, 2.0, 0.0, 1.5)});
    const Geometry geo = compute_geometry(g, g.initial_vertices());
    double total = 0.0;
    for (int c = 0; c < g.ncells(); ++c) {
        CHECK(geo.area[c] == doctest::Approx(0.25));
        CHECK(geo.h[c] == doctest::Approx(0.5));
        total += geo.area[c];
    }
    CHECK(total == doctest::Approx(3.0));
    const Vec2 c0 = geo.xc[g.cell_id(0, 0, 0)];
    CHECK(c0.x == doctest::Approx(0.25));
    CHECK(c0.y == doctest::Approx(0.25));
}

TEST_CASE("area of distorted boxes is conserved") {
    testgen::Rng r(11);
    for (int k = 0; k < 20; ++k) {
        Grid g({testgen::distorted_box(r, r.integer(3, 10), r.integer(3, 10), 0.3)});
        const Geometry geo = compute_geometry(g, g.initial_vertices());
        double total = 0.0;
        for (double a : geo.area) {
            CHECK(a > 0.0);
            total += a;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("polygon area and centroid") {
    const std::vector<Vec2> tri{{0, 0}, {3, 0}, {0, 3}};
    CHECK(polygon_area(tri) == doctest::Approx(4.5));
    const Vec2 c = polygon_centroid(tri);
    CHECK(c.x == doctest::Approx(1.0));
    CHECK(c.y == doctest::Approx(1.0));
}

TEST_CASE("periodic offsets wrap with image shifts") {
    Grid g({testgen::periodic_box(4, 4)});
    const auto ref = g.offset_cell(g.cell_id(0, 3, 0), 1, 0);
    REQUIRE(ref.has_value());
    CHECK(ref->cell == g.cell_id(0, 0, 0));
    CHECK(ref->shift.x == doctest::Approx(1.0));
    CHECK(g.moore(g.cell_id(0, 0, 0)).size() == 8);
}

TEST_CASE("constant mesh velocity moves every vertex by dt*w") {
    testgen::Rng r(5);
    for (int k = 0; k < 10; ++k) {
        Block b = testgen::distorted_box(r, 5, 5, 0.2);
        const Vec2 w{r.uniform(-2, 2), r.uniform(-2, 2)};
        b.motion = MotionLaw::translation([w](double) { return w; });
        Grid g({b});
        const auto x0 = g.initial_vertices();
        const double dt = r.uniform(0.01, 0.5);
        const auto x1 = advance_vertices(g, x0, 0.0, dt);
        for (size_t v = 0; v < x0.size(); ++v) {
            CHECK(x1[v].x - x0[v].x == doctest::Approx(dt * w.x).epsilon(1e-13));
            CHECK(x1[v].y - x0[v].y == doctest::Approx(dt * w.y).epsilon(1e-13));
        }
    }
}

TEST_CASE("implicit rotation step stays on the circle") {
    const MotionLaw law = MotionLaw::rotation({0.0, 0.0}, 1.0);
    const Vec2 base{1.0, 0.0};
    const double dt = 0.1;
    const Vec2 x = implicit_vertex_step(law, base, 0.0, dt);
    // The fixed point satisfies x = base + dt * w(x).
    const Vec2 w = law(x, 0.0);
    CHECK(x.x == doctest::Approx(base.x + dt * w.x).epsilon(1e-12));
    CHECK(x.y == doctest::Approx(base.y + dt * w.y).epsilon(1e-12));
}

TEST_CASE("polar block wraps around the circle") {
    const Block b = make_polar_block({0.0, 0.0}, {0.5, 0.6, 0.75}, 16);
    Grid g({b});
    const Geometry geo = compute_geometry(g, g.initial_vertices());
    double total = 0.0;
    for (double a : geo.area) total += a;
    // Polygonal annulus between inscribed 16-gons.
    const double poly = 0.5 * 16 * std::sin(2 * std::numbers::pi / 16);
    CHECK(total == doctest::Approx(poly * (0.75 * 0.75 - 0.25)).epsilon(1e-12));
}

TEST_CASE("block descriptions") {
    const Block b = parse_block_description("-1 1 -0.5 0.5 8 4");
    CHECK(b.ni == 8);
    CHECK(b.nj == 4);
    CHECK_FALSE(b.background);
    CHECK(b.motion.kind == MotionKind::None);
    CHECK(b.x0[b.vid(8, 4)].x == 1.0);
    CHECK(b.x0[b.vid(8, 4)].y == 0.5);

    const Block r = parse_block_description("0 2 0 2 4 4 rotate=1.5707963267948966 motion=rotation:1:1:-0.5");
    // A quarter turn about (1, 1) takes the corner (0, 0) to (2, 0).
    CHECK(r.x0[r.vid(0, 0)].x == doctest::Approx(2.0));
    CHECK(std::abs(r.x0[r.vid(0, 0)].y) < 1e-14);
    CHECK(r.motion.kind == MotionKind::Rotation);
    const Vec2 w = r.motion({2.0, 1.0}, 0.0);
    CHECK(w.x == doctest::Approx(0.0));
    CHECK(w.y == doctest::Approx(-0.5));

    const Block t = parse_block_description("0 1 0 1 5 5 perturb=0.2 seed=7 motion=translation:0.3:-0.1");
    CHECK(t.motion({0.4, 0.4}, 3.0).x == 0.3);
    const Block t2 = parse_block_description("0 1 0 1 5 5 perturb=0.2 seed=7");
    for (int v = 0; v < t.nverts(); ++v) CHECK(t.x0[v] == t2.x0[v]);
    double moved = 0.0;
    const Block flat = parse_block_description("0 1 0 1 5 5");
    for (int v = 0; v < t.nverts(); ++v) moved = std::max(moved, norm(t.x0[v] - flat.x0[v]));
    CHECK(moved == doctest::Approx(0.2 * 0.2));

    for (const char* bad : {"0 1 0 1 5", "1 0 0 1 5 5", "0 1 0 1 5 0", "0 1 0 1 2.5 3", "0 1 0 1 5 5 spin=2",
                            "0 1 0 1 5 5 motion=warp", "0 1 0 1 5 5 motion=translation:1", "0 1 0 1 5 5 perturb=0.7",
                            "0 1 0 x 5 5"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(parse_block_description(bad), Error);
    }
}
