#include "chimera/operators.hpp"
#include "chimera/reconstruction.hpp"
#include "gen.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace chimera;

namespace {

struct Stencil {
    Vec2 center;
    double h;
    std::vector<CellRef> members;
    std::vector<Vec2> offsets;
};

Stencil random_stencil(testgen::Rng& r, int n) {
    Stencil s;
    s.center = {r.uniform(-1, 1), r.uniform(-1, 1)};
    s.h = r.uniform(0.05, 0.3);
    for (int k = 0; k < n; ++k) {
        s.members.push_back({k + 1, {}});
        s.offsets.push_back(Vec2{r.uniform(-2, 2), r.uniform(-2, 2)} * s.h);
    }
    return s;
}

double quad(const double* q, Vec2 x) {
    return q[0] + q[1] * x.x + q[2] * x.y + q[3] * x.x * x.y + q[4] * x.x * x.x + q[5] * x.y * x.y;
}

} // namespace

TEST_CASE("constant data reconstructs to a constant") {
    testgen::Rng r(1);
    const Stencil s = random_stencil(r, 8);
    const LSFactor f = ls_factor(0, s.center, s.h, s.members, s.offsets);
    const P2Poly p = reconstruct_p2(f, 3.5, std::vector<double>(8, 3.5));
    CHECK(p.beta[0] == 3.5);
    for (int k = 1; k < 6; ++k) CHECK(std::abs(p.beta[k]) < 1e-12);
}

TEST_CASE("quadratics are reproduced at arbitrary points (property)") {
    testgen::Rng r(2);
    for (int trial = 0; trial < 200; ++trial) {
        const Stencil s = random_stencil(r, r.integer(6, 12));
        double q[6];
        for (double& v : q) v = r.uniform(-2, 2);
        std::vector<double> vals;
        for (const Vec2& o : s.offsets) vals.push_back(quad(q, s.center + o));
        const LSFactor f = ls_factor(0, s.center, s.h, s.members, s.offsets);
        const P2Poly p = reconstruct_p2(f, quad(q, s.center), vals);
        for (int k = 0; k < 5; ++k) {
            const Vec2 x = s.center + Vec2{r.uniform(-1, 1), r.uniform(-1, 1)} * s.h;
            CHECK(std::abs(p.eval(x) - quad(q, x)) <= 1e-11);
        }
    }
}

TEST_CASE("owner value is reproduced bitwise at the centroid") {
    testgen::Rng r(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Stencil s = random_stencil(r, 8);
        std::vector<double> vals;
        for (size_t k = 0; k < s.offsets.size(); ++k) vals.push_back(r.uniform(-1, 1));
        const double owner = r.uniform(-1, 1);
        const P2Poly p = reconstruct_p2(ls_factor(0, s.center, s.h, s.members, s.offsets), owner, vals);
        CHECK(p.eval(s.center) == owner);
    }
}

TEST_CASE("least-squares fit matches a dense solve") {
    testgen::Rng r(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Stencil s = random_stencil(r, 9);
        std::vector<double> vals;
        for (size_t k = 0; k < s.offsets.size(); ++k) vals.push_back(r.uniform(-1, 1));
        const double owner = r.uniform(-1, 1);
        const P2Poly p = reconstruct_p2(ls_factor(0, s.center, s.h, s.members, s.offsets), owner, vals);
        // Oracle: minimize sum (owner + z_j . beta - vals_j)^2 with z_j the scaled Taylor basis.
        Eigen::MatrixXd z(9, 5);
        Eigen::VectorXd rhs(9);
        for (int j = 0; j < 9; ++j) {
            const Vec2 d = s.offsets[j] / s.h;
            z.row(j) << d.x, d.y, d.x * d.y, 0.5 * d.x * d.x, 0.5 * d.y * d.y;
            rhs(j) = vals[j] - owner;
        }
        const Eigen::VectorXd beta = z.colPivHouseholderQr().solve(rhs);
        for (int k = 0; k < 5; ++k) CHECK(p.beta[k + 1] == doctest::Approx(beta(k)).epsilon(1e-9));
    }
}

TEST_CASE("square five-point stencils invert exactly") {
    testgen::Rng r(5);
    const Stencil s = random_stencil(r, 5);
    const LSFactor f = ls_factor(0, s.center, s.h, s.members, s.offsets);
    Eigen::MatrixXd z(5, 5);
    for (int j = 0; j < 5; ++j) {
        const auto b = p2_basis(s.offsets[j], s.h);
        for (int k = 0; k < 5; ++k) z(j, k) = b[k];
    }
    const Eigen::MatrixXd id = f.pinv * z;
    CHECK((id - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-10);
}

TEST_CASE("collinear stencils are rejected") {
    std::vector<CellRef> m;
    std::vector<Vec2> o;
    for (int k = 1; k <= 6; ++k) {
        m.push_back({k, {}});
        o.push_back({0.1 * k, 0.05 * k});
    }
    CHECK_THROWS_AS(ls_factor(0, {0, 0}, 0.1, m, o), Error);
}

TEST_CASE("gradient matches central differences") {
    testgen::Rng r(6);
    for (int trial = 0; trial < 50; ++trial) {
        P2Poly p;
        p.center = {r.uniform(-1, 1), r.uniform(-1, 1)};
        p.h = r.uniform(0.05, 0.5);
        for (double& b : p.beta) b = r.uniform(-1, 1);
        const Vec2 x = p.center + Vec2{r.uniform(-1, 1), r.uniform(-1, 1)} * p.h;
        const double eps = 1e-6 * p.h;
        const Vec2 fd{(p.eval(x + Vec2{eps, 0}) - p.eval(x - Vec2{eps, 0})) / (2 * eps),
                      (p.eval(x + Vec2{0, eps}) - p.eval(x - Vec2{0, eps})) / (2 * eps)};
        const Vec2 g = p.grad(x);
        CHECK(g.x == doctest::Approx(fd.x).epsilon(1e-6));
        CHECK(g.y == doctest::Approx(fd.y).epsilon(1e-6));
    }
    P2Poly lin;
    lin.h = 0.25;
    lin.beta = {0, 1, 0, 0, 0, 0};
    CHECK(lin.grad({0.3, -0.2}).x == doctest::Approx(4.0));
    CHECK(lin.grad({0.3, -0.2}).y == 0.0);
}

TEST_CASE("bilinear vertex fit matches a dense 4x4 solve on distorted meshes") {
    testgen::Rng r(7);
    for (int trial = 0; trial < 20; ++trial) {
        Grid g({testgen::distorted_box(r, 6, 6, 0.3)});
        const auto xv = g.initial_vertices();
        const Geometry geo = compute_geometry(g, xv);
        const std::vector<char> active(g.ncells(), 1);
        const double a = r.uniform(-1, 1), b = r.uniform(-1, 1), c = r.uniform(-1, 1), d = r.uniform(-1, 1);
        auto bil = [&](Vec2 x) { return a + b * x.x + c * x.y + d * x.x * x.y; };
        for (int v = 0; v < g.nverts(); ++v) {
            const DualCell dc = dual_cell(g, geo, v, active);
            if (!dc.interior) continue;
            std::array<double, 4> vals{};
            Eigen::Matrix4d m;
            Eigen::Vector4d rhs;
            for (int k = 0; k < 4; ++k) {
                const Vec2 x = geo.xc[dc.cells[k].cell] + dc.cells[k].shift;
                vals[k] = r.uniform(-1, 1);
                m.row(k) << 1.0, x.x, x.y, x.x * x.y;
                rhs(k) = vals[k];
            }
            const Eigen::Vector4d al = m.fullPivLu().solve(rhs);
            const Q1Poly q = vertex_q1(dc, vals);
            const Vec2 y = xv[v];
            CHECK(q.eval(y) == doctest::Approx(al(0) + al(1) * y.x + al(2) * y.y + al(3) * y.x * y.y).epsilon(1e-9));
            for (int k = 0; k < 4; ++k)
                CHECK(q.eval(geo.xc[dc.cells[k].cell] + dc.cells[k].shift) == doctest::Approx(vals[k]).epsilon(1e-10));
            // Bilinear data is reproduced everywhere.
            std::array<double, 4> bv{};
            for (int k = 0; k < 4; ++k) bv[k] = bil(geo.xc[dc.cells[k].cell] + dc.cells[k].shift);
            CHECK(std::abs(vertex_q1(dc, bv).eval(y) - bil(y)) < 1e-12);
        }
    }
}

TEST_CASE("uniform grid vertex value of x is exact") {
    Grid g({testgen::walled_box(4, 4)});
    const auto xv = g.initial_vertices();
    const Geometry geo = compute_geometry(g, xv);
    const int v = g.vert_id(0, 2, 2);
    const DualCell dc = dual_cell(g, geo, v, std::vector<char>(g.ncells(), 1));
    REQUIRE(dc.interior);
    CHECK(dc.centroid.x == doctest::Approx(xv[v].x));
    std::array<double, 4> vals{};
    for (int k = 0; k < 4; ++k) vals[k] = geo.xc[dc.cells[k].cell].x;
    CHECK(vertex_q1(dc, vals).eval(xv[v]) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("mirror-symmetric dual cells are degenerate") {
    // Four centroids symmetric about the diagonal leave the bilinear system singular.
    DualCell dc;
    dc.interior = true;
    for (int k = 0; k < 4; ++k) dc.cells.push_back({k, {}});
    dc.poly = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
    dc.centroid = {0.0, 0.0};
    dc.h = 1.0;
    CHECK_THROWS_AS(vertex_q1(dc, {1.0, 2.0, 3.0, 4.0}), Error);
}
