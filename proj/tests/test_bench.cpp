#include "chimera/bench.hpp"
#include "gen.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace chimera;

namespace {

constexpr double kPi = std::numbers::pi;

/// Residuals of the incompressible equations for a solution (x, t) -> (u, v, p) by central differences.
std::array<double, 3> ns_residual(const ExactSolution& s, Vec2 x, double t, double re) {
    const double e = 1e-4;
    auto at = [&](double dx, double dy, double dt) { return s({x.x + dx, x.y + dy}, t + dt); };
    const auto c = at(0, 0, 0), xp = at(e, 0, 0), xm = at(-e, 0, 0), yp = at(0, e, 0), ym = at(0, -e, 0);
    const auto tp = at(0, 0, e), tm = at(0, 0, -e);
    std::array<double, 3> r{};
    for (int k = 0; k < 2; ++k) {
        const double dt = (tp[k] - tm[k]) / (2 * e);
        const double dx = (xp[k] - xm[k]) / (2 * e), dy = (yp[k] - ym[k]) / (2 * e);
        const double lap = (xp[k] + xm[k] + yp[k] + ym[k] - 4 * c[k]) / (e * e);
        const double dp = k == 0 ? (xp[2] - xm[2]) / (2 * e) : (yp[2] - ym[2]) / (2 * e);
        r[k] = dt + c[0] * dx + c[1] * dy + dp - lap / re;
    }
    r[2] = (xp[0] - xm[0]) / (2 * e) + (yp[1] - ym[1]) / (2 * e);
    return r;
}

std::vector<ForceRecord> signal(double t1, double dt, const std::function<double(double)>& cl) {
    std::vector<ForceRecord> h;
    for (int k = 0; k * dt <= t1; ++k) h.push_back({k * dt, 1.0, cl(k * dt)});
    return h;
}

} // namespace

TEST_CASE("taylor-green and poiseuille solve the incompressible equations") {
    testgen::Rng r(61);
    for (double re : {10.0, 1000.0}) {
        const ExactSolution tg = [re](Vec2 x, double t) { return exact_taylor_green(x, t, re); };
        const ExactSolution pois = [re](Vec2 x, double) { return exact_poiseuille(x, re); };
        for (int k = 0; k < 20; ++k) {
            const Vec2 x{r.uniform(0, 2 * kPi), r.uniform(0, 2 * kPi)};
            const double t = r.uniform(0, 1);
            for (double v : ns_residual(tg, x, t, re)) CHECK(std::abs(v) < 1e-5);
            for (double v : ns_residual(pois, {x.x / 6, x.y / 6}, t, re)) CHECK(std::abs(v) < 1e-5);
        }
    }
    CHECK(exact_poiseuille({0.3, 0.0}, 100.0)[0] == 0.0);
    CHECK(exact_poiseuille({0.3, 1.0}, 100.0)[0] == 0.0);
    CHECK(exact_poiseuille({0.3, 0.5}, 100.0)[0] == doctest::Approx(0.25));
}

TEST_CASE("l2 error of a constant offset") {
    testgen::Rng r(62);
    auto grid = std::make_shared<const Grid>(std::vector<Block>{testgen::distorted_box(r, 9, 7, 0.3, true)});
    const auto f = make_frame(*grid, grid->initial_vertices(), 0.0, 2);
    const auto ex = [](Vec2 x) { return std::sin(x.x) + x.y * x.y; };
    std::vector<double> phi(grid->ncells());
    for (int c = 0; c < grid->ncells(); ++c) phi[c] = ex(f->geo.xc[c]) + 0.25;
    // The perturbed periodic box keeps the unit area.
    CHECK(l2_error(*f, phi, ex) == doctest::Approx(0.25));
    CHECK(l2_error_zero_mean(*f, phi, ex) < 1e-14);
    CHECK(max_error(*f, phi, ex) == doctest::Approx(0.25));
}

TEST_CASE("body forces vanish for uniform pressure and linear shear and match a linear pressure") {
    ScenarioParams p = scenario_defaults("cylinder_steady");
    const Scenario s = build_scenario(p);
    const auto f = make_frame(*s.grid, s.grid->initial_vertices(), 0.0, p.layers);
    const int n = s.grid->ncells();
    FlowField q{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 1.7)};
    ForceRecord fr = compute_forces(*f, q, s.body_tag, p.re, s.diameter, s.u_ref);
    CHECK(std::abs(fr.cd) < 1e-12);
    CHECK(std::abs(fr.cl) < 1e-12);

    for (int c = 0; c < n; ++c) {
        q.u[c] = 0.4 * f->geo.xc[c].y;
        q.v[c] = -0.2 * f->geo.xc[c].x;
        q.p[c] = 0.0;
    }
    fr = compute_forces(*f, q, s.body_tag, p.re, s.diameter, s.u_ref);
    CHECK(std::abs(fr.cd) < 1e-10);
    CHECK(std::abs(fr.cl) < 1e-10);

    // p = x pushes the body toward -x with the weight of the displaced area.
    for (int c = 0; c < n; ++c) {
        q.u[c] = q.v[c] = 0.0;
        q.p[c] = f->geo.xc[c].x;
    }
    fr = compute_forces(*f, q, s.body_tag, p.re, s.diameter, s.u_ref);
    const double area = kPi * s.diameter * s.diameter / 4.0;
    CHECK(fr.cd == doctest::Approx(-2.0 * area / (s.u_ref * s.u_ref * s.diameter)).epsilon(0.01));
    CHECK(std::abs(fr.cl) < 1e-10);
    CHECK_THROWS_AS(compute_forces(*f, q, "nothing", p.re, s.diameter, s.u_ref), Error);
}

TEST_CASE("strouhal number of synthetic lift signals") {
    const auto pure = signal(60.0, 0.01, [](double t) { return 0.3 * std::sin(2 * kPi * 0.2 * t); });
    CHECK(strouhal(pure, 1.0, 1.0) == doctest::Approx(0.2).epsilon(1e-3 / 0.2));
    const auto two = signal(80.0, 0.013, [](double t) {
        return 0.1 + 0.5 * std::sin(2 * kPi * 0.19 * t + 0.4) + 0.05 * std::sin(2 * kPi * 0.57 * t);
    });
    CHECK(std::abs(strouhal(two, 1.0, 1.0) - 0.19) < 2e-3);
    // Scaling by the diameter and reference speed.
    CHECK(strouhal(pure, 2.0, 4.0) == doctest::Approx(0.1).epsilon(1e-2));
    CHECK_THROWS_AS(strouhal(signal(0.02, 0.01, [](double) { return 0.0; }), 1.0, 1.0), Error);
}

TEST_CASE("mean drag uses the trailing half") {
    const auto h = signal(10.0, 0.5, [](double) { return 0.0; });
    std::vector<ForceRecord> rec = h;
    for (auto& r : rec) r.cd = r.t < 5.0 ? 100.0 : 1.25;
    CHECK(mean_drag(rec) == doctest::Approx(1.25));
}

TEST_CASE("observed orders on second-order data") {
    std::vector<ErrorRow> rows;
    for (double h : {0.2, 0.1, 0.05}) rows.push_back({h, 3 * h * h, h * h, 0.5 * h * h, {}, {}});
    fill_orders(rows);
    CHECK_FALSE(rows[0].order_u.has_value());
    for (size_t k = 1; k < rows.size(); ++k) {
        CHECK(*rows[k].order_u == doctest::Approx(2.0));
        CHECK(*rows[k].order_p == doctest::Approx(2.0));
    }
}

TEST_CASE("scenario defaults") {
    for (const auto& tag : scenario_tags()) {
        const ScenarioParams p = scenario_defaults(tag);
        CHECK(p.tag == tag);
        CHECK(p.t_f > 0.0);
        CHECK(p.resolution > 0);
        CHECK_NOTHROW(integrator_options(p));
    }
    CHECK(scenario_defaults("cylinder_steady").re == 200.0);
    CHECK(scenario_defaults("cylinder_steady").t_f == 90.0);
    CHECK(scenario_defaults("lid_cavity").re == 100.0);
    CHECK(scenario_defaults("lid_cavity").tableau == "euler");
    CHECK(scenario_defaults("cylinder_rotating").t_f == doctest::Approx(20 * kPi));
    CHECK_THROWS_AS(scenario_defaults("nope"), Error);
}

TEST_CASE("centerline profile reader") {
    std::istringstream is("# source note\ncomponent,coord,value\nu,0.5,-0.2\n\nv,0.25,0.1\n");
    const auto pts = read_profile_csv(is);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].component == 'u');
    CHECK(pts[0].coord == 0.5);
    CHECK(pts[1].value == 0.1);
}

TEST_CASE("free stream is preserved with a foreground from a block description") {
    ScenarioParams p = scenario_defaults("free_stream");
    p.t_f = 0.2;
    p.foreground = "-0.9 0.9 -0.8 0.8 9 8 rotate=0.3 perturb=0.2 seed=3 motion=translation:0.2:-0.1";
    const RunResult r = run_scenario(p);
    CHECK(r.sim->grid().nblocks() == 2);
    CHECK(r.sim->grid().block(1).ni == 9);
    double umax = 0.0;
    for (int c = 0; c < r.sim->grid().ncells(); ++c)
        if (r.sim->frame().st.active(c)) umax = std::max({umax, std::abs(r.sim->field().u[c]), std::abs(r.sim->field().v[c])});
    CHECK(umax <= 1e-12);
    p.tag = "cylinder_steady";
    CHECK_THROWS_AS(build_scenario(p), Error);
}
