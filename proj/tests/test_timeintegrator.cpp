#include "chimera/timeintegrator.hpp"
#include "gen.hpp"

#include <doctest.h>

#include <cmath>

using namespace chimera;

namespace {

std::shared_ptr<const Grid> periodic_grid(int n) {
    return std::make_shared<const Grid>(std::vector<Block>{testgen::periodic_box(n, n)});
}

} // namespace

TEST_CASE("built-in tableaux are consistent") {
    for (const char* name : {"euler", "ars222"}) {
        const ButcherTableau t = ButcherTableau::by_name(name);
        CHECK_NOTHROW(t.validate());
        const int n = t.stages + 1;
        // Order-one and order-two conditions on both parts.
        double s1e = 0.0, s1i = 0.0, s2e = 0.0, s2i = 0.0;
        for (int j = 0; j < n; ++j) {
            s1e += t.be[j];
            s1i += t.bi[j];
            s2e += t.be[j] * t.ce(j);
            s2i += t.bi[j] * t.ci(j);
        }
        CHECK(s1e == doctest::Approx(1.0));
        CHECK(s1i == doctest::Approx(1.0));
        if (std::string(name) == "ars222") {
            CHECK(s2e == doctest::Approx(0.5));
            CHECK(s2i == doctest::Approx(0.5));
            CHECK(t.ai[1][1] == doctest::Approx(1.0 - std::sqrt(0.5)));
        }
        CHECK(t.ce(n - 1) == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(ButcherTableau::by_name("rk4"), Error);
}

TEST_CASE("tableau validation rejects broken pairs") {
    ButcherTableau t = ButcherTableau::ars222();
    t.ai[1][1] = 0.0;
    CHECK_THROWS_AS(t.validate(), Error);
    t = ButcherTableau::ars222();
    t.ae[1][1] = 0.1;
    CHECK_THROWS_AS(t.validate(), Error);
    t = ButcherTableau::euler();
    t.bi = {0.5, 0.5};
    CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("uniform flow on a static periodic mesh is preserved") {
    for (const char* tab : {"euler", "ars222"}) {
        IntegratorOptions opt;
        opt.re = 50.0;
        opt.tableau = ButcherTableau::by_name(tab);
        Simulation sim(periodic_grid(8), opt, 0.0, [](Vec2) { return std::array<double, 3>{0.4, -0.3, 0.0}; });
        CHECK(sim.static_mesh());
        for (int k = 0; k < 3; ++k) sim.step(0.05);
        for (int c = 0; c < sim.grid().ncells(); ++c) {
            CHECK(sim.field().u[c] == doctest::Approx(0.4).epsilon(1e-10));
            CHECK(sim.field().v[c] == doctest::Approx(-0.3).epsilon(1e-10));
        }
    }
}

TEST_CASE("cfl step follows the largest signal speed") {
    IntegratorOptions opt;
    opt.cfl = 0.5;
    Simulation sim(periodic_grid(10), opt, 0.0, [](Vec2) { return std::array<double, 3>{1.0, 0.0, 0.0}; });
    // The flux q (q . n) has the largest eigenvalue 2 |u . n| = 2 on vertical edges; h = 0.1.
    CHECK(sim.compute_dt() == doctest::Approx(0.025));
}

TEST_CASE("fallback step when the flow is at rest") {
    IntegratorOptions opt;
    opt.cfl = 0.5;
    opt.re = 100.0;
    opt.dt_max = 1.0;
    Simulation sim(periodic_grid(10), opt, 0.0, [](Vec2) { return std::array<double, 3>{0.0, 0.0, 0.0}; });
    const double h = 0.1;
    CHECK(sim.compute_dt() == doctest::Approx(0.5 / (2.0 / h + 4.0 / (100.0 * h * h))));
    opt.dt_max = 1e-3;
    Simulation capped(periodic_grid(10), opt, 0.0, [](Vec2) { return std::array<double, 3>{0.0, 0.0, 0.0}; });
    CHECK(capped.compute_dt() == doctest::Approx(1e-3));
}

TEST_CASE("the last step is clipped to the final time") {
    IntegratorOptions opt;
    opt.dt_fixed = 0.1;
    Simulation sim(periodic_grid(6), opt, 0.95, [](Vec2) { return std::array<double, 3>{0.2, 0.1, 0.0}; });
    std::vector<StepReport> seen;
    sim.run(1.0, [&](const StepReport& r) { seen.push_back(r); });
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].dt == doctest::Approx(0.05));
    CHECK(sim.time() == 1.0);
    CHECK(sim.steps() == 1);
}

TEST_CASE("pressure modes invisible to the gradient decay at the damping rate") {
    // A checkerboard has zero face averages, so the central gradient misses it and the flow stays uniform.
    const int n = 8;
    auto grid = periodic_grid(n);
    for (double damping : {0.0, 2.0}) {
        IntegratorOptions opt;
        opt.tableau = ButcherTableau::by_name("euler");
        opt.pressure_damping = damping;
        Simulation sim(grid, opt, 0.0, [](Vec2 x) {
            const int i = static_cast<int>(std::floor(x.x * 8.0)), j = static_cast<int>(std::floor(x.y * 8.0));
            return std::array<double, 3>{0.3, 0.2, (i + j) % 2 == 0 ? 1.0 : -1.0};
        });
        const auto p0 = sim.field().p;
        sim.step(0.05);
        const auto& p = sim.field().p;
        const double gain = 1.0 - damping * 0.05;
        for (int c = 1; c < grid->ncells(); ++c)
            CHECK(std::abs((p[c] - p[0]) - gain * (p0[c] - p0[0])) < 1e-7);
        for (int c = 0; c < grid->ncells(); ++c) {
            CHECK(std::abs(sim.field().u[c] - 0.3) < 1e-8);
            CHECK(std::abs(sim.field().v[c] - 0.2) < 1e-8);
        }
    }
}
