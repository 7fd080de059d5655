// Serial reference kernels against their OpenMP counterparts on the Taylor-Green configuration.

#include "chimera/bench.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <memory>

using namespace chimera;

namespace {

struct Setup {
    Scenario sc;
    FramePtr frame;
    FlowField q;
    CsrMatrix lap;
};

const Setup& setup(int resolution) {
    static std::map<int, std::unique_ptr<Setup>> cache;
    auto& s = cache[resolution];
    if (!s) {
        s = std::make_unique<Setup>();
        ScenarioParams p = scenario_defaults("taylor_green");
        p.resolution = resolution;
        s->sc = build_scenario(p);
        const Grid& g = *s->sc.grid;
        s->frame = make_frame(g, g.initial_vertices(), 0.0, p.layers);
        const int n = g.ncells();
        s->q = {std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
        for (int c = 0; c < n; ++c) {
            const auto e = s->sc.initial(s->frame->geo.xc[c]);
            s->q.u[c] = e[0];
            s->q.v[c] = e[1];
            s->q.p[c] = e[2];
        }
        s->lap = csr_from_rows(laplacian_rows(*s->frame, Var::P), n);
    }
    return *s;
}

Kernel kernel_of(const benchmark::State& st) { return st.range(1) == 0 ? Kernel::Serial : Kernel::Parallel; }

void label(benchmark::State& st, int n) {
    st.SetLabel(kernel_of(st) == Kernel::Serial ? "serial" : "parallel");
    st.SetItemsProcessed(st.iterations() * n);
}

void BM_CsrMultiply(benchmark::State& st) {
    const Setup& s = setup(static_cast<int>(st.range(0)));
    std::vector<double> y;
    for (auto _ : st) {
        s.lap.multiply(s.q.p, y, kernel_of(st));
        benchmark::DoNotOptimize(y.data());
    }
    label(st, s.lap.n);
}

void BM_Gradient(benchmark::State& st) {
    const Setup& s = setup(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(gradient(*s.frame, s.q.p, Var::P, kernel_of(st)));
    label(st, s.sc.grid->ncells());
}

void BM_ConvectiveResidual(benchmark::State& st) {
    const Setup& s = setup(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(convective_residual(*s.frame, s.q.u, s.q.v, kernel_of(st)));
    label(st, s.sc.grid->ncells());
}

void sizes(benchmark::internal::Benchmark* b) {
    for (int n : {12, 24, 48})
        for (int k : {0, 1}) b->Args({n, k});
    b->ArgNames({"resolution", "parallel"});
}

} // namespace

BENCHMARK(BM_CsrMultiply)->Apply(sizes);
BENCHMARK(BM_Gradient)->Apply(sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvectiveResidual)->Apply(sizes)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
