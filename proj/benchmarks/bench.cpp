#include <string>

#include <benchmark/benchmark.h>

#include "viraldyn/agesim.hpp"
#include "viraldyn/ddesim.hpp"
#include "viraldyn/diagnostics.hpp"
#include "viraldyn/equilibria.hpp"
#include "viraldyn/scenario.hpp"
#include "viraldyn/thresholds.hpp"

namespace {

// DoNotOptimize only ever gets dead local copies: the packaged benchmark's
// non-const overload writes the operand back through a register and scrambles
// live doubles under this compiler
viraldyn::Scenario bundled(const std::string& file) {
    return viraldyn::load_scenario(std::string(VIRALDYN_SCENARIO_DIR) + "/" + file);
}

void bm_burst_size(benchmark::State& state) {
    viraldyn::Scenario s = bundled("table2_twoclass.json");
    const auto delta = s.classes[0].kernel.delta_spec();
    const auto prod = s.classes[0].kernel.production_spec();
    for (auto _ : state) {
        viraldyn::AgeKernel k(delta, prod);
        benchmark::DoNotOptimize(k.burst_size());
    }
}
BENCHMARK(bm_burst_size);

void bm_gamma_grid(benchmark::State& state) {
    viraldyn::Scenario s = bundled("table2_twoclass.json");
    const auto& kernel = s.classes[0].kernel;
    const size_t n_nodes = size_t(state.range(0));
    for (auto _ : state) {
        auto grid = viraldyn::gamma_grid(kernel, 0.01, n_nodes);
        benchmark::DoNotOptimize(grid.data());
    }
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(n_nodes));
}
BENCHMARK(bm_gamma_grid)->Arg(1000)->Arg(10000);

void bm_thresholds(benchmark::State& state) {
    viraldyn::Scenario s = bundled("table2_twoclass.json");
    for (auto _ : state) {
        auto rep = viraldyn::threshold_report(s);
        double r0 = rep.r0;
        benchmark::DoNotOptimize(r0);
    }
}
BENCHMARK(bm_thresholds);

void bm_virion_equilibrium(benchmark::State& state) {
    viraldyn::Scenario s = bundled("table1_beta5e-8.json");
    for (auto _ : state) {
        auto es = viraldyn::solve_immune_free(s);
        double v = es.V;
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(bm_virion_equilibrium);

void bm_age_step(benchmark::State& state) {
    viraldyn::Scenario s = bundled("reducible_demo.json");
    s.numerics.dtheta = 1.0 / double(state.range(0));
    viraldyn::AgeSimulator sim(s);
    viraldyn::SystemState st = sim.init_state();
    for (auto _ : state) {
        sim.step(st);
        double v = st.V;
        benchmark::DoNotOptimize(v);
    }
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(sim.n_nodes()));
}
BENCHMARK(bm_age_step)->Arg(100)->Arg(400);

void bm_dde_run(benchmark::State& state) {
    viraldyn::Scenario s = bundled("reducible_demo.json");
    s.numerics.dt = 0.01;
    for (auto _ : state) {
        viraldyn::DdeSimulator sim(s);
        auto rec = sim.run(double(state.range(0)), 10.0);
        double v = rec.samples.back().V;
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(bm_dde_run)->Arg(50)->Arg(200);

void bm_certificate_eval(benchmark::State& state) {
    viraldyn::Scenario s = bundled("reducible_demo.json");
    s.numerics.dtheta = 0.05;
    viraldyn::AgeSimulator sim(s);
    viraldyn::SystemState st = sim.init_state();
    for (int i = 0; i < 100; ++i) sim.step(st);
    viraldyn::SteadyState es = viraldyn::solve_immune_free(s);
    viraldyn::DiagnosticsEvaluator ev(s, sim.dtheta(), sim.n_nodes());
    for (auto _ : state) {
        auto fv = ev.lyapunov_w1(st, es);
        double v = fv.value;
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(bm_certificate_eval);

} // namespace

BENCHMARK_MAIN();
