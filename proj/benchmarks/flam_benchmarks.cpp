#include <random>

#include <benchmark/benchmark.h>

#include "flam/factors.hpp"
#include "flam/flow_map.hpp"
#include "flam/flow_models.hpp"
#include "flam/pipeline.hpp"
#include "flam/scenario.hpp"
#include "flam/solver.hpp"

namespace {

using namespace flam;

struct Case1 {
    Scenario scenario = preset("case1");
    SensorLog log = simulate(scenario);
    FlamProblem problem{log, scenario.grid, scenario.factor_weights()};
    FullState guess = initial_guess(problem, log, log.truth.front().state);
};

const Case1& case1() {
    static const Case1 c;
    return c;
}

void BM_Assemble(benchmark::State& state) {
    const Case1& c = case1();
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble(c.problem, c.guess));
    }
    state.counters["residuals"] = static_cast<double>(c.problem.residual_count());
}
BENCHMARK(BM_Assemble)->Unit(benchmark::kMillisecond);

void BM_DampedCg(benchmark::State& state) {
    const Case1& c = case1();
    const SparseSystem sys = anchor_initial_state(assemble(c.problem, c.guess), 1e12);
    CgConfig cfg;
    cfg.preconditioner = static_cast<Preconditioner>(state.range(0));
    std::size_t iterations = 0;
    for (auto _ : state) {
        const CgResult r = solve_damped_cg(sys, 1e-3, cfg);
        iterations = r.iterations;
        benchmark::DoNotOptimize(r.delta.data());
    }
    state.counters["cg_iters"] = static_cast<double>(iterations);
    state.SetLabel(std::string(to_string(cfg.preconditioner)));
}
// plain CG does not converge on this system, so only the preconditioned variants run
BENCHMARK(BM_DampedCg)
    ->Arg(static_cast<int>(Preconditioner::block_jacobi))
    ->Arg(static_cast<int>(Preconditioner::trajectory_map))
    ->Unit(benchmark::kMillisecond);

void BM_Optimize(benchmark::State& state) {
    const Case1& c = case1();
    for (auto _ : state) {
        benchmark::DoNotOptimize(optimize(c.problem, c.guess, c.scenario.solver).estimate);
    }
}
BENCHMARK(BM_Optimize)->Unit(benchmark::kMillisecond);

void BM_KsSpectrum(benchmark::State& state) {
    const KinematicTurbulence field(*preset("case2").flow.ks);
    SpectrumOptions opt;
    opt.samples = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_spectrum(field, opt).slope);
    }
}
BENCHMARK(BM_KsSpectrum)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Interpolate(benchmark::State& state) {
    const Scenario s = preset("case1");
    const FlowMap map = truth_map(s);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<Vec2> pts(4096);
    for (auto& p : pts) {
        p = Vec2(u(rng), u(rng));
    }
    for (auto _ : state) {
        Vec2 acc = Vec2::Zero();
        for (const Vec2& p : pts) {
            acc += interpolate(map, p);
        }
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
}
BENCHMARK(BM_Interpolate);

}  // namespace

BENCHMARK_MAIN();
