// Serial reference vs OpenMP kernel for each data-parallel hot spot.
#include <benchmark/benchmark.h>

#include "vax/harness.hpp"

using namespace vax;

namespace {

Netlist circuit() { return generate_benchmark({BenchmarkFamily::ArrayMultiplier, 8, 1, Signedness::Unsigned}); }

void BM_McCpds(benchmark::State& st) {
    const auto n = circuit();
    const auto lib = default_variation_library();
    for (auto _ : st) benchmark::DoNotOptimize(monte_carlo_cpds(n, lib, 1, 500, 0.5));
}

void BM_McCpdsSerial(benchmark::State& st) {
    const auto n = circuit();
    const auto lib = default_variation_library();
    for (auto _ : st) benchmark::DoNotOptimize(monte_carlo_cpds_serial(n, lib, 1, 500, 0.5));
}

void BM_Simulate(benchmark::State& st) {
    const auto n = circuit();
    const auto ds = generate_dataset(n, 100000, 1);
    const Evaluator ev(n);
    for (auto _ : st) benchmark::DoNotOptimize(ev.simulate(ds));
}

void BM_SimulateSerial(benchmark::State& st) {
    const auto n = circuit();
    const auto ds = generate_dataset(n, 100000, 1);
    const Evaluator ev(n);
    for (auto _ : st) benchmark::DoNotOptimize(ev.simulate_serial(ds));
}

struct GaSetup {
    Netlist n = generate_benchmark({BenchmarkFamily::RcaAdder, 8, 1, Signedness::Unsigned});
    VariationLibrary lib = default_variation_library();
    EdgeTransitionMap tmap = annotate_edge_transitions(n, lib, 200, 1);
    CandidateSet cs = build_candidates(n, ssta_traverse(n, lib, tmap));
    SimulationDataset ds = generate_dataset(n, 10000, 2);
    GaConfig cfg = [] {
        GaConfig c;
        c.population = 40;
        c.generations = 5;
        return c;
    }();
};

void BM_Nsga2(benchmark::State& st) {
    const GaSetup s;
    for (auto _ : st) benchmark::DoNotOptimize(nsga2_run(s.n, s.cs, s.lib, s.tmap, s.ds, s.cfg));
}

void BM_Nsga2Serial(benchmark::State& st) {
    const GaSetup s;
    for (auto _ : st) benchmark::DoNotOptimize(nsga2_run_serial(s.n, s.cs, s.lib, s.tmap, s.ds, s.cfg));
}

}  // namespace

BENCHMARK(BM_McCpds)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McCpdsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Nsga2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Nsga2Serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
