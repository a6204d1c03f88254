#include <benchmark/benchmark.h>

#include <string>

#include "ctmflow/ctmflow.hpp"

using namespace ctmflow;

namespace {

const Scenario& scenario(const std::string& name) {
    static const Scenario bottleneck = load_scenario(std::string(CTMFLOW_SCENARIO_DIR) + "/fig5_bottleneck.json");
    static const Scenario constant = load_scenario(std::string(CTMFLOW_SCENARIO_DIR) + "/fig5_constant.json");
    return name == "constant" ? constant : bottleneck;
}

void BM_SimulateFifo(benchmark::State& state) {
    const Scenario& s = scenario("constant");
    for (auto _ : state) benchmark::DoNotOptimize(simulate(s));
    state.SetItemsProcessed(state.iterations() * s.horizon);
}
BENCHMARK(BM_SimulateFifo);

void BM_SimulateNonFifo(benchmark::State& state) {
    const Scenario& s = scenario("constant");
    SimulationOptions o;
    o.model = JunctionModel::NonFifo;
    for (auto _ : state) benchmark::DoNotOptimize(simulate(s, nullptr, o));
    state.SetItemsProcessed(state.iterations() * s.horizon);
}
BENCHMARK(BM_SimulateNonFifo);

void BM_BuildFnc(benchmark::State& state) {
    const Scenario& s = scenario("bottleneck");
    for (auto _ : state) benchmark::DoNotOptimize(build_fnc(s, CostSpec::ttt()));
}
BENCHMARK(BM_BuildFnc);

void BM_SolveLp(benchmark::State& state) {
    const ConvexProgram P = build_program(scenario("bottleneck"), CostSpec::ttt(),
                                          state.range(0) ? ProgramKind::FNC : ProgramKind::DTA);
    for (auto _ : state) benchmark::DoNotOptimize(solve_lp(P));
}
BENCHMARK(BM_SolveLp)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SolveQp(benchmark::State& state) {
    const ConvexProgram P = build_program(scenario("bottleneck"), CostSpec::quadratic(),
                                          state.range(0) ? ProgramKind::FNC : ProgramKind::DTA);
    for (auto _ : state) benchmark::DoNotOptimize(solve_qp(P));
}
BENCHMARK(BM_SolveQp)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RobustnessSweep(benchmark::State& state) {
    const Scenario& s = scenario("constant");
    RobustnessSetup setup;
    const std::vector<double> grid{0.0, 0.5, 1.0, 1.5, 2.0};
    for (auto _ : state) benchmark::DoNotOptimize(robustness_sweep(s, setup, grid, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_RobustnessSweep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
