#include <benchmark/benchmark.h>

#include "ehub/assembly.hpp"
#include "ehub/dispatch.hpp"

namespace {

using namespace ehub;

const HubTopology& hospital_day() {
  static const HubTopology hub = load_hub(std::filesystem::path(EHUB_FIXTURE_DIR) / "hospital_day" / "hub.json");
  return hub;
}

const SeriesData& day_series() {
  static const SeriesData series = load_series(hospital_day());
  return series;
}

void BM_Linearize(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(linearize_hub(hospital_day(), {.segments = s}));
}
BENCHMARK(BM_Linearize)->Arg(2)->Arg(12)->Arg(300);

void BM_Assemble(benchmark::State& state) {
  const LinearizedHub lin = linearize_hub(hospital_day(), {.segments = static_cast<int>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(assemble_system(lin));
}
BENCHMARK(BM_Assemble)->Arg(2)->Arg(12)->Arg(300);

void BM_BuildProblem(benchmark::State& state) {
  const LinearizedHub lin = linearize_hub(hospital_day(), {.segments = static_cast<int>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(build_dispatch_problem(lin, day_series(), 24));
}
BENCHMARK(BM_BuildProblem)->Arg(2)->Arg(12)->Unit(benchmark::kMillisecond);

// Root relaxation of the 24-period dispatch.
void BM_RootLp(benchmark::State& state) {
  const DispatchProblem p =
      build_dispatch_problem(linearize_hub(hospital_day(), {.segments = static_cast<int>(state.range(0))}), day_series(), 24);
  const LpProblem lp = p.model.relaxation();
  for (auto _ : state) benchmark::DoNotOptimize(solve_lp(lp));
  state.counters["rows"] = static_cast<double>(lp.rows());
  state.counters["cols"] = static_cast<double>(lp.cols());
}
BENCHMARK(BM_RootLp)->Arg(2)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_Optimize(benchmark::State& state) {
  const DispatchProblem p =
      build_dispatch_problem(linearize_hub(hospital_day(), {.segments = static_cast<int>(state.range(0))}), day_series(), 24);
  long nodes = 0;
  for (auto _ : state) {
    const DispatchSolution s = solve(p);
    nodes = s.nodes;
    benchmark::DoNotOptimize(s.objective);
  }
  state.counters["nodes"] = static_cast<double>(nodes);
}
BENCHMARK(BM_Optimize)->Arg(2)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
