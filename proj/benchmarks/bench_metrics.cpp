#include <benchmark/benchmark.h>

#include "progresskit/metrics.hpp"
#include "progresskit/probe.hpp"
#include "progresskit/synth.hpp"

namespace {

using namespace progresskit;

void BM_MadMapd(benchmark::State& state) {
  const auto groups =
      gen_rollout_groups(static_cast<int>(state.range(0)), 8, 20000, 60000, 17);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mad(groups));
    benchmark::DoNotOptimize(mapd(groups));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * groups.size());
}
BENCHMARK(BM_MadMapd)->Range(64, 16384);

void BM_DispersionCurve(benchmark::State& state) {
  const auto groups = gen_rollout_groups(3000, 8, 20000, 60000, 19);
  for (auto _ : state) {
    auto bins = dispersion_curve(groups, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(bins);
  }
}
BENCHMARK(BM_DispersionCurve)->Arg(10)->Arg(50);

void BM_HeatmapAggregate(benchmark::State& state) {
  std::vector<TraceDistributions> traces(static_cast<std::size_t>(state.range(0)));
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (auto& trace : traces) {
    const int m = 50 + static_cast<int>(rng() % 100);
    for (int r = 0; r < m; ++r) {
      BucketDistribution row;
      row.probabilities.resize(10);
      double total = 0.0;
      for (double& p : row.probabilities) {
        p = uniform(rng);
        total += p;
      }
      for (double& p : row.probabilities) p /= total;
      trace.rows.push_back(std::move(row));
    }
  }
  for (auto _ : state) {
    auto result = aggregate_heatmap(traces, 101);
    benchmark::DoNotOptimize(result);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * traces.size());
}
BENCHMARK(BM_HeatmapAggregate)->Arg(16)->Arg(128);

}  // namespace
