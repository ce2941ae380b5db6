#include <benchmark/benchmark.h>

#include "progresskit/label.hpp"
#include "progresskit/probe.hpp"
#include "progresskit/synth.hpp"

namespace {

using namespace progresskit;

struct ProbeFixture {
  FeatureMatrix features;
  std::vector<int> labels;
  ProbeModel model;
};

ProbeFixture make_fixture(int n_traces, int d) {
  SynthConfig cfg;
  cfg.d = d;
  cfg.seed = 7;
  ProbeFixture fixture;
  for (int i = 0; i < n_traces; ++i) {
    const HiddenStateMatrix hs = gen_features(100, i, cfg);
    const FeatureMatrix f = build_features(hs, ProbeMode::kTokenOnly);
    fixture.features.dim = f.dim;
    fixture.features.rows += f.rows;
    fixture.features.values.insert(fixture.features.values.end(), f.values.begin(),
                                   f.values.end());
    for (int k = 1; k <= hs.m; ++k) fixture.labels.push_back(bucketize(k, hs.m, 10));
  }
  TrainConfig config;
  config.seed = 1;
  config.epochs = 1;
  fixture.model = train_probe(fixture.features, fixture.labels, 10, config);
  return fixture;
}

void BM_TrainEpoch(benchmark::State& state) {
  const ProbeFixture fixture = make_fixture(static_cast<int>(state.range(0)), 64);
  TrainConfig config;
  config.seed = 3;
  config.epochs = 1;
  config.batch_size = 256;
  for (auto _ : state) {
    ProbeModel model = train_probe(fixture.features, fixture.labels, 10, config);
    benchmark::DoNotOptimize(model);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * fixture.features.rows);
}
BENCHMARK(BM_TrainEpoch)->Arg(20)->Arg(100);

void BM_Predict(benchmark::State& state) {
  const ProbeFixture fixture = make_fixture(20, static_cast<int>(state.range(0)));
  std::int64_t row = 0;
  for (auto _ : state) {
    auto dist = predict(fixture.model, fixture.features.row(row));
    benchmark::DoNotOptimize(dist);
    row = (row + 1) % fixture.features.rows;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Predict)->Arg(16)->Arg(64)->Arg(256);

void BM_EvaluateThreads(benchmark::State& state) {
  const ProbeFixture fixture = make_fixture(100, 64);
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto eval = evaluate_probe(fixture.model, fixture.features, fixture.labels, threads);
    benchmark::DoNotOptimize(eval);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * fixture.features.rows);
}
BENCHMARK(BM_EvaluateThreads)->Arg(1)->Arg(2)->Arg(4);

}  // namespace
