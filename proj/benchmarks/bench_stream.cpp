#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "progresskit/markers.hpp"
#include "progresskit/stream.hpp"

namespace {

std::string make_input(std::size_t approx_bytes) {
  std::mt19937_64 rng(42);
  std::string input;
  input.reserve(approx_bytes + 64);
  while (input.size() < approx_bytes) {
    for (int w = 0; w < 12; ++w) {
      input += "token";
      input += static_cast<char>('a' + rng() % 26);
      input += ' ';
    }
    input += progresskit::format_marker(static_cast<int>(rng() % 101));
    input += ' ';
  }
  return input;
}

void BM_StreamParseWhole(benchmark::State& state) {
  const std::string input = make_input(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto events = progresskit::parse_stream(input);
    benchmark::DoNotOptimize(events);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * input.size());
}
BENCHMARK(BM_StreamParseWhole)->Range(1 << 12, 1 << 20);

void BM_StreamParseChunked(benchmark::State& state) {
  const std::string input = make_input(1 << 16);
  const std::size_t chunk = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    progresskit::MarkerStreamParser parser;
    std::size_t begin = 0;
    while (begin < input.size()) {
      const std::size_t len = std::min(chunk, input.size() - begin);
      auto events = parser.feed(std::string_view(input).substr(begin, len));
      benchmark::DoNotOptimize(events);
      begin += len;
    }
    auto tail = parser.finish();
    benchmark::DoNotOptimize(tail);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * input.size());
}
BENCHMARK(BM_StreamParseChunked)->RangeMultiplier(8)->Range(8, 1 << 15);

}  // namespace
