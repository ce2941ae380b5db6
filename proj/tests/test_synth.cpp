#include "progresskit/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "progresskit/annotate.hpp"
#include "progresskit/oracles.hpp"
#include "progresskit/tokenize.hpp"
#include "progresskit/trace.hpp"

using namespace progresskit;

TEST_CASE("gen_traces is reproducible and respects the length bounds") {
  SynthConfig cfg;
  cfg.n_traces = 3;
  cfg.min_len = 10;
  cfg.max_len = 20;
  cfg.seed = 7;

  const auto a = gen_traces(cfg);
  const auto b = gen_traces(cfg);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);
    CHECK(a[i].token_count >= 10);
    CHECK(a[i].token_count <= 20);
    CHECK(count_tokens(a[i].reasoning) == static_cast<std::size_t>(a[i].token_count));
  }

  SynthConfig other = cfg;
  other.seed = 8;
  CHECK(gen_traces(other)[0].reasoning != a[0].reasoning);
}

TEST_CASE("gen_traces assigns two groups round-robin and text segments cleanly") {
  SynthConfig cfg;
  cfg.n_traces = 10;
  cfg.min_len = 30;
  cfg.max_len = 50;
  cfg.seed = 1;
  const auto traces = gen_traces(cfg);
  std::set<std::pair<std::string, std::string>> groups;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    groups.insert({traces[i].model_family, traces[i].task});
    CHECK(traces[i].model_family == (i % 2 == 0 ? "synth-a" : "synth-b"));
    // Paragraph structure feeds the annotation pipeline.
    const Segmentation seg = segment_paragraphs(traces[i].reasoning);
    CHECK(seg.segments.size() >= 2);
  }
  CHECK(groups.size() == 2);
}

TEST_CASE("uniform lengths match the configured distribution by ECDF distance") {
  SynthConfig cfg;
  cfg.n_traces = 10000;
  cfg.min_len = 100;
  cfg.max_len = 299;
  cfg.seed = 99;
  const auto traces = gen_traces(cfg);

  std::vector<double> lengths;
  lengths.reserve(traces.size());
  for (const auto& trace : traces) lengths.push_back(static_cast<double>(trace.token_count));
  std::sort(lengths.begin(), lengths.end());

  // Kolmogorov-Smirnov distance against the discrete uniform CDF.
  double worst = 0.0;
  const double span = static_cast<double>(cfg.max_len - cfg.min_len + 1);
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const double cdf = (lengths[i] - cfg.min_len + 1.0) / span;
    const double ecdf_hi = static_cast<double>(i + 1) / lengths.size();
    const double ecdf_lo = static_cast<double>(i) / lengths.size();
    worst = std::max(worst, std::abs(cdf - ecdf_hi));
    worst = std::max(worst, std::abs(cdf - ecdf_lo));
  }
  CHECK(worst < 0.03);
}

TEST_CASE("lognormal lengths stay in range and lean toward the geometric middle") {
  SynthConfig cfg;
  cfg.n_traces = 10000;
  cfg.min_len = 50;
  cfg.max_len = 5000;
  cfg.shape = LengthShape::kLognormal;
  cfg.seed = 99;
  const auto traces = gen_traces(cfg);

  double log_sum = 0.0;
  for (const auto& trace : traces) {
    CHECK(trace.token_count >= cfg.min_len);
    CHECK(trace.token_count <= cfg.max_len);
    log_sum += std::log(static_cast<double>(trace.token_count));
  }
  const double mu = (std::log(50.0) + std::log(5000.0)) / 2.0;
  CHECK(log_sum / traces.size() == doctest::Approx(mu).epsilon(0.02));
}

TEST_CASE("gen_features without noise lies along the planted direction") {
  SynthConfig cfg;
  cfg.d = 8;
  cfg.signal_scale = 2.0;
  cfg.noise_sigma = 0.0;
  cfg.seed = 5;

  const std::vector<double> direction = planted_direction(cfg);
  double direction_norm = 0.0;
  for (double v : direction) direction_norm += v * v;
  CHECK(std::sqrt(direction_norm) == doctest::Approx(std::sqrt(8.0)));

  const HiddenStateMatrix hs = gen_features(40, 0, cfg);
  REQUIRE(hs.m == 40);
  for (int k = 1; k <= hs.m; ++k) {
    const double expected_norm =
        cfg.signal_scale * (static_cast<double>(k) / hs.m) * std::sqrt(8.0);
    double norm = 0.0;
    for (int j = 0; j < hs.d; ++j) {
      const double v = hs.token_rows[static_cast<std::size_t>(k - 1) * hs.d + j];
      norm += v * v;
      // Proportionality to the direction itself, not just in norm.
      CHECK(v == doctest::Approx(cfg.signal_scale * (static_cast<double>(k) / hs.m) *
                                 direction[j])
                     .epsilon(1e-5));
    }
    CHECK(std::sqrt(norm) == doctest::Approx(expected_norm).epsilon(1e-5));
  }
  for (float v : hs.question_rows) CHECK(v == 0.0f);
}

TEST_CASE("gen_features with zero signal is indistinguishable from noise in mean norm") {
  SynthConfig cfg;
  cfg.d = 16;
  cfg.signal_scale = 0.0;
  cfg.noise_sigma = 0.5;
  cfg.seed = 6;

  double sum_sq = 0.0;
  std::size_t count = 0;
  for (int t = 0; t < 30; ++t) {
    const HiddenStateMatrix hs = gen_features(50, t, cfg);
    for (float v : hs.token_rows) {
      sum_sq += static_cast<double>(v) * v;
      ++count;
    }
  }
  // Per-coordinate second moment equals noise_sigma^2.
  CHECK(sum_sq / static_cast<double>(count) ==
        doctest::Approx(cfg.noise_sigma * cfg.noise_sigma).epsilon(0.05));
}

TEST_CASE("gen_features is deterministic per trace index") {
  SynthConfig cfg;
  cfg.d = 4;
  cfg.seed = 12;
  const HiddenStateMatrix a = gen_features(25, 3, cfg);
  const HiddenStateMatrix b = gen_features(25, 3, cfg);
  CHECK(a.token_rows == b.token_rows);
  CHECK(a.question_rows == b.question_rows);
  const HiddenStateMatrix c = gen_features(25, 4, cfg);
  CHECK(a.token_rows != c.token_rows);
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.min_len = 5;
  CHECK_THROWS_AS(gen_traces(cfg), std::invalid_argument);
  cfg.min_len = 10;
  cfg.d = 1;
  CHECK_THROWS_AS(planted_direction(cfg), std::invalid_argument);
  cfg.d = 2;
  cfg.noise_sigma = -0.1;
  CHECK_THROWS_AS(gen_features(10, 0, cfg), std::invalid_argument);
}

TEST_CASE("oracle spot checks") {
  CHECK(oracle::bucket_by_scan(5, 100, 10) == 1);
  CHECK(oracle::bucket_by_scan(100, 100, 10) == 10);

  RolloutGroup group;
  group.trace_id = "g";
  group.prefix_len = 100;
  group.continuation_lens = {400, 100};
  const auto [mad_value, mapd_value] =
      oracle::mad_mapd_exact(std::vector<RolloutGroup>{group});
  CHECK(mad_value == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(mapd_value == doctest::Approx(0.15 / 0.35).epsilon(1e-12));
  CHECK(mapd_value == doctest::Approx(0.4286).epsilon(1e-4));
}

TEST_CASE("gen_rollout_groups is deterministic and in bounds") {
  const auto a = gen_rollout_groups(20, 8, 500, 1500, 77);
  const auto b = gen_rollout_groups(20, 8, 500, 1500, 77);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].prefix_len == b[i].prefix_len);
    CHECK(a[i].continuation_lens == b[i].continuation_lens);
    CHECK(a[i].prefix_len >= 1);
    CHECK(a[i].prefix_len <= 500);
    REQUIRE(a[i].continuation_lens.size() == 8);
    for (auto len : a[i].continuation_lens) {
      CHECK(len >= 0);
      CHECK(len <= 1500);
    }
  }
}
