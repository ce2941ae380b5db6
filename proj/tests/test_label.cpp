#include "progresskit/label.hpp"

#include <doctest.h>

#include <random>

#include "progresskit/oracles.hpp"

using namespace progresskit;

TEST_CASE("bucketize quantizes k/m into left-closed intervals") {
  CHECK(bucketize(5, 100, 10) == 1);   // 0.05 in [0, 0.1)
  CHECK(bucketize(10, 100, 10) == 2);  // 0.10 sits on the next interval's left edge
  CHECK(bucketize(95, 100, 10) == 10);
  CHECK(bucketize(100, 100, 10) == 10);  // closure of the last interval
  CHECK(bucketize(1, 1, 10) == 10);
}

TEST_CASE("bucketize rejects out-of-range positions") {
  CHECK_THROWS_AS(bucketize(0, 10, 10), std::out_of_range);
  CHECK_THROWS_AS(bucketize(11, 10, 10), std::out_of_range);
  CHECK_THROWS_AS(bucketize(1, 0, 10), std::invalid_argument);
  CHECK_THROWS_AS(bucketize(1, 1, 1), std::invalid_argument);
}

TEST_CASE("bucketize agrees with the interval-scan oracle on all small pairs") {
  for (int q_buckets : {2, 3, 7, 10}) {
    for (std::int64_t m = 1; m <= 200; ++m) {
      for (std::int64_t k = 1; k <= m; ++k) {
        CHECK(bucketize(k, m, q_buckets) == oracle::bucket_by_scan(k, m, q_buckets));
      }
    }
  }
}

TEST_CASE("bucketize is invariant under integer scaling of k and m") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> m_dist(1, 5000);
  std::uniform_int_distribution<std::int64_t> scale(1, 50);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t m = m_dist(rng);
    const std::int64_t k = 1 + static_cast<std::int64_t>(rng() % m);
    const std::int64_t c = scale(rng);
    CHECK(bucketize(k, m, 10) == bucketize(c * k, c * m, 10));
  }
}

TEST_CASE("realized_progress basic values") {
  CHECK(realized_progress(50, 200) == doctest::Approx(0.25));
  CHECK(realized_progress(200, 200) == doctest::Approx(1.0));
  CHECK_THROWS_AS(realized_progress(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(realized_progress(0, 10), std::out_of_range);
  CHECK_THROWS_AS(realized_progress(11, 10), std::out_of_range);
}

TEST_CASE("realized_progress is strictly increasing in the prefix") {
  double previous = 0.0;
  for (std::int64_t k = 1; k <= 500; ++k) {
    const double g = realized_progress(k, 500);
    CHECK(g > previous);
    previous = g;
  }
  CHECK(previous == doctest::Approx(1.0));
}

TEST_CASE("rollout_progress values and identity with realized_progress") {
  CHECK(rollout_progress(100, 300) == doctest::Approx(0.25));
  CHECK(rollout_progress(100, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(rollout_progress(0, 10), std::invalid_argument);
  CHECK_THROWS_AS(rollout_progress(10, -1), std::invalid_argument);

  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::int64_t> len(0, 100000);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t k = 1 + static_cast<std::int64_t>(rng() % 100000);
    const std::int64_t c = len(rng);
    CHECK(rollout_progress(k, c) == realized_progress(k, k + c));
  }
}

TEST_CASE("bucket_midpoint") {
  CHECK(bucket_midpoint(1, 10) == doctest::Approx(0.05));
  CHECK(bucket_midpoint(10, 10) == doctest::Approx(0.95));
  CHECK_THROWS_AS(bucket_midpoint(0, 10), std::invalid_argument);
  CHECK_THROWS_AS(bucket_midpoint(11, 10), std::invalid_argument);
}
