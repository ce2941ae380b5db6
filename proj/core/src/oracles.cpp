#include "progresskit/oracles.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "progresskit/errors.hpp"

namespace progresskit::oracle {

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

// Exact rational value of a finite double, via mantissa/exponent
// decomposition rather than any float-to-rational conversion in the main
// code paths.
cpp_rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw DataError("non-finite value in exact-rational oracle");
  if (x == 0.0) return {};
  int exponent = 0;
  const double mantissa = std::frexp(x, &exponent);
  const auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
  exponent -= 53;
  cpp_rational result(scaled);
  if (exponent >= 0) {
    result *= cpp_rational(pow(cpp_int(2), exponent));
  } else {
    result /= cpp_rational(pow(cpp_int(2), -exponent));
  }
  return result;
}

cpp_rational abs_rational(const cpp_rational& x) { return x < 0 ? cpp_rational(-x) : x; }

cpp_rational clip01_rational(const cpp_rational& x) {
  if (x < 0) return {};
  if (x > 1) return cpp_rational(1);
  return x;
}

double to_double(const cpp_rational& x) { return x.convert_to<double>(); }

}  // namespace

int bucket_by_scan(std::int64_t k, std::int64_t m, int q_buckets) {
  if (q_buckets < 2) throw std::invalid_argument("bucket count must be >= 2");
  if (m < 1) throw std::invalid_argument("trace length must be >= 1");
  if (k < 1 || k > m) throw std::out_of_range("position outside [1, m]");
  if (k == m) return q_buckets;
  for (int q = 1; q <= q_buckets; ++q) {
    // k/m in [(q-1)/Q, q/Q), cross-multiplied.
    const bool above_lower = static_cast<std::int64_t>(q - 1) * m <= k * q_buckets;
    const bool below_upper = k * q_buckets < static_cast<std::int64_t>(q) * m;
    if (above_lower && below_upper) return q;
  }
  throw DataError("interval scan failed to place position");
}

std::pair<double, double> mad_mapd_exact(std::span<const RolloutGroup> groups) {
  if (groups.empty()) throw DataError("no rollout groups");

  cpp_rational mad_sum = 0;
  cpp_rational mapd_sum = 0;
  for (const RolloutGroup& group : groups) {
    if (group.continuation_lens.size() < 2) {
      throw DataError("rollout group needs >= 2 continuations");
    }
    const auto r = static_cast<std::int64_t>(group.continuation_lens.size());
    std::vector<cpp_rational> progress;
    progress.reserve(group.continuation_lens.size());
    cpp_rational mean = 0;
    for (std::int64_t len : group.continuation_lens) {
      progress.emplace_back(cpp_rational(group.prefix_len) /
                            cpp_rational(group.prefix_len + len));
      mean += progress.back();
    }
    mean /= r;
    cpp_rational deviation = 0;
    for (const cpp_rational& g : progress) deviation += abs_rational(g - mean);
    deviation /= r;
    mad_sum += deviation;
    mapd_sum += deviation / mean;
  }
  const auto n = static_cast<std::int64_t>(groups.size());
  return {to_double(mad_sum / n), to_double(mapd_sum / n)};
}

double progress_mae_exact(std::span<const MarkerSeries> series) {
  cpp_rational sum = 0;
  std::int64_t count = 0;
  for (const MarkerSeries& trace : series) {
    for (const Marker& marker : trace.markers) {
      sum += abs_rational(rational_from_double(marker.predicted) -
                          rational_from_double(marker.realized));
      ++count;
    }
  }
  if (count == 0) throw DataError("no markers to score");
  return to_double(sum / count);
}

double global_mean_baseline_exact(std::int64_t prefix_len,
                                  std::span<const std::int64_t> lengths) {
  if (lengths.empty()) throw DataError("no lengths");
  cpp_rational total = 0;
  for (std::int64_t len : lengths) total += len;
  const cpp_rational mean = total / static_cast<std::int64_t>(lengths.size());
  return to_double(clip01_rational(cpp_rational(prefix_len) / mean));
}

double group_stat_baseline_exact(std::int64_t prefix_len,
                                 std::span<const std::int64_t> group_lengths,
                                 GroupStatistic statistic) {
  if (group_lengths.empty()) throw DataError("no lengths");
  if (statistic == GroupStatistic::kMean) {
    return global_mean_baseline_exact(prefix_len, group_lengths);
  }
  std::vector<std::int64_t> sorted(group_lengths.begin(), group_lengths.end());
  std::sort(sorted.begin(), sorted.end());
  const std::int64_t median = sorted[(sorted.size() - 1) / 2];
  return to_double(clip01_rational(cpp_rational(prefix_len) / cpp_rational(median)));
}

double previous_marker_baseline_exact(int marker_index, std::int64_t prefix_len,
                                      const std::optional<PreviousMarker>& previous,
                                      double group_median) {
  if (marker_index < 1 || prefix_len < 1) throw std::invalid_argument("invalid marker inputs");
  if (marker_index == 1) {
    return to_double(
        clip01_rational(cpp_rational(prefix_len) / rational_from_double(group_median)));
  }
  if (!previous.has_value() || previous->value <= 0.0) {
    throw DataError("previous marker missing or zero");
  }
  const cpp_rational implied = cpp_rational(prefix_len) * rational_from_double(previous->value) /
                               cpp_rational(previous->prefix_len);
  return to_double(clip01_rational(implied));
}

HeatmapResult heatmap_by_scan(std::span<const TraceDistributions> traces, int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("grid needs at least 2 points");
  if (traces.empty()) throw DataError("empty trace group");
  const int q_buckets = static_cast<int>(traces.front().rows.front().probabilities.size());

  HeatmapResult result;
  result.grid_points = grid_points;
  result.q_buckets = q_buckets;
  result.n_traces = static_cast<std::int64_t>(traces.size());
  result.grid.assign(static_cast<std::size_t>(grid_points) * q_buckets, 0.0);
  result.expected_curve.assign(grid_points, 0.0);

  // Point-major accumulation in long double; bracketing rows found by a
  // forward scan over positions instead of index arithmetic.
  for (int g = 0; g < grid_points; ++g) {
    const long double x = static_cast<long double>(g) / (grid_points - 1);
    std::vector<long double> cell(q_buckets, 0.0L);
    for (const TraceDistributions& trace : traces) {
      const std::size_t m = trace.rows.size();
      if (m < 2) throw DataError("heatmap trace contributes fewer than 2 rows");
      std::size_t j0 = 0;
      while (j0 + 2 < m &&
             static_cast<long double>(j0 + 1) / static_cast<long double>(m - 1) <= x) {
        ++j0;
      }
      const long double lo_pos = static_cast<long double>(j0) / static_cast<long double>(m - 1);
      const long double hi_pos =
          static_cast<long double>(j0 + 1) / static_cast<long double>(m - 1);
      const long double frac = (x - lo_pos) / (hi_pos - lo_pos);
      for (int q = 0; q < q_buckets; ++q) {
        cell[q] += (1.0L - frac) * trace.rows[j0].probabilities[q] +
                   frac * trace.rows[j0 + 1].probabilities[q];
      }
    }
    long double expected = 0.0L;
    for (int q = 0; q < q_buckets; ++q) {
      const long double mean = cell[q] / static_cast<long double>(traces.size());
      result.grid[static_cast<std::size_t>(g) * q_buckets + q] = static_cast<double>(mean);
      expected += mean * ((q + 0.5L) / q_buckets);
    }
    result.expected_curve[g] = static_cast<double>(expected);
  }
  return result;
}

}  // namespace progresskit::oracle
