#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>

#include "progresskit/baselines.hpp"
#include "progresskit/metrics.hpp"
#include "progresskit/probe.hpp"

// Independent re-implementations of the measurement formulas, used as ground
// truth against the main floating-point paths. They deliberately take
// structurally different routes: interval scans instead of index arithmetic,
// exact rational accumulation instead of running double sums, pointwise
// bracket search instead of stepped interpolation.
namespace progresskit::oracle {

// Scans the Q intervals for the one containing k/m (exact integer
// comparisons), last interval closed at 1.
int bucket_by_scan(std::int64_t k, std::int64_t m, int q_buckets);

// MAD and MAPD with exact rational arithmetic throughout, converted to
// double only at the end.
std::pair<double, double> mad_mapd_exact(std::span<const RolloutGroup> groups);

// Pooled mean |predicted - realized| with exact rational accumulation
// (doubles convert to rationals exactly).
double progress_mae_exact(std::span<const MarkerSeries> series);

// Baseline predictions recomputed from raw lengths with exact rationals.
double global_mean_baseline_exact(std::int64_t prefix_len,
                                  std::span<const std::int64_t> lengths);
double group_stat_baseline_exact(std::int64_t prefix_len,
                                 std::span<const std::int64_t> group_lengths,
                                 GroupStatistic statistic);
double previous_marker_baseline_exact(int marker_index, std::int64_t prefix_len,
                                      const std::optional<PreviousMarker>& previous,
                                      double group_median);

// Heatmap aggregation recomputed per grid point with a linear bracket scan
// and long-double accumulation.
HeatmapResult heatmap_by_scan(std::span<const TraceDistributions> traces, int grid_points);

}  // namespace progresskit::oracle
