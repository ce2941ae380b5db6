#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "progresskit/trace.hpp"

namespace progresskit {

struct GroupKey {
  std::string model_family;
  std::string task;

  auto operator<=>(const GroupKey&) const = default;
};

// Completed-length statistics over a trace corpus, globally and per
// (model_family, task) group. These feed diagnostic baselines that predict
// progress from token position alone.
struct LengthStats {
  double global_mean = 0.0;
  std::int64_t total_count = 0;
  std::map<GroupKey, double> group_mean;
  std::map<GroupKey, double> group_median;
  std::map<GroupKey, std::int64_t> group_count;

  bool has_group(const GroupKey& key) const { return group_median.contains(key); }
};

// Arithmetic means and medians of token_count; an even-sized group's median
// is the lower-middle element. Throws DataError on an empty corpus.
LengthStats compute_length_stats(std::span<const ReasoningTrace> traces);

inline double clip01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

// clip(prefix_len / global mean completed length).
double global_mean_baseline(std::int64_t prefix_len, const LengthStats& stats);

enum class GroupStatistic { kMean, kMedian };

// clip(prefix_len / group statistic). Unknown groups fall back to the global
// mean; callers that want to report the fallback check has_group first.
double group_stat_baseline(std::int64_t prefix_len, const GroupKey& group,
                           const LengthStats& stats, GroupStatistic statistic);

struct PreviousMarker {
  std::int64_t prefix_len = 0;
  double value = 0.0;  // clipped progress reported at that prefix
};

// First marker: clip(k_1 / group median). Later markers reuse the total
// length implied by the previous report: clip(k_j * p_{j-1} / k_{j-1}).
// A zero previous value implies an infinite length estimate and raises
// DataError so the caller can skip the marker.
double previous_marker_baseline(int marker_index, std::int64_t prefix_len,
                                const std::optional<PreviousMarker>& previous,
                                double group_median);

void write_length_stats(const std::filesystem::path& path, const LengthStats& stats);
LengthStats read_length_stats(const std::filesystem::path& path);

}  // namespace progresskit
