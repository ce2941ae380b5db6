#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace progresskit {

// One sampled prefix with the completed lengths of r continuations branched
// from it. Dispersion metrics need r >= 2.
struct RolloutGroup {
  std::string trace_id;
  std::int64_t prefix_len = 0;
  std::vector<std::int64_t> continuation_lens;
};

// One progress report: emitted after a prefix of k tokens, predicting
// progress `predicted` while the realized value was `realized`.
struct Marker {
  std::int64_t prefix_len = 0;
  double predicted = 0.0;
  double realized = 0.0;
};

// Ordered progress reports of one trace; prefix lengths strictly increase.
struct MarkerSeries {
  std::string trace_id;
  std::int64_t completed_len = 0;
  std::vector<Marker> markers;
};

// Mean |predicted - realized| pooled over every marker of every series.
double progress_mae(std::span<const MarkerSeries> series);

// Mean absolute deviation of realized rollout progress around each group's
// own mean; groups with differing rollout counts are weighted by group, which
// reduces to 1/(rN) double-sum weighting when r is constant.
double mad(std::span<const RolloutGroup> groups);

// Same residuals normalized by each group's mean realized progress.
double mapd(std::span<const RolloutGroup> groups);

struct BinStat {
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t count = 0;
  double value = 0.0;
};

// Marker j >= 2 is non-monotonic iff predicted_j < predicted_{j-1}; markers
// are binned by realized position into equal-width bins over [0, 1] and each
// bin reports nonmonotonic / eligible markers. Every series needs >= 2
// markers.
std::vector<BinStat> nonmonotonic_fraction(std::span<const MarkerSeries> series,
                                           int position_bins);

// Equal-population bins over completed length (ties broken by value so the
// result is independent of input order); each bin reports the mean value.
std::vector<BinStat> bin_by_length(std::span<const std::pair<std::int64_t, double>> values,
                                   int n_bins);

struct DispersionBin {
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t count = 0;
  double mad = 0.0;
  double mapd = 0.0;
};

enum class DispersionBinKey { kMeanRealized, kPrefixLength };

// Per-bin MAD and MAPD. The default key bins groups by mean realized progress
// into equal-width bins over [0, 1]; kPrefixLength bins by raw prefix length
// over [min, max]. Empty bins are omitted.
std::vector<DispersionBin> dispersion_curve(std::span<const RolloutGroup> groups, int n_bins,
                                            DispersionBinKey key = DispersionBinKey::kMeanRealized);

struct PairedMae {
  double cond_mae = 0.0;
  double uncond_mae = 0.0;
};

// Scores two marker-series sets covering identical (trace_id, marker_index)
// keys; raises DataError listing the missing keys otherwise.
PairedMae conditioned_vs_unconditioned(std::span<const MarkerSeries> conditioned,
                                       std::span<const MarkerSeries> unconditioned);

// Marker-series JSONL: {"trace_id", "m", "markers": [{"k", "value",
// "realized"}]}; absent realized values default to k/m when m is present.
std::vector<MarkerSeries> read_marker_series(const std::filesystem::path& path);
void write_marker_series(const std::filesystem::path& path, std::span<const MarkerSeries> series);

// Rollout-group JSONL: {"trace_id", "k", "continuations": [ints]}.
std::vector<RolloutGroup> read_rollout_groups(const std::filesystem::path& path);
void write_rollout_groups(const std::filesystem::path& path, std::span<const RolloutGroup> groups);

// CSV emission, schema bin_lower,bin_upper,count,value (dispersion adds both
// metric columns).
void write_bin_csv(const std::filesystem::path& path, std::span<const BinStat> bins);
void write_dispersion_csv(const std::filesystem::path& path, std::span<const DispersionBin> bins);

}  // namespace progresskit
