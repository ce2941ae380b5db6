#include "progresskit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "progresskit/errors.hpp"
#include "progresskit/label.hpp"

namespace progresskit {

namespace {

using nlohmann::json;

void validate_group(const RolloutGroup& group) {
  if (group.prefix_len < 1) throw DataError("rollout group with prefix length < 1");
  if (group.continuation_lens.size() < 2) {
    throw DataError("rollout group '" + group.trace_id + "' needs >= 2 continuations");
  }
  for (std::int64_t len : group.continuation_lens) {
    if (len < 0) throw DataError("negative continuation length");
  }
}

// Mean absolute deviation of one group around its own mean; optionally
// normalized by that mean.
double group_dispersion(const RolloutGroup& group, bool normalized) {
  const std::size_t r = group.continuation_lens.size();
  std::vector<double> progress(r);
  double mean = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    progress[i] = rollout_progress(group.prefix_len, group.continuation_lens[i]);
    mean += progress[i];
  }
  mean /= static_cast<double>(r);
  double deviation = 0.0;
  for (double g : progress) deviation += std::abs(g - mean);
  deviation /= static_cast<double>(r);
  return normalized ? deviation / mean : deviation;
}

double mean_realized(const RolloutGroup& group) {
  double mean = 0.0;
  for (std::int64_t len : group.continuation_lens) {
    mean += rollout_progress(group.prefix_len, len);
  }
  return mean / static_cast<double>(group.continuation_lens.size());
}

double dispersion_over(std::span<const RolloutGroup> groups, bool normalized) {
  if (groups.empty()) throw DataError("no rollout groups");
  double sum = 0.0;
  for (const RolloutGroup& group : groups) {
    validate_group(group);
    sum += group_dispersion(group, normalized);
  }
  return sum / static_cast<double>(groups.size());
}

void validate_marker(const Marker& marker) {
  if (marker.prefix_len < 1) throw DataError("marker with prefix length < 1");
  if (marker.predicted < 0.0 || marker.predicted > 1.0) {
    throw DataError("predicted progress outside [0, 1]");
  }
  if (marker.realized < 0.0 || marker.realized > 1.0) {
    throw DataError("realized progress outside [0, 1]");
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

double progress_mae(std::span<const MarkerSeries> series) {
  double sum = 0.0;
  std::int64_t count = 0;
  for (const MarkerSeries& trace : series) {
    for (const Marker& marker : trace.markers) {
      validate_marker(marker);
      sum += std::abs(marker.predicted - marker.realized);
      ++count;
    }
  }
  if (count == 0) throw DataError("no markers to score");
  return sum / static_cast<double>(count);
}

double mad(std::span<const RolloutGroup> groups) { return dispersion_over(groups, false); }

double mapd(std::span<const RolloutGroup> groups) { return dispersion_over(groups, true); }

std::vector<BinStat> nonmonotonic_fraction(std::span<const MarkerSeries> series,
                                           int position_bins) {
  if (position_bins < 1) throw std::invalid_argument("position bins must be >= 1");

  std::vector<std::int64_t> eligible(position_bins, 0);
  std::vector<std::int64_t> nonmonotonic(position_bins, 0);
  for (const MarkerSeries& trace : series) {
    if (trace.markers.size() < 2) {
      throw DataError("series '" + trace.trace_id + "' has fewer than 2 markers");
    }
    for (std::size_t j = 1; j < trace.markers.size(); ++j) {
      validate_marker(trace.markers[j]);
      int bin = static_cast<int>(trace.markers[j].realized * position_bins);
      if (bin >= position_bins) bin = position_bins - 1;
      ++eligible[bin];
      if (trace.markers[j].predicted < trace.markers[j - 1].predicted) ++nonmonotonic[bin];
    }
  }

  std::int64_t total = 0;
  for (std::int64_t n : eligible) total += n;
  if (total == 0) throw DataError("no eligible markers");

  std::vector<BinStat> bins;
  bins.reserve(position_bins);
  const double width = 1.0 / position_bins;
  for (int b = 0; b < position_bins; ++b) {
    BinStat stat;
    stat.lower = b * width;
    stat.upper = (b + 1) * width;
    stat.count = eligible[b];
    stat.value = eligible[b] == 0
                     ? 0.0
                     : static_cast<double>(nonmonotonic[b]) / static_cast<double>(eligible[b]);
    bins.push_back(stat);
  }
  return bins;
}

std::vector<BinStat> bin_by_length(std::span<const std::pair<std::int64_t, double>> values,
                                   int n_bins) {
  if (n_bins < 1) throw std::invalid_argument("bin count must be >= 1");
  if (values.empty()) throw DataError("no values to bin");

  // Ties sort by value too, so binning is independent of input order.
  std::vector<std::pair<std::int64_t, double>> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  const std::int64_t n = static_cast<std::int64_t>(sorted.size());
  std::vector<BinStat> bins;
  for (int b = 0; b < n_bins; ++b) {
    const std::int64_t begin = b * n / n_bins;
    const std::int64_t end = (b + 1) * n / n_bins;
    if (begin >= end) continue;
    BinStat stat;
    stat.lower = static_cast<double>(sorted[begin].first);
    stat.upper = static_cast<double>(sorted[end - 1].first);
    stat.count = end - begin;
    double sum = 0.0;
    for (std::int64_t i = begin; i < end; ++i) sum += sorted[i].second;
    stat.value = sum / static_cast<double>(end - begin);
    bins.push_back(stat);
  }
  return bins;
}

std::vector<DispersionBin> dispersion_curve(std::span<const RolloutGroup> groups, int n_bins,
                                            DispersionBinKey key) {
  if (n_bins < 1) throw std::invalid_argument("bin count must be >= 1");
  if (groups.empty()) throw DataError("no rollout groups");
  for (const RolloutGroup& group : groups) validate_group(group);

  double lo = 0.0;
  double hi = 1.0;
  if (key == DispersionBinKey::kPrefixLength) {
    lo = static_cast<double>(groups.front().prefix_len);
    hi = lo;
    for (const RolloutGroup& group : groups) {
      lo = std::min(lo, static_cast<double>(group.prefix_len));
      hi = std::max(hi, static_cast<double>(group.prefix_len));
    }
    if (hi == lo) hi = lo + 1.0;
  }

  const double width = (hi - lo) / n_bins;
  std::vector<std::vector<RolloutGroup>> binned(n_bins);
  for (const RolloutGroup& group : groups) {
    const double v = key == DispersionBinKey::kMeanRealized
                         ? mean_realized(group)
                         : static_cast<double>(group.prefix_len);
    int bin = static_cast<int>((v - lo) / width);
    if (bin < 0) bin = 0;
    if (bin >= n_bins) bin = n_bins - 1;
    binned[bin].push_back(group);
  }

  std::vector<DispersionBin> result;
  for (int b = 0; b < n_bins; ++b) {
    if (binned[b].empty()) continue;
    DispersionBin bin;
    bin.lower = lo + b * width;
    bin.upper = lo + (b + 1) * width;
    bin.count = static_cast<std::int64_t>(binned[b].size());
    bin.mad = mad(binned[b]);
    bin.mapd = mapd(binned[b]);
    result.push_back(bin);
  }
  return result;
}

PairedMae conditioned_vs_unconditioned(std::span<const MarkerSeries> conditioned,
                                       std::span<const MarkerSeries> unconditioned) {
  std::set<std::pair<std::string, std::size_t>> cond_keys;
  std::set<std::pair<std::string, std::size_t>> uncond_keys;
  for (const MarkerSeries& trace : conditioned) {
    for (std::size_t j = 0; j < trace.markers.size(); ++j) cond_keys.insert({trace.trace_id, j});
  }
  for (const MarkerSeries& trace : unconditioned) {
    for (std::size_t j = 0; j < trace.markers.size(); ++j) uncond_keys.insert({trace.trace_id, j});
  }
  if (cond_keys != uncond_keys) {
    std::string missing;
    int listed = 0;
    auto describe = [&](const auto& keys, const auto& other, const char* side) {
      for (const auto& key : keys) {
        if (other.contains(key)) continue;
        if (listed == 10) {
          missing += " ...";
          return;
        }
        missing += std::string(" ") + side + ":" + key.first + "#" + std::to_string(key.second);
        ++listed;
      }
    };
    describe(cond_keys, uncond_keys, "cond-only");
    describe(uncond_keys, cond_keys, "uncond-only");
    throw DataError("marker key sets differ:" + missing);
  }

  PairedMae result;
  result.cond_mae = progress_mae(conditioned);
  result.uncond_mae = progress_mae(unconditioned);
  return result;
}

std::vector<MarkerSeries> read_marker_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open marker series: " + path.string());
  std::vector<MarkerSeries> series;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("malformed marker series at line " + std::to_string(line_number) + ": " +
                       e.what());
    }

    MarkerSeries trace;
    trace.trace_id = obj.at("trace_id").get<std::string>();
    trace.completed_len = obj.value("m", std::int64_t{0});
    std::int64_t prev_k = 0;
    for (const json& marker_obj : obj.at("markers")) {
      Marker marker;
      marker.prefix_len = marker_obj.at("k").get<std::int64_t>();
      marker.predicted = marker_obj.at("value").get<double>();
      if (marker_obj.contains("realized")) {
        marker.realized = marker_obj["realized"].get<double>();
      } else if (trace.completed_len > 0) {
        marker.realized = realized_progress(marker.prefix_len, trace.completed_len);
      } else {
        throw SchemaError("marker without realized value and no trace length (line " +
                          std::to_string(line_number) + ")");
      }
      if (marker.prefix_len <= prev_k) {
        throw SchemaError("marker prefix lengths must strictly increase (line " +
                          std::to_string(line_number) + ")");
      }
      prev_k = marker.prefix_len;
      validate_marker(marker);
      trace.markers.push_back(marker);
    }
    series.push_back(std::move(trace));
  }
  return series;
}

void write_marker_series(const std::filesystem::path& path,
                         std::span<const MarkerSeries> series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write marker series: " + path.string());
  for (const MarkerSeries& trace : series) {
    json markers = json::array();
    for (const Marker& marker : trace.markers) {
      markers.push_back({{"k", marker.prefix_len},
                         {"value", marker.predicted},
                         {"realized", marker.realized}});
    }
    json obj = {{"trace_id", trace.trace_id}, {"markers", markers}};
    if (trace.completed_len > 0) obj["m"] = trace.completed_len;
    out << obj.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<RolloutGroup> read_rollout_groups(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rollout groups: " + path.string());
  std::vector<RolloutGroup> groups;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("malformed rollout group at line " + std::to_string(line_number) + ": " +
                       e.what());
    }
    RolloutGroup group;
    group.trace_id = obj.at("trace_id").get<std::string>();
    group.prefix_len = obj.at("k").get<std::int64_t>();
    for (const json& len : obj.at("continuations")) {
      group.continuation_lens.push_back(len.get<std::int64_t>());
    }
    validate_group(group);
    groups.push_back(std::move(group));
  }
  return groups;
}

void write_rollout_groups(const std::filesystem::path& path,
                          std::span<const RolloutGroup> groups) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write rollout groups: " + path.string());
  for (const RolloutGroup& group : groups) {
    json obj = {{"trace_id", group.trace_id},
                {"k", group.prefix_len},
                {"continuations", group.continuation_lens}};
    out << obj.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_bin_csv(const std::filesystem::path& path, std::span<const BinStat> bins) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write CSV: " + path.string());
  out << "bin_lower,bin_upper,count,value\n";
  for (const BinStat& bin : bins) {
    out << format_double(bin.lower) << ',' << format_double(bin.upper) << ',' << bin.count << ','
        << format_double(bin.value) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_dispersion_csv(const std::filesystem::path& path,
                          std::span<const DispersionBin> bins) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write CSV: " + path.string());
  out << "bin_lower,bin_upper,count,mad,mapd\n";
  for (const DispersionBin& bin : bins) {
    out << format_double(bin.lower) << ',' << format_double(bin.upper) << ',' << bin.count << ','
        << format_double(bin.mad) << ',' << format_double(bin.mapd) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace progresskit
