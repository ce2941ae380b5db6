#include "progresskit/baselines.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <vector>

#include "progresskit/errors.hpp"

namespace progresskit {

namespace {

using nlohmann::json;

// Lower-middle element for even counts.
double lower_median(std::vector<std::int64_t>& lengths) {
  std::sort(lengths.begin(), lengths.end());
  return static_cast<double>(lengths[(lengths.size() - 1) / 2]);
}

}  // namespace

LengthStats compute_length_stats(std::span<const ReasoningTrace> traces) {
  if (traces.empty()) throw DataError("cannot compute length stats of an empty corpus");

  LengthStats stats;
  std::map<GroupKey, std::vector<std::int64_t>> grouped;
  double global_sum = 0.0;
  for (const ReasoningTrace& trace : traces) {
    if (trace.token_count < 1) throw DataError("trace with token_count < 1: " + trace.id);
    if (trace.model_family.empty() || trace.task.empty()) {
      throw DataError("trace with empty group key: " + trace.id);
    }
    global_sum += static_cast<double>(trace.token_count);
    grouped[{trace.model_family, trace.task}].push_back(trace.token_count);
  }
  stats.total_count = static_cast<std::int64_t>(traces.size());
  stats.global_mean = global_sum / static_cast<double>(traces.size());

  for (auto& [key, lengths] : grouped) {
    double sum = 0.0;
    for (std::int64_t n : lengths) sum += static_cast<double>(n);
    stats.group_mean[key] = sum / static_cast<double>(lengths.size());
    stats.group_count[key] = static_cast<std::int64_t>(lengths.size());
    stats.group_median[key] = lower_median(lengths);
  }
  return stats;
}

double global_mean_baseline(std::int64_t prefix_len, const LengthStats& stats) {
  if (prefix_len < 1) throw std::invalid_argument("prefix length must be >= 1");
  if (stats.global_mean < 1.0) throw DataError("length stats not initialized");
  return clip01(static_cast<double>(prefix_len) / stats.global_mean);
}

double group_stat_baseline(std::int64_t prefix_len, const GroupKey& group,
                           const LengthStats& stats, GroupStatistic statistic) {
  if (prefix_len < 1) throw std::invalid_argument("prefix length must be >= 1");
  const auto& table = statistic == GroupStatistic::kMean ? stats.group_mean : stats.group_median;
  const auto it = table.find(group);
  if (it == table.end()) return global_mean_baseline(prefix_len, stats);
  return clip01(static_cast<double>(prefix_len) / it->second);
}

double previous_marker_baseline(int marker_index, std::int64_t prefix_len,
                                const std::optional<PreviousMarker>& previous,
                                double group_median) {
  if (marker_index < 1) throw std::invalid_argument("marker index must be >= 1");
  if (prefix_len < 1) throw std::invalid_argument("prefix length must be >= 1");
  if (marker_index == 1) {
    if (group_median < 1.0) throw DataError("group median not available");
    return clip01(static_cast<double>(prefix_len) / group_median);
  }
  if (!previous.has_value()) throw DataError("previous marker required for index > 1");
  if (previous->prefix_len < 1) throw DataError("previous prefix length must be >= 1");
  if (previous->value <= 0.0) {
    throw DataError("previous progress value is zero; implied length is undefined");
  }
  return clip01(static_cast<double>(prefix_len) * previous->value /
                static_cast<double>(previous->prefix_len));
}

void write_length_stats(const std::filesystem::path& path, const LengthStats& stats) {
  json groups = json::array();
  for (const auto& [key, median] : stats.group_median) {
    groups.push_back({
        {"model_family", key.model_family},
        {"task", key.task},
        {"mean", stats.group_mean.at(key)},
        {"median", median},
        {"count", stats.group_count.at(key)},
    });
  }
  json obj = {
      {"global_mean", stats.global_mean},
      {"total_count", stats.total_count},
      {"groups", groups},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write length stats: " + path.string());
  out << obj.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

LengthStats read_length_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open length stats: " + path.string());
  json obj;
  try {
    obj = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed length stats: ") + e.what());
  }

  LengthStats stats;
  stats.global_mean = obj.at("global_mean").get<double>();
  stats.total_count = obj.at("total_count").get<std::int64_t>();
  for (const json& group : obj.at("groups")) {
    GroupKey key{group.at("model_family").get<std::string>(), group.at("task").get<std::string>()};
    stats.group_mean[key] = group.at("mean").get<double>();
    stats.group_median[key] = group.at("median").get<double>();
    stats.group_count[key] = group.at("count").get<std::int64_t>();
  }
  return stats;
}

}  // namespace progresskit
