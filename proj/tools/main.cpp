// progresskit command-line tool: corpus annotation, masking, labeling,
// probe training/evaluation, position baselines, scoring, dispersion, and
// live stream parsing. Every subcommand writes a manifest.json next to its
// outputs; reruns with identical inputs and seeds reproduce identical data
// artifacts.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "progresskit/annotate.hpp"
#include "progresskit/baselines.hpp"
#include "progresskit/errors.hpp"
#include "progresskit/hidden_state_io.hpp"
#include "progresskit/label.hpp"
#include "progresskit/manifest.hpp"
#include "progresskit/markers.hpp"
#include "progresskit/metrics.hpp"
#include "progresskit/oracles.hpp"
#include "progresskit/probe.hpp"
#include "progresskit/rng.hpp"
#include "progresskit/stream.hpp"
#include "progresskit/synth.hpp"
#include "progresskit/tokenize.hpp"
#include "progresskit/trace.hpp"
#include "progresskit/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace progresskit;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

fs::path ensure_out_dir(const std::string& dir) {
  fs::path path(dir);
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw IoError("cannot create output directory: " + dir);
  return path;
}

RunManifest new_manifest(const std::string& command) {
  RunManifest manifest;
  manifest.command = command;
  manifest.tool_version = std::string(kToolVersion);
  return manifest;
}

void add_input(RunManifest& manifest, const fs::path& path) {
  manifest.inputs.emplace_back(path.string(), fnv1a_file_hex(path));
}

void finalize_manifest(RunManifest& manifest, const fs::path& out_dir) {
  manifest.created_at = current_timestamp_utc();
  write_manifest(out_dir, manifest);
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::vector<json> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError("malformed JSON at " + path.string() + ":" + std::to_string(line_number) +
                       ": " + e.what());
    }
  }
  return records;
}

void write_jsonl(const fs::path& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  for (const json& record : records) out << record.dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  SynthConfig cfg;
  std::string shape = "uniform";
  bool features = false;
  int rollout_groups = 0;
  int rollouts_per_group = 8;
  std::string out_dir;
};

void run_synth(const SynthArgs& args) {
  SynthConfig cfg = args.cfg;
  cfg.shape = args.shape == "lognormal" ? LengthShape::kLognormal : LengthShape::kUniform;

  const fs::path out = ensure_out_dir(args.out_dir);
  RunManifest manifest = new_manifest("synth");
  manifest.seed = cfg.seed;
  manifest.config = {{"n_traces", std::to_string(cfg.n_traces)},
                     {"min_len", std::to_string(cfg.min_len)},
                     {"max_len", std::to_string(cfg.max_len)},
                     {"shape", args.shape},
                     {"d", std::to_string(cfg.d)},
                     {"signal_scale", fmt(cfg.signal_scale)},
                     {"noise_sigma", fmt(cfg.noise_sigma)},
                     {"question_rows", std::to_string(cfg.n_question_rows)}};

  const std::vector<ReasoningTrace> traces = gen_traces(cfg);
  write_trace_file(out / "traces.jsonl", traces);
  manifest.outputs.push_back("traces.jsonl");

  if (args.features) {
    const fs::path feature_dir = out / "features";
    fs::create_directories(feature_dir);
    std::vector<FeatureManifestEntry> entries;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const HiddenStateMatrix hs =
          gen_features(traces[i].token_count, static_cast<int>(i), cfg);
      const std::string name = traces[i].id + ".pphs";
      write_hidden_states(feature_dir / name, hs);
      entries.push_back({traces[i].id, "features/" + name});
    }
    write_feature_manifest(out / "features_manifest.jsonl", entries);
    manifest.outputs.push_back("features_manifest.jsonl");
    manifest.outputs.push_back("features/");
  }

  if (args.rollout_groups > 0) {
    const auto groups = gen_rollout_groups(args.rollout_groups, args.rollouts_per_group,
                                           cfg.max_len, cfg.max_len * 3, cfg.seed);
    write_rollout_groups(out / "rollouts.jsonl", groups);
    manifest.outputs.push_back("rollouts.jsonl");
  }

  finalize_manifest(manifest, out);
  std::cout << "synth: wrote " << traces.size() << " traces to " << out.string()
            << (args.features ? " with hidden states" : "") << "\n";
}

// ---------------------------------------------------------------------------
// annotate

struct AnnotateArgs {
  std::string input;
  std::string out_dir;
  double gamma = 0.0;  // 0 disables loss weights
};

void run_annotate(const AnnotateArgs& args) {
  const fs::path out = ensure_out_dir(args.out_dir);
  RunManifest manifest = new_manifest("annotate");
  add_input(manifest, args.input);
  manifest.config = {{"gamma", fmt(args.gamma)}};

  const std::vector<ReasoningTrace> traces = read_trace_file(args.input);
  std::vector<json> annotated_records;
  std::vector<MarkerSeries> all_series;
  std::size_t marker_count = 0;

  for (const ReasoningTrace& trace : traces) {
    if (!find_marker_spans(trace.reasoning).empty()) {
      throw SchemaError("trace '" + trace.id + "' already contains markers");
    }
    const Segmentation seg = segment_paragraphs(trace.reasoning);
    const AnnotatedText annotated = insert_annotations(seg);
    const auto clean_tokens = static_cast<std::int64_t>(count_tokens(trace.reasoning));

    json record = {
        {"id", trace.id},
        {"question", trace.question},
        {"reasoning", annotated.text},
        {"answer", trace.answer},
        {"model_family", trace.model_family},
        {"task", trace.task},
        {"token_count", clean_tokens},
    };
    json annotations = json::array();
    for (const ProgressAnnotation& a : annotated.annotations) {
      annotations.push_back({{"position", a.position}, {"value", a.value}});
    }
    record["annotations"] = annotations;
    if (args.gamma >= 1.0) {
      const auto tokens = tokenize_annotated(annotated.text);
      record["loss_weights"] = loss_weights(tokens, args.gamma);
    }
    annotated_records.push_back(std::move(record));

    MarkerSeries series;
    series.trace_id = trace.id;
    series.completed_len = clean_tokens;
    for (const ProgressAnnotation& a : annotated.annotations) {
      series.markers.push_back({a.position, a.value / 100.0,
                                realized_progress(a.position, clean_tokens)});
    }
    marker_count += series.markers.size();
    all_series.push_back(std::move(series));
  }

  write_jsonl(out / "annotated.jsonl", annotated_records);
  write_marker_series(out / "markers.jsonl", all_series);
  manifest.outputs = {"annotated.jsonl", "markers.jsonl"};
  finalize_manifest(manifest, out);
  std::cout << "annotate: " << traces.size() << " traces, " << marker_count << " markers\n";
}

// ---------------------------------------------------------------------------
// mask

struct MaskArgs {
  std::string input;
  std::string out_dir;
  std::uint64_t seed = 0;
  double rho = -1.0;  // direct rho wins when >= 0
  int step = 0;
  int total_steps = 0;
  double rho_max = 0.5;
  bool mask_all = false;
  double gamma = 0.0;
};

void run_mask(const MaskArgs& args) {
  double rho = args.rho;
  if (rho < 0.0) {
    if (args.total_steps < 1) {
      throw std::invalid_argument("either --rho or --step/--total-steps is required");
    }
    rho = cosine_rho(args.step, {args.total_steps, args.rho_max});
  }

  const fs::path out = ensure_out_dir(args.out_dir);
  RunManifest manifest = new_manifest("mask");
  add_input(manifest, args.input);
  manifest.seed = args.seed;
  manifest.config = {{"rho", fmt(rho)},
                     {"step", std::to_string(args.step)},
                     {"total_steps", std::to_string(args.total_steps)},
                     {"rho_max", fmt(args.rho_max)},
                     {"keep_last", args.mask_all ? "false" : "true"}};

  std::vector<json> records = read_jsonl(args.input);
  std::size_t total_spans = 0;
  std::size_t kept_spans = 0;
  std::size_t index = 0;
  for (json& record : records) {
    if (!record.contains("reasoning")) throw SchemaError("record without reasoning field");
    const std::string text = record["reasoning"].get<std::string>();
    total_spans += find_marker_spans(text).size();
    const std::string masked =
        mask_annotations(text, rho, mix_seed(args.seed, index), !args.mask_all);
    kept_spans += find_marker_spans(masked).size();
    record["reasoning"] = masked;

    const ExtractionResult extraction = extract_annotations(masked);
    json annotations = json::array();
    for (const ProgressAnnotation& a : extraction.annotations) {
      annotations.push_back({{"position", a.position}, {"value", a.value}});
    }
    record["annotations"] = annotations;
    if (args.gamma >= 1.0) {
      record["loss_weights"] = loss_weights(tokenize_annotated(masked), args.gamma);
    } else {
      record.erase("loss_weights");
    }
    ++index;
  }

  write_jsonl(out / "masked.jsonl", records);
  manifest.outputs = {"masked.jsonl"};
  finalize_manifest(manifest, out);
  std::cout << "mask: removed " << (total_spans - kept_spans) << " of " << total_spans
            << " spans (rho=" << fmt(rho) << ")\n";
}

// ---------------------------------------------------------------------------
// label

struct LabelArgs {
  std::string input;
  std::string out_dir;
  int buckets = kDefaultBucketCount;
  std::int64_t stride = 1;
};

void run_label(const LabelArgs& args) {
  if (args.stride < 1) throw std::invalid_argument("stride must be >= 1");
  const fs::path out = ensure_out_dir(args.out_dir);
  RunManifest manifest = new_manifest("label");
  add_input(manifest, args.input);
  manifest.config = {{"buckets", std::to_string(args.buckets)},
                     {"stride", std::to_string(args.stride)}};

  const std::vector<ReasoningTrace> traces = read_trace_file(args.input);
  std::ofstream csv(out / "labels.csv", std::ios::binary);
  if (!csv) throw IoError("cannot write labels.csv");
  csv << "trace_id,k,m,bucket\n";
  std::size_t rows = 0;
  for (const ReasoningTrace& trace : traces) {
    for (std::int64_t k = 1; k <= trace.token_count; k += args.stride) {
      csv << trace.id << ',' << k << ',' << trace.token_count << ','
          << bucketize(k, trace.token_count, args.buckets) << '\n';
      ++rows;
    }
  }
  if (!csv) throw IoError("write failed: labels.csv");

  manifest.outputs = {"labels.csv"};
  finalize_manifest(manifest, out);
  std::cout << "label: " << rows << " rows over " << traces.size() << " traces\n";
}

// ---------------------------------------------------------------------------
// split

struct SplitArgs {
  std::string input;
  std::string out_dir;
  std::int64_t threshold = kDefaultLengthThreshold;
};

void run_split(const SplitArgs& args) {
  const fs::path out = ensure_out_dir(args.out_dir);
  RunManifest manifest = new_manifest("split");
  add_input(manifest, args.input);
  manifest.config = {{"threshold", std::to_string(args.threshold)}};

  const std::vector<ReasoningTrace> traces = read_trace_file(args.input);
  const DatasetSplit split = split_by_length(traces, args.threshold);
  write_trace_file(out / "in_domain.jsonl", split.in_domain);
  write_trace_file(out / "held_out.jsonl", split.held_out);

  manifest.outputs = {"in_domain.jsonl", "held_out.jsonl"};
  finalize_manifest(manifest, out);
  std::cout << "split: " << split.in_domain.size() << " in-domain, " << split.held_out.size()
            << " held-out (threshold " << args.threshold << ")\n";
}

// ---------------------------------------------------------------------------
// probe-train / probe-eval / heatmap helpers

struct LoadedFeatures {
  FeatureMatrix features;
  std::vector<int> labels;
  std::vector<double> realized;
};

// Stacks per-trace features with per-token bucket labels and realized
// progress; labels come from token positions within each trace.
LoadedFeatures load_features(const fs::path& manifest_path,
                             std::span<const FeatureManifestEntry> entries, ProbeMode mode,
                             int n_question_tokens, int q_buckets) {
  LoadedFeatures data;
  for (const FeatureManifestEntry& entry : entries) {
    const HiddenStateMatrix hs =
        read_hidden_states(resolve_manifest_path(manifest_path, entry.path));
    const FeatureMatrix features = build_features(hs, mode, n_question_tokens);
    if (data.features.dim == 0) {
      data.features.dim = features.dim;
    } else if (data.features.dim != features.dim) {
      throw DataError("inconsistent feature dimension across traces");
    }
    data.features.values.insert(data.features.values.end(), features.values.begin(),
                                features.values.end());
    data.features.rows += features.rows;
    for (int k = 1; k <= hs.m; ++k) {
      data.labels.push_back(bucketize(k, hs.m, q_buckets));
      data.realized.push_back(realized_progress(k, hs.m));
    }
  }
  if (data.features.rows == 0) throw DataError("feature manifest is empty");
  return data;
}

struct ProbeTrainArgs {
  std::string features;
  std::string mode = "token";
  int question_tokens = kDefaultQuestionTokens;
  int buckets = kDefaultBucketCount;
  TrainConfig train;
  double holdout_fraction = 0.2;
  std::string layer_tag = "unspecified";
  int threads = 1;
  std::string out_dir;
};

void run_probe_train(const ProbeTrainArgs& args) {
  if (args.holdout_fraction < 0.0 || args.holdout_fraction >= 1.0) {
    throw std::invalid_argument("holdout fraction must be in [0, 1)");
  }
  const fs::path out = ensure_out_dir(args.out_dir);
  RunManifest manifest = new_manifest("probe-train");
  add_input(manifest, args.features);
  manifest.seed = args.train.seed;
  manifest.config = {{"mode", args.mode},
                     {"question_tokens", std::to_string(args.question_tokens)},
                     {"buckets", std::to_string(args.buckets)},
                     {"step_size", fmt(args.train.step_size)},
                     {"epochs", std::to_string(args.train.epochs)},
                     {"batch_size", std::to_string(args.train.batch_size)},
                     {"holdout_fraction", fmt(args.holdout_fraction)},
                     {"layer_tag", args.layer_tag}};

  const ProbeMode mode = probe_mode_from_string(args.mode);
  const auto entries = read_feature_manifest(args.features);
  const auto n_holdout =
      static_cast<std::size_t>(args.holdout_fraction * static_cast<double>(entries.size()));
  const std::span<const FeatureManifestEntry> train_entries(entries.data(),
                                                            entries.size() - n_holdout);
  const std::span<const FeatureManifestEntry> holdout_entries(
      entries.data() + entries.size() - n_holdout, n_holdout);

  const LoadedFeatures train_data =
      load_features(args.features, train_entries, mode, args.question_tokens, args.buckets);
  const ProbeModel model =
      train_probe(train_data.features, train_data.labels, args.buckets, args.train, mode,
                  args.question_tokens, args.layer_tag);
  save_probe_model(out / "probe_model.bin", model);
  manifest.outputs = {"probe_model.bin"};

  std::string summary = "probe-train: final_loss=" + fmt(model.final_train_loss) +
                        " train_tokens=" + std::to_string(train_data.features.rows);
  if (!holdout_entries.empty()) {
    const LoadedFeatures holdout =
        load_features(args.features, holdout_entries, mode, args.question_tokens, args.buckets);
    const ProbeEvaluation eval =
        evaluate_probe(model, holdout.features, holdout.labels, args.threads);
    std::vector<int> top1_buckets(holdout.features.rows);
    for (std::int64_t r = 0; r < holdout.features.rows; ++r) {
      top1_buckets[r] = top1(predict(model, holdout.features.row(r)));
    }
    const double pct = percent_mae(top1_buckets, holdout.realized, model.q_buckets);
    summary += " holdout_acc=" + fmt(eval.top1_accuracy) +
               " holdout_bucket_mae=" + fmt(eval.bucket_mae) + " holdout_percent_mae=" + fmt(pct);
  }
  finalize_manifest(manifest, out);
  std::cout << summary << "\n";
}

struct ProbeEvalArgs {
  std::string model;
  std::string features;
  int threads = 1;
  std::string out_dir;
};

void run_probe_eval(const ProbeEvalArgs& args) {
  const ProbeModel model = load_probe_model(args.model);
  const auto entries = read_feature_manifest(args.features);
  const LoadedFeatures data = load_features(args.features, entries, model.mode,
                                            model.n_question_tokens, model.q_buckets);
  const ProbeEvaluation eval = evaluate_probe(model, data.features, data.labels, args.threads);
  std::vector<int> top1_buckets(data.features.rows);
  for (std::int64_t r = 0; r < data.features.rows; ++r) {
    top1_buckets[r] = top1(predict(model, data.features.row(r)));
  }
  const double pct = percent_mae(top1_buckets, data.realized, model.q_buckets);

  if (!args.out_dir.empty()) {
    const fs::path out = ensure_out_dir(args.out_dir);
    RunManifest manifest = new_manifest("probe-eval");
    add_input(manifest, args.model);
    add_input(manifest, args.features);
    json report = {{"top1_accuracy", eval.top1_accuracy},
                   {"bucket_mae", eval.bucket_mae},
                   {"percent_mae", pct},
                   {"n_tokens", eval.n_tokens}};
    std::ofstream f(out / "probe_eval.json", std::ios::binary);
    f << report.dump(2) << '\n';
    if (!f) throw IoError("write failed: probe_eval.json");
    manifest.outputs = {"probe_eval.json"};
    finalize_manifest(manifest, out);
  }
  std::cout << "probe-eval: acc=" << fmt(eval.top1_accuracy)
            << " bucket_mae=" << fmt(eval.bucket_mae) << " percent_mae=" << fmt(pct)
            << " tokens=" << eval.n_tokens << "\n";
}

struct HeatmapArgs {
  std::string model;
  std::string features;
  int grid_points = kDefaultGridPoints;
  int length_bins = 4;
  std::string out_dir;
};

void run_heatmap(const HeatmapArgs& args) {
  if (args.length_bins < 1) throw std::invalid_argument("length bins must be >= 1");
  const fs::path out = ensure_out_dir(args.out_dir);
  RunManifest manifest = new_manifest("heatmap");
  add_input(manifest, args.model);
  add_input(manifest, args.features);
  manifest.config = {{"grid_points", std::to_string(args.grid_points)},
                     {"length_bins", std::to_string(args.length_bins)}};

  const ProbeModel model = load_probe_model(args.model);
  const auto entries = read_feature_manifest(args.features);

  struct TraceCurves {
    std::int64_t length = 0;
    std::string id;
    TraceDistributions dists;
  };
  std::vector<TraceCurves> traces;
  std::size_t skipped = 0;
  for (const FeatureManifestEntry& entry : entries) {
    const HiddenStateMatrix hs =
        read_hidden_states(resolve_manifest_path(args.features, entry.path));
    if (hs.m < 2) {
      std::cerr << "warning: skipping trace '" << entry.trace_id
                << "' with fewer than 2 token rows\n";
      ++skipped;
      continue;
    }
    const FeatureMatrix features =
        build_features(hs, model.mode, model.n_question_tokens);
    TraceCurves curves;
    curves.length = hs.m;
    curves.id = entry.trace_id;
    curves.dists.rows.reserve(hs.m);
    for (std::int64_t r = 0; r < features.rows; ++r) {
      curves.dists.rows.push_back(predict(model, features.row(r)));
    }
    traces.push_back(std::move(curves));
  }
  if (traces.empty()) throw DataError("no traces with >= 2 rows");

  std::sort(traces.begin(), traces.end(), [](const TraceCurves& a, const TraceCurves& b) {
    return std::tie(a.length, a.id) < std::tie(b.length, b.id);
  });

  std::ofstream csv(out / "heatmap.csv", std::ios::binary);
  if (!csv) throw IoError("cannot write heatmap.csv");
  csv << "bin_index,len_lower,len_upper,n_traces,grid_pos,expected";
  for (int q = 1; q <= model.q_buckets; ++q) csv << ",p" << q;
  csv << '\n';

  const std::size_t n = traces.size();
  std::size_t populated = 0;
  for (int b = 0; b < args.length_bins; ++b) {
    const std::size_t begin = b * n / args.length_bins;
    const std::size_t end = (b + 1) * n / args.length_bins;
    if (begin >= end) {
      std::cerr << "warning: empty length bin " << b << " skipped\n";
      continue;
    }
    std::vector<TraceDistributions> group;
    group.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) group.push_back(traces[i].dists);
    const HeatmapResult result = aggregate_heatmap(group, args.grid_points);
    ++populated;

    for (int g = 0; g < result.grid_points; ++g) {
      const double pos = static_cast<double>(g) / (result.grid_points - 1);
      csv << b << ',' << traces[begin].length << ',' << traces[end - 1].length << ','
          << (end - begin) << ',' << fmt(pos) << ',' << fmt(result.expected_curve[g]);
      for (int q = 0; q < result.q_buckets; ++q) {
        csv << ',' << fmt(result.grid[static_cast<std::size_t>(g) * result.q_buckets + q]);
      }
      csv << '\n';
    }
  }
  if (!csv) throw IoError("write failed: heatmap.csv");

  manifest.outputs = {"heatmap.csv"};
  finalize_manifest(manifest, out);
  std::cout << "heatmap: " << populated << " length bins over " << traces.size() << " traces"
            << (skipped ? " (" + std::to_string(skipped) + " skipped)" : "") << "\n";
}

// ---------------------------------------------------------------------------
// baseline

struct BaselineArgs {
  std::string traces;
  std::string pred;
  std::string out_dir;
};

void run_baseline(const BaselineArgs& args) {
  const fs::path out = ensure_out_dir(args.out_dir);
  RunManifest manifest = new_manifest("baseline");
  add_input(manifest, args.traces);
  add_input(manifest, args.pred);

  const std::vector<ReasoningTrace> traces = read_trace_file(args.traces);
  const LengthStats stats = compute_length_stats(traces);
  write_length_stats(out / "stats.json", stats);

  std::map<std::string, GroupKey> groups;
  for (const ReasoningTrace& trace : traces) {
    groups[trace.id] = {trace.model_family, trace.task};
  }

  const std::vector<MarkerSeries> series = read_marker_series(args.pred);

  std::ofstream csv(out / "baseline_report.csv", std::ios::binary);
  if (!csv) throw IoError("cannot write baseline_report.csv");
  csv << "trace_id,marker_index,prefix_len,baseline_name,prediction,realized,abs_error\n";

  std::map<std::string, double> error_sums;
  std::map<std::string, std::int64_t> error_counts;
  auto emit = [&](const std::string& trace_id, int index, std::int64_t k, const char* name,
                  double prediction, double realized) {
    csv << trace_id << ',' << index << ',' << k << ',' << name << ',' << fmt(prediction) << ','
        << fmt(realized) << ',' << fmt(std::abs(prediction - realized)) << '\n';
    error_sums[name] += std::abs(prediction - realized);
    ++error_counts[name];
  };

  std::size_t skipped_prev = 0;
  for (const MarkerSeries& trace : series) {
    const auto group_it = groups.find(trace.trace_id);
    if (group_it == groups.end()) {
      throw DataError("marker series id '" + trace.trace_id + "' not in trace corpus");
    }
    const GroupKey& group = group_it->second;
    if (!stats.has_group(group)) {
      std::cerr << "warning: unknown group (" << group.model_family << ", " << group.task
                << "); falling back to global mean\n";
    }
    const double median = stats.has_group(group) ? stats.group_median.at(group)
                                                 : stats.global_mean;

    for (std::size_t j = 0; j < trace.markers.size(); ++j) {
      const Marker& marker = trace.markers[j];
      const int index = static_cast<int>(j) + 1;
      emit(trace.trace_id, index, marker.prefix_len, "global_mean",
           global_mean_baseline(marker.prefix_len, stats), marker.realized);
      emit(trace.trace_id, index, marker.prefix_len, "group_mean",
           group_stat_baseline(marker.prefix_len, group, stats, GroupStatistic::kMean),
           marker.realized);
      emit(trace.trace_id, index, marker.prefix_len, "group_median",
           group_stat_baseline(marker.prefix_len, group, stats, GroupStatistic::kMedian),
           marker.realized);
      try {
        std::optional<PreviousMarker> previous;
        if (j > 0) {
          previous = PreviousMarker{trace.markers[j - 1].prefix_len,
                                    clip01(trace.markers[j - 1].predicted)};
        }
        emit(trace.trace_id, index, marker.prefix_len, "previous_marker",
             previous_marker_baseline(index, marker.prefix_len, previous, median),
             marker.realized);
      } catch (const DataError& e) {
        std::cerr << "warning: previous-marker baseline skipped for " << trace.trace_id << "#"
                  << index << ": " << e.what() << "\n";
        ++skipped_prev;
      }
    }
  }
  if (!csv) throw IoError("write failed: baseline_report.csv");

  std::string summary = "baseline:";
  for (const auto& [name, sum] : error_sums) {
    summary += " " + name + "_mae=" + fmt(sum / static_cast<double>(error_counts[name]));
  }
  if (skipped_prev) summary += " skipped_prev=" + std::to_string(skipped_prev);

  manifest.outputs = {"stats.json", "baseline_report.csv"};
  finalize_manifest(manifest, out);
  std::cout << summary << "\n";
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string pred;
  std::string ref;
  std::string cond;
  std::string uncond;
  int length_bins = 0;
  std::string out_dir;
};

void run_score(const ScoreArgs& args) {
  json report;
  std::string summary = "score:";
  std::vector<std::string> outputs;
  RunManifest manifest = new_manifest("score");

  std::optional<fs::path> out;
  if (!args.out_dir.empty()) out = ensure_out_dir(args.out_dir);

  if (!args.cond.empty() || !args.uncond.empty()) {
    if (args.cond.empty() || args.uncond.empty()) {
      throw std::invalid_argument("--cond and --uncond must be given together");
    }
    add_input(manifest, args.cond);
    add_input(manifest, args.uncond);
    const auto cond = read_marker_series(args.cond);
    const auto uncond = read_marker_series(args.uncond);
    const PairedMae paired = conditioned_vs_unconditioned(cond, uncond);
    report["cond_mae"] = paired.cond_mae;
    report["uncond_mae"] = paired.uncond_mae;
    summary += " cond_mae=" + fmt(paired.cond_mae) + " uncond_mae=" + fmt(paired.uncond_mae);
  } else {
    if (args.pred.empty()) throw std::invalid_argument("--pred is required");
    add_input(manifest, args.pred);
    std::vector<MarkerSeries> series = read_marker_series(args.pred);

    if (!args.ref.empty()) {
      // Reference values become the targets, joined by (trace_id, index).
      add_input(manifest, args.ref);
      const std::vector<MarkerSeries> ref = read_marker_series(args.ref);
      std::map<std::string, const MarkerSeries*> by_id;
      for (const MarkerSeries& trace : ref) by_id[trace.trace_id] = &trace;
      for (MarkerSeries& trace : series) {
        const auto it = by_id.find(trace.trace_id);
        if (it == by_id.end() || it->second->markers.size() != trace.markers.size()) {
          throw DataError("reference does not cover trace '" + trace.trace_id + "'");
        }
        for (std::size_t j = 0; j < trace.markers.size(); ++j) {
          trace.markers[j].realized = it->second->markers[j].predicted;
        }
      }
    }

    const double mae = progress_mae(series);
    report["mae"] = mae;
    report["n_markers"] = [&] {
      std::int64_t count = 0;
      for (const auto& trace : series) count += static_cast<std::int64_t>(trace.markers.size());
      return count;
    }();
    summary += " mae=" + fmt(mae);

    if (args.length_bins > 0) {
      if (!out) throw std::invalid_argument("--length-bins needs --out-dir");
      std::vector<std::pair<std::int64_t, double>> per_trace;
      for (const MarkerSeries& trace : series) {
        if (trace.completed_len < 1) {
          throw DataError("length binning needs per-trace 'm' in the series file");
        }
        double sum = 0.0;
        for (const Marker& marker : trace.markers) {
          sum += std::abs(marker.predicted - marker.realized);
        }
        per_trace.emplace_back(trace.completed_len,
                               sum / static_cast<double>(trace.markers.size()));
      }
      const auto bins = bin_by_length(per_trace, args.length_bins);
      write_bin_csv(*out / "mae_by_length.csv", bins);
      outputs.push_back("mae_by_length.csv");
    }
  }

  if (out) {
    std::ofstream f(*out / "score.json", std::ios::binary);
    f << report.dump(2) << '\n';
    if (!f) throw IoError("write failed: score.json");
    outputs.push_back("score.json");
    manifest.outputs = outputs;
    finalize_manifest(manifest, *out);
  }
  std::cout << summary << "\n";
}

// ---------------------------------------------------------------------------
// dispersion

struct DispersionArgs {
  std::string groups;
  int bins = 50;
  std::string bin_by = "gbar";
  std::string out_dir;
};

void run_dispersion(const DispersionArgs& args) {
  const std::vector<RolloutGroup> groups = read_rollout_groups(args.groups);
  const double mad_value = mad(groups);
  const double mapd_value = mapd(groups);

  if (!args.out_dir.empty()) {
    const fs::path out = ensure_out_dir(args.out_dir);
    RunManifest manifest = new_manifest("dispersion");
    add_input(manifest, args.groups);
    manifest.config = {{"bins", std::to_string(args.bins)}, {"bin_by", args.bin_by}};
    const DispersionBinKey key = args.bin_by == "length" ? DispersionBinKey::kPrefixLength
                                                         : DispersionBinKey::kMeanRealized;
    const auto bins = dispersion_curve(groups, args.bins, key);
    write_dispersion_csv(out / "dispersion_bins.csv", bins);
    manifest.outputs = {"dispersion_bins.csv"};
    finalize_manifest(manifest, out);
  }
  std::cout << "dispersion: mad=" << fmt(mad_value) << " mapd=" << fmt(mapd_value)
            << " groups=" << groups.size() << "\n";
}

// ---------------------------------------------------------------------------
// monotonicity

struct MonotonicityArgs {
  std::string pred;
  int bins = 20;
  std::string out_dir;
};

void run_monotonicity(const MonotonicityArgs& args) {
  std::vector<MarkerSeries> series = read_marker_series(args.pred);
  std::erase_if(series, [](const MarkerSeries& trace) { return trace.markers.size() < 2; });
  if (series.empty()) throw DataError("no series with >= 2 markers");

  const auto bins = nonmonotonic_fraction(series, args.bins);
  std::int64_t eligible = 0;
  double weighted = 0.0;
  for (const BinStat& bin : bins) {
    eligible += bin.count;
    weighted += bin.value * static_cast<double>(bin.count);
  }

  if (!args.out_dir.empty()) {
    const fs::path out = ensure_out_dir(args.out_dir);
    RunManifest manifest = new_manifest("monotonicity");
    add_input(manifest, args.pred);
    manifest.config = {{"bins", std::to_string(args.bins)}};
    write_bin_csv(out / "monotonicity_bins.csv", bins);
    manifest.outputs = {"monotonicity_bins.csv"};
    finalize_manifest(manifest, out);
  }
  std::cout << "monotonicity: nonmonotonic_fraction=" << fmt(weighted / eligible)
            << " eligible=" << eligible << "\n";
}

// ---------------------------------------------------------------------------
// stream-parse

void print_event(const StreamEvent& event) {
  json obj;
  switch (event.kind) {
    case StreamEventKind::kText:
      obj = {{"kind", "text"}, {"text", event.text}, {"offset", event.offset}};
      break;
    case StreamEventKind::kProgress:
      obj = {{"kind", "progress"},
             {"value", event.value},
             {"raw", event.text},
             {"offset", event.offset}};
      break;
    case StreamEventKind::kWarning:
      obj = {{"kind", "warning"}, {"message", event.message}, {"offset", event.offset}};
      break;
    case StreamEventKind::kEnd:
      obj = {{"kind", "end"}, {"offset", event.offset}};
      break;
  }
  std::cout << obj.dump() << '\n';
}

void run_stream_parse() {
  MarkerStreamParser parser;
  char buf[1 << 16];
  while (std::cin) {
    std::cin.read(buf, sizeof(buf));
    const std::streamsize got = std::cin.gcount();
    if (got <= 0) break;
    for (const StreamEvent& event :
         parser.feed(std::string_view(buf, static_cast<std::size_t>(got)))) {
      print_event(event);
    }
  }
  for (const StreamEvent& event : parser.finish()) print_event(event);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"progress measurement and prediction toolkit for reasoning traces"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; command-line flags win");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate a deterministic synthetic corpus");
  synth_cmd->add_option("--seed", synth_args.cfg.seed, "generator seed")->required();
  synth_cmd->add_option("--n-traces", synth_args.cfg.n_traces, "number of traces");
  synth_cmd->add_option("--min-len", synth_args.cfg.min_len, "minimum token count (>= 10)");
  synth_cmd->add_option("--max-len", synth_args.cfg.max_len, "maximum token count");
  synth_cmd->add_option("--shape", synth_args.shape, "length distribution")
      ->check(CLI::IsMember({"uniform", "lognormal"}));
  synth_cmd->add_option("--dim", synth_args.cfg.d, "hidden-state dimension");
  synth_cmd->add_option("--signal-scale", synth_args.cfg.signal_scale, "planted signal scale");
  synth_cmd->add_option("--noise-sigma", synth_args.cfg.noise_sigma, "per-coordinate noise std");
  synth_cmd->add_option("--question-rows", synth_args.cfg.n_question_rows,
                        "question rows per trace");
  synth_cmd->add_flag("--features", synth_args.features, "also write hidden-state files");
  synth_cmd->add_option("--rollout-groups", synth_args.rollout_groups,
                        "also write this many rollout groups");
  synth_cmd->add_option("--rollouts-per-group", synth_args.rollouts_per_group,
                        "continuations per rollout group");
  synth_cmd->add_option("--out-dir", synth_args.out_dir, "output directory")->required();

  AnnotateArgs annotate_args;
  auto* annotate_cmd =
      app.add_subcommand("annotate", "segment traces and insert progress markers");
  annotate_cmd->add_option("--in", annotate_args.input, "trace JSONL")->required();
  annotate_cmd->add_option("--gamma", annotate_args.gamma,
                           "marker-token loss weight; emits loss_weights when >= 1");
  annotate_cmd->add_option("--out-dir", annotate_args.out_dir, "output directory")->required();

  MaskArgs mask_args;
  auto* mask_cmd = app.add_subcommand("mask", "randomly remove marker spans");
  mask_cmd->add_option("--in", mask_args.input, "annotated JSONL")->required();
  mask_cmd->add_option("--seed", mask_args.seed, "masking seed")->required();
  mask_cmd->add_option("--rho", mask_args.rho, "removal probability (overrides the schedule)");
  mask_cmd->add_option("--step", mask_args.step, "schedule step");
  mask_cmd->add_option("--total-steps", mask_args.total_steps, "schedule length T");
  mask_cmd->add_option("--rho-max", mask_args.rho_max, "schedule endpoint");
  mask_cmd->add_flag("--mask-all", mask_args.mask_all,
                     "make the final span eligible too (default keeps it)");
  mask_cmd->add_option("--gamma", mask_args.gamma, "recompute loss_weights with this gamma");
  mask_cmd->add_option("--out-dir", mask_args.out_dir, "output directory")->required();

  LabelArgs label_args;
  auto* label_cmd = app.add_subcommand("label", "dump per-position bucket labels as CSV");
  label_cmd->add_option("--in", label_args.input, "trace JSONL")->required();
  label_cmd->add_option("--buckets", label_args.buckets, "bucket count Q");
  label_cmd->add_option("--stride", label_args.stride, "emit every stride-th position");
  label_cmd->add_option("--out-dir", label_args.out_dir, "output directory")->required();

  SplitArgs split_args;
  auto* split_cmd = app.add_subcommand("split", "length-based in-domain/held-out split");
  split_cmd->add_option("--in", split_args.input, "trace JSONL")->required();
  split_cmd->add_option("--threshold", split_args.threshold, "token threshold");
  split_cmd->add_option("--out-dir", split_args.out_dir, "output directory")->required();

  ProbeTrainArgs train_args;
  auto* train_cmd = app.add_subcommand("probe-train", "train a linear progress probe");
  train_cmd->add_option("--features", train_args.features, "feature manifest JSONL")->required();
  train_cmd->add_option("--mode", train_args.mode, "probe features")
      ->check(CLI::IsMember({"token", "q+token"}));
  train_cmd->add_option("--question-tokens", train_args.question_tokens,
                        "question rows appended in q+token mode");
  train_cmd->add_option("--buckets", train_args.buckets, "bucket count Q");
  train_cmd->add_option("--step-size", train_args.train.step_size, "gradient step size");
  train_cmd->add_option("--epochs", train_args.train.epochs, "training epochs");
  train_cmd->add_option("--batch-size", train_args.train.batch_size, "mini-batch size");
  train_cmd->add_option("--seed", train_args.train.seed, "shuffling seed")->required();
  train_cmd->add_option("--holdout-fraction", train_args.holdout_fraction,
                        "fraction of traces held out for evaluation");
  train_cmd->add_option("--layer-tag", train_args.layer_tag, "layer depth label (metadata)");
  train_cmd->add_option("--threads", train_args.threads, "evaluation threads");
  train_cmd->add_option("--out-dir", train_args.out_dir, "output directory")->required();

  ProbeEvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("probe-eval", "evaluate a trained probe");
  eval_cmd->add_option("--model", eval_args.model, "probe model file")->required();
  eval_cmd->add_option("--features", eval_args.features, "feature manifest JSONL")->required();
  eval_cmd->add_option("--threads", eval_args.threads, "evaluation threads");
  eval_cmd->add_option("--out-dir", eval_args.out_dir, "optional output directory");

  HeatmapArgs heatmap_args;
  auto* heatmap_cmd =
      app.add_subcommand("heatmap", "aggregate probe distributions onto a shared grid");
  heatmap_cmd->add_option("--model", heatmap_args.model, "probe model file")->required();
  heatmap_cmd->add_option("--features", heatmap_args.features, "feature manifest JSONL")
      ->required();
  heatmap_cmd->add_option("--grid-points", heatmap_args.grid_points, "grid resolution");
  heatmap_cmd->add_option("--length-bins", heatmap_args.length_bins, "trace-length bins");
  heatmap_cmd->add_option("--out-dir", heatmap_args.out_dir, "output directory")->required();

  BaselineArgs baseline_args;
  auto* baseline_cmd =
      app.add_subcommand("baseline", "token-position baselines against a marker series");
  baseline_cmd->add_option("--traces", baseline_args.traces, "trace corpus for length stats")
      ->required();
  baseline_cmd->add_option("--pred", baseline_args.pred, "marker-series JSONL")->required();
  baseline_cmd->add_option("--out-dir", baseline_args.out_dir, "output directory")->required();

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "progress MAE over marker series");
  score_cmd->add_option("--pred", score_args.pred, "marker-series JSONL");
  score_cmd->add_option("--ref", score_args.ref,
                        "reference series; its values become the targets");
  score_cmd->add_option("--cond", score_args.cond, "conditioned series (paired mode)");
  score_cmd->add_option("--uncond", score_args.uncond, "unconditioned series (paired mode)");
  score_cmd->add_option("--length-bins", score_args.length_bins,
                        "write mae_by_length.csv with this many quantile bins");
  score_cmd->add_option("--out-dir", score_args.out_dir, "optional output directory");

  DispersionArgs dispersion_args;
  auto* dispersion_cmd = app.add_subcommand("dispersion", "rollout dispersion MAD/MAPD");
  dispersion_cmd->add_option("--groups", dispersion_args.groups, "rollout-group JSONL")
      ->required();
  dispersion_cmd->add_option("--bins", dispersion_args.bins, "dispersion curve bins");
  dispersion_cmd->add_option("--bin-by", dispersion_args.bin_by, "binning key")
      ->check(CLI::IsMember({"gbar", "length"}));
  dispersion_cmd->add_option("--out-dir", dispersion_args.out_dir, "optional output directory");

  MonotonicityArgs monotonicity_args;
  auto* monotonicity_cmd =
      app.add_subcommand("monotonicity", "fraction of non-monotonic predictions by position");
  monotonicity_cmd->add_option("--pred", monotonicity_args.pred, "marker-series JSONL")
      ->required();
  monotonicity_cmd->add_option("--bins", monotonicity_args.bins, "position bins");
  monotonicity_cmd->add_option("--out-dir", monotonicity_args.out_dir,
                               "optional output directory");

  auto* stream_cmd =
      app.add_subcommand("stream-parse", "parse marker events from stdin to JSONL on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 64;  // help/version exit clean; usage errors are 64
  }

  try {
    if (synth_cmd->parsed()) run_synth(synth_args);
    if (annotate_cmd->parsed()) run_annotate(annotate_args);
    if (mask_cmd->parsed()) run_mask(mask_args);
    if (label_cmd->parsed()) run_label(label_args);
    if (split_cmd->parsed()) run_split(split_args);
    if (train_cmd->parsed()) run_probe_train(train_args);
    if (eval_cmd->parsed()) run_probe_eval(eval_args);
    if (heatmap_cmd->parsed()) run_heatmap(heatmap_args);
    if (baseline_cmd->parsed()) run_baseline(baseline_args);
    if (score_cmd->parsed()) run_score(score_args);
    if (dispersion_cmd->parsed()) run_dispersion(dispersion_args);
    if (monotonicity_cmd->parsed()) run_monotonicity(monotonicity_args);
    if (stream_cmd->parsed()) run_stream_parse();
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
