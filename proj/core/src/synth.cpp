#include "progresskit/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "progresskit/errors.hpp"
#include "progresskit/rng.hpp"

namespace progresskit {

namespace {

// Seed-stream tags so traces, features, and rollouts draw independent
// deterministic streams from one config seed.
constexpr std::uint64_t kLengthStream = 0x6c656e6774680000ULL;
constexpr std::uint64_t kTextStream = 0x7465787400000000ULL;
constexpr std::uint64_t kDirectionStream = 0x6469726563740000ULL;
constexpr std::uint64_t kFeatureStream = 0x6665617475726500ULL;

constexpr const char* kVocab[] = {
    "lemma",   "bound",   "residue", "kernel",  "tensor",  "graph",   "prime",   "module",
    "vector",  "matrix",  "degree",  "induct",  "expand",  "factor",  "reduce",  "subcase",
    "symbol",  "integer", "orbit",   "lattice", "measure", "metric",  "series",  "limit",
    "cursor",  "branch",  "verify",  "restate", "combine", "partial", "derive",  "approx",
    "balance", "iterate", "refine",  "collect", "observe", "compare", "assume",  "conclude",
    "substep", "recheck", "simplify", "rewrite", "anchor",  "closure", "mapping", "pivot",
};
constexpr int kVocabSize = static_cast<int>(sizeof(kVocab) / sizeof(kVocab[0]));

void validate_config(const SynthConfig& cfg) {
  if (cfg.n_traces < 1) throw std::invalid_argument("n_traces must be >= 1");
  if (cfg.min_len < 10) throw std::invalid_argument("min_len must be >= 10");
  if (cfg.max_len < cfg.min_len) throw std::invalid_argument("max_len must be >= min_len");
  if (cfg.d < 2) throw std::invalid_argument("feature dimension must be >= 2");
  if (cfg.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  if (cfg.n_question_rows < 0) throw std::invalid_argument("n_question_rows must be >= 0");
}

std::int64_t sample_length(std::mt19937_64& rng, const SynthConfig& cfg) {
  if (cfg.shape == LengthShape::kUniform) {
    std::uniform_int_distribution<std::int64_t> dist(cfg.min_len, cfg.max_len);
    return dist(rng);
  }
  // Lognormal spanning [min, max]: mu at the geometric midpoint, sigma a
  // sixth of the log range, samples clamped to the bounds.
  const double log_min = std::log(static_cast<double>(cfg.min_len));
  const double log_max = std::log(static_cast<double>(cfg.max_len));
  const double mu = (log_min + log_max) / 2.0;
  const double sigma = cfg.max_len > cfg.min_len ? (log_max - log_min) / 6.0 : 0.0;
  std::normal_distribution<double> normal(mu, sigma);
  const double raw = std::exp(normal(rng));
  auto length = static_cast<std::int64_t>(std::llround(raw));
  if (length < cfg.min_len) length = cfg.min_len;
  if (length > cfg.max_len) length = cfg.max_len;
  return length;
}

}  // namespace

std::vector<ReasoningTrace> gen_traces(const SynthConfig& cfg) {
  validate_config(cfg);

  std::mt19937_64 length_rng(mix_seed(cfg.seed, kLengthStream));
  std::vector<ReasoningTrace> traces;
  traces.reserve(cfg.n_traces);

  for (int i = 0; i < cfg.n_traces; ++i) {
    const std::int64_t length = sample_length(length_rng, cfg);
    std::mt19937_64 text_rng(mix_seed(cfg.seed, kTextStream + static_cast<std::uint64_t>(i)));
    std::uniform_int_distribution<int> word(0, kVocabSize - 1);
    std::uniform_int_distribution<int> paragraph(6, 14);

    ReasoningTrace trace;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06d", i);
    trace.id = id;
    trace.question = std::string("evaluate ") + kVocab[word(text_rng)] + " against " +
                     kVocab[word(text_rng)];
    trace.answer = std::to_string(word(text_rng));
    if (i % 2 == 0) {
      trace.model_family = "synth-a";
      trace.task = "task-a";
    } else {
      trace.model_family = "synth-b";
      trace.task = "task-b";
    }

    // Exactly `length` whitespace tokens with a paragraph break every few.
    std::string text;
    text.reserve(static_cast<std::size_t>(length) * 8);
    int until_break = paragraph(text_rng);
    for (std::int64_t t = 0; t < length; ++t) {
      if (t > 0) {
        if (until_break == 0) {
          text.append("\n\n");
          until_break = paragraph(text_rng);
        } else {
          text.push_back(' ');
        }
      }
      text.append(kVocab[word(text_rng)]);
      --until_break;
    }
    trace.reasoning = std::move(text);
    trace.token_count = length;
    traces.push_back(std::move(trace));
  }
  return traces;
}

std::vector<double> planted_direction(const SynthConfig& cfg) {
  validate_config(cfg);
  std::mt19937_64 rng(mix_seed(cfg.seed, kDirectionStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> direction(cfg.d);
  double norm_sq = 0.0;
  for (double& v : direction) {
    v = normal(rng);
    norm_sq += v * v;
  }
  // Norm sqrt(d): per-coordinate magnitude stays near 1 at any dimension.
  const double scale = std::sqrt(static_cast<double>(cfg.d) / norm_sq);
  for (double& v : direction) v *= scale;
  return direction;
}

HiddenStateMatrix gen_features(std::int64_t length, int trace_index, const SynthConfig& cfg) {
  validate_config(cfg);
  if (length < 1) throw std::invalid_argument("trace length must be >= 1");

  const std::vector<double> direction = planted_direction(cfg);
  std::mt19937_64 rng(
      mix_seed(cfg.seed, kFeatureStream + static_cast<std::uint64_t>(trace_index)));
  std::normal_distribution<double> normal(0.0, 1.0);

  HiddenStateMatrix hs;
  hs.d = cfg.d;
  hs.n_question_rows = cfg.n_question_rows;
  hs.m = static_cast<int>(length);
  hs.question_rows.resize(static_cast<std::size_t>(cfg.n_question_rows) * cfg.d);
  hs.token_rows.resize(static_cast<std::size_t>(length) * cfg.d);

  for (float& v : hs.question_rows) {
    v = static_cast<float>(cfg.noise_sigma * normal(rng));
  }
  for (std::int64_t k = 1; k <= length; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(length);
    float* row = hs.token_rows.data() + static_cast<std::size_t>(k - 1) * cfg.d;
    for (int j = 0; j < cfg.d; ++j) {
      row[j] = static_cast<float>(cfg.signal_scale * t * direction[j] +
                                  cfg.noise_sigma * normal(rng));
    }
  }
  return hs;
}

std::vector<HiddenStateMatrix> gen_features(std::span<const std::int64_t> lengths,
                                            const SynthConfig& cfg) {
  std::vector<HiddenStateMatrix> matrices;
  matrices.reserve(lengths.size());
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    matrices.push_back(gen_features(lengths[i], static_cast<int>(i), cfg));
  }
  return matrices;
}

std::vector<RolloutGroup> gen_rollout_groups(int n_groups, int rollouts_per_group,
                                             std::int64_t max_prefix_len,
                                             std::int64_t max_continuation_len,
                                             std::uint64_t seed) {
  if (n_groups < 1 || rollouts_per_group < 2) {
    throw std::invalid_argument("need >= 1 groups and >= 2 rollouts per group");
  }
  if (max_prefix_len < 1 || max_continuation_len < 0) {
    throw std::invalid_argument("invalid rollout length bounds");
  }

  std::mt19937_64 rng(mix_seed(seed, 0x726f6c6c6f757400ULL));
  std::uniform_int_distribution<std::int64_t> prefix(1, max_prefix_len);
  std::uniform_int_distribution<std::int64_t> continuation(0, max_continuation_len);

  std::vector<RolloutGroup> groups;
  groups.reserve(n_groups);
  for (int i = 0; i < n_groups; ++i) {
    RolloutGroup group;
    group.trace_id = "group-" + std::to_string(i);
    group.prefix_len = prefix(rng);
    group.continuation_lens.resize(rollouts_per_group);
    for (std::int64_t& len : group.continuation_lens) len = continuation(rng);
    groups.push_back(std::move(group));
  }
  return groups;
}

}  // namespace progresskit
