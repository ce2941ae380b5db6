#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "progresskit/metrics.hpp"
#include "progresskit/probe.hpp"
#include "progresskit/trace.hpp"

namespace progresskit {

enum class LengthShape { kUniform, kLognormal };

// Configuration for deterministic synthetic corpora. The seed is mandatory;
// everything generated from one config is bit-reproducible.
struct SynthConfig {
  int n_traces = 100;
  std::int64_t min_len = 10;
  std::int64_t max_len = 100;
  LengthShape shape = LengthShape::kUniform;
  int d = 8;
  double signal_scale = 1.0;
  double noise_sigma = 0.1;
  int n_question_rows = 2;
  std::uint64_t seed = 0;
};

// Deterministic traces with pseudo-text of the sampled lengths, paragraph
// breaks every few tokens, assigned round-robin to two synthetic
// (model_family, task) groups.
std::vector<ReasoningTrace> gen_traces(const SynthConfig& cfg);

// The planted progress direction for a config: drawn from the seed and scaled
// to norm sqrt(d), so its per-coordinate magnitude stays near 1 regardless of
// dimension.
std::vector<double> planted_direction(const SynthConfig& cfg);

// Planted-signal hidden states: token row k of a length-m trace is
// signal_scale * (k/m) * u plus per-coordinate Gaussian noise of std
// noise_sigma; question rows are pure noise.
HiddenStateMatrix gen_features(std::int64_t length, int trace_index, const SynthConfig& cfg);
std::vector<HiddenStateMatrix> gen_features(std::span<const std::int64_t> lengths,
                                            const SynthConfig& cfg);

// Random rollout groups for dispersion tests: prefix lengths in
// [1, max_prefix_len], continuation lengths in [0, max_continuation_len].
std::vector<RolloutGroup> gen_rollout_groups(int n_groups, int rollouts_per_group,
                                             std::int64_t max_prefix_len,
                                             std::int64_t max_continuation_len,
                                             std::uint64_t seed);

}  // namespace progresskit
