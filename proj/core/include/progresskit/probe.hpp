#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "progresskit/label.hpp"

namespace progresskit {

// Per-token hidden states for one trace, question-context rows first.
struct HiddenStateMatrix {
  int d = 0;
  int n_question_rows = 0;
  int m = 0;
  std::vector<float> question_rows;  // n_question_rows x d, row-major
  std::vector<float> token_rows;     // m x d, row-major
};

enum class ProbeMode { kTokenOnly, kQuestionToken };

std::string to_string(ProbeMode mode);
ProbeMode probe_mode_from_string(std::string_view name);

inline constexpr int kDefaultQuestionTokens = 2;

// Dense row-major feature matrix.
struct FeatureMatrix {
  std::int64_t rows = 0;
  int dim = 0;
  std::vector<double> values;

  std::span<const double> row(std::int64_t i) const {
    return {values.data() + i * dim, static_cast<std::size_t>(dim)};
  }
};

// Token-only features are the token rows themselves. Question+token features
// append the concatenation of the last n question rows to every token row, so
// the appended block is identical across rows of one trace. Requires
// n_question_rows >= n in question+token mode.
FeatureMatrix build_features(const HiddenStateMatrix& hs, ProbeMode mode,
                             int n_question_tokens = kDefaultQuestionTokens);

struct TrainConfig {
  double step_size = 0.1;
  int epochs = 5;
  int batch_size = 256;
  std::uint64_t seed = 0;
};

// Affine bucket classifier plus the feature standardization it was trained
// with; predictions re-apply the stored standardization. layer_tag is
// metadata describing where the hidden states came from.
struct ProbeModel {
  int q_buckets = kDefaultBucketCount;
  int feature_dim = 0;
  ProbeMode mode = ProbeMode::kTokenOnly;
  int n_question_tokens = kDefaultQuestionTokens;
  std::string layer_tag = "unspecified";
  std::vector<double> weights;       // q_buckets x feature_dim, row-major
  std::vector<double> bias;          // q_buckets
  std::vector<double> feature_mean;  // feature_dim
  std::vector<double> feature_std;   // feature_dim
  double final_train_loss = 0.0;
};

struct BucketDistribution {
  std::vector<double> probabilities;  // nonnegative, sums to 1
};

// Token-averaged softmax cross-entropy over Q buckets and its gradient at
// (weights, bias). Labels are 1-based bucket indices.
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad_weights;
  std::vector<double> grad_bias;
};

LossGrad softmax_xent_loss_grad(std::span<const double> weights, std::span<const double> bias,
                                const FeatureMatrix& features, std::span<const int> labels,
                                int q_buckets);

// Mini-batch gradient descent with constant step size on standardized
// features; token-level uniform batch sampling. Deterministic given the seed.
ProbeModel train_probe(const FeatureMatrix& features, std::span<const int> labels, int q_buckets,
                       const TrainConfig& config, ProbeMode mode = ProbeMode::kTokenOnly,
                       int n_question_tokens = kDefaultQuestionTokens,
                       std::string layer_tag = "unspecified");

BucketDistribution predict(const ProbeModel& model, std::span<const double> features);

// Argmax bucket (1-based); ties break toward the lowest index.
int top1(const BucketDistribution& dist);

// Probability-weighted mean of bucket midpoints.
double expected_progress(const BucketDistribution& dist);

struct ProbeEvaluation {
  double top1_accuracy = 0.0;
  double bucket_mae = 0.0;
  std::int64_t n_tokens = 0;
};

// Accuracy is the fraction of exact bucket matches; bucket_mae the mean
// |top1 - label| in bucket units. Evaluation is read-only and may run on
// several threads with a deterministic merge.
ProbeEvaluation evaluate_probe(const ProbeModel& model, const FeatureMatrix& features,
                               std::span<const int> labels, int threads = 1);

// Mean |100 c_top1 - 100 g| between top-1 bucket midpoints and realized
// progress values in [0, 1].
double percent_mae(std::span<const int> top1_buckets, std::span<const double> realized,
                   int q_buckets);

// Per-token probe distributions of one trace, front to back. Heatmap
// aggregation needs at least two rows per trace.
struct TraceDistributions {
  std::vector<BucketDistribution> rows;
};

struct HeatmapResult {
  int grid_points = 0;
  int q_buckets = 0;
  std::vector<double> grid;            // grid_points x q_buckets, row-major
  std::vector<double> expected_curve;  // grid_points
  std::int64_t n_traces = 0;
};

inline constexpr int kDefaultGridPoints = 101;

// Linearly interpolates each trace's per-token distributions onto a shared
// normalized position grid over [0, 1], arithmetic-means them across traces,
// and derives the expected-progress curve from the averaged columns.
HeatmapResult aggregate_heatmap(std::span<const TraceDistributions> traces,
                                int grid_points = kDefaultGridPoints);

}  // namespace progresskit
