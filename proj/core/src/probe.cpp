#include "progresskit/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "progresskit/errors.hpp"

namespace progresskit {

namespace {

void validate_features(const FeatureMatrix& features) {
  if (features.rows < 1 || features.dim < 1) throw DataError("feature matrix is empty");
  if (features.values.size() !=
      static_cast<std::size_t>(features.rows) * static_cast<std::size_t>(features.dim)) {
    throw DataError("feature matrix size does not match rows x dim");
  }
  for (double v : features.values) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
}

void validate_labels(std::span<const int> labels, std::int64_t rows, int q_buckets) {
  if (static_cast<std::int64_t>(labels.size()) != rows) {
    throw DataError("label count does not match feature rows");
  }
  for (int label : labels) {
    if (label < 1 || label > q_buckets) throw DataError("label outside [1, Q]");
  }
}

// Stable softmax of Wx+b; returns the loss term logsumexp(z) - z[label-1].
double softmax_row(std::span<const double> weights, std::span<const double> bias,
                   std::span<const double> x, int q_buckets, int label,
                   std::vector<double>& probs) {
  const int dim = static_cast<int>(x.size());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int q = 0; q < q_buckets; ++q) {
    double z = bias[q];
    const double* w = weights.data() + static_cast<std::size_t>(q) * dim;
    for (int j = 0; j < dim; ++j) z += w[j] * x[j];
    probs[q] = z;
    if (z > max_logit) max_logit = z;
  }
  double denom = 0.0;
  for (int q = 0; q < q_buckets; ++q) {
    probs[q] = std::exp(probs[q] - max_logit);
    denom += probs[q];
  }
  double loss = 0.0;
  if (label >= 1) {
    loss = std::log(denom) - std::log(probs[label - 1]);
  }
  const double inv = 1.0 / denom;
  for (int q = 0; q < q_buckets; ++q) probs[q] *= inv;
  return loss;
}

// Mean loss over the given rows; accumulates mean gradients when requested.
double loss_grad_rows(std::span<const double> weights, std::span<const double> bias,
                      const FeatureMatrix& features, std::span<const int> labels, int q_buckets,
                      std::span<const std::int64_t> rows, std::vector<double>* grad_weights,
                      std::vector<double>* grad_bias) {
  const int dim = features.dim;
  if (grad_weights) std::fill(grad_weights->begin(), grad_weights->end(), 0.0);
  if (grad_bias) std::fill(grad_bias->begin(), grad_bias->end(), 0.0);

  std::vector<double> probs(q_buckets);
  double loss_sum = 0.0;
  for (std::int64_t r : rows) {
    const auto x = features.row(r);
    const int label = labels[r];
    loss_sum += softmax_row(weights, bias, x, q_buckets, label, probs);
    if (grad_weights) {
      probs[label - 1] -= 1.0;
      for (int q = 0; q < q_buckets; ++q) {
        (*grad_bias)[q] += probs[q];
        double* gw = grad_weights->data() + static_cast<std::size_t>(q) * dim;
        for (int j = 0; j < dim; ++j) gw[j] += probs[q] * x[j];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  if (grad_weights) {
    for (double& g : *grad_weights) g *= inv;
    for (double& g : *grad_bias) g *= inv;
  }
  return loss_sum * inv;
}

}  // namespace

std::string to_string(ProbeMode mode) {
  return mode == ProbeMode::kTokenOnly ? "token" : "q+token";
}

ProbeMode probe_mode_from_string(std::string_view name) {
  if (name == "token" || name == "token-only") return ProbeMode::kTokenOnly;
  if (name == "q+token" || name == "question+token") return ProbeMode::kQuestionToken;
  throw std::invalid_argument("unknown probe mode: " + std::string(name));
}

FeatureMatrix build_features(const HiddenStateMatrix& hs, ProbeMode mode, int n_question_tokens) {
  if (hs.d < 1 || hs.m < 1) throw DataError("hidden-state matrix is empty");
  if (hs.token_rows.size() != static_cast<std::size_t>(hs.m) * hs.d ||
      hs.question_rows.size() != static_cast<std::size_t>(hs.n_question_rows) * hs.d) {
    throw DataError("hidden-state row storage does not match header");
  }

  FeatureMatrix features;
  features.rows = hs.m;
  if (mode == ProbeMode::kTokenOnly) {
    features.dim = hs.d;
    features.values.assign(hs.token_rows.begin(), hs.token_rows.end());
    return features;
  }

  if (n_question_tokens < 1) throw std::invalid_argument("question token count must be >= 1");
  if (hs.n_question_rows < n_question_tokens) {
    throw DataError("trace has " + std::to_string(hs.n_question_rows) +
                    " question rows; question+token mode needs " +
                    std::to_string(n_question_tokens));
  }

  // Question context: the last n question rows, shared by every token row.
  const int d = hs.d;
  std::vector<double> context(static_cast<std::size_t>(n_question_tokens) * d);
  const std::size_t first = static_cast<std::size_t>(hs.n_question_rows - n_question_tokens) * d;
  for (std::size_t j = 0; j < context.size(); ++j) {
    context[j] = hs.question_rows[first + j];
  }

  features.dim = (n_question_tokens + 1) * d;
  features.values.resize(static_cast<std::size_t>(hs.m) * features.dim);
  for (int i = 0; i < hs.m; ++i) {
    double* row = features.values.data() + static_cast<std::size_t>(i) * features.dim;
    const float* token = hs.token_rows.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) row[j] = token[j];
    std::copy(context.begin(), context.end(), row + d);
  }
  return features;
}

LossGrad softmax_xent_loss_grad(std::span<const double> weights, std::span<const double> bias,
                                const FeatureMatrix& features, std::span<const int> labels,
                                int q_buckets) {
  if (q_buckets < 2) throw std::invalid_argument("bucket count must be >= 2");
  validate_features(features);
  validate_labels(labels, features.rows, q_buckets);
  if (weights.size() != static_cast<std::size_t>(q_buckets) * features.dim ||
      bias.size() != static_cast<std::size_t>(q_buckets)) {
    throw DataError("parameter shape does not match Q x D");
  }

  std::vector<std::int64_t> rows(features.rows);
  std::iota(rows.begin(), rows.end(), 0);
  LossGrad result;
  result.grad_weights.resize(weights.size());
  result.grad_bias.resize(bias.size());
  result.loss = loss_grad_rows(weights, bias, features, labels, q_buckets, rows,
                               &result.grad_weights, &result.grad_bias);
  return result;
}

ProbeModel train_probe(const FeatureMatrix& features, std::span<const int> labels, int q_buckets,
                       const TrainConfig& config, ProbeMode mode, int n_question_tokens,
                       std::string layer_tag) {
  if (q_buckets < 2) throw std::invalid_argument("bucket count must be >= 2");
  if (config.step_size <= 0.0) throw std::invalid_argument("step size must be positive");
  if (config.epochs < 1 || config.batch_size < 1) {
    throw std::invalid_argument("epochs and batch size must be >= 1");
  }
  validate_features(features);
  validate_labels(labels, features.rows, q_buckets);

  const std::int64_t rows = features.rows;
  const int dim = features.dim;

  ProbeModel model;
  model.q_buckets = q_buckets;
  model.feature_dim = dim;
  model.mode = mode;
  model.n_question_tokens = n_question_tokens;
  model.layer_tag = std::move(layer_tag);

  // Per-dimension standardization from the training split, stored in the
  // model so inference applies the identical transform.
  model.feature_mean.assign(dim, 0.0);
  model.feature_std.assign(dim, 0.0);
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto x = features.row(r);
    for (int j = 0; j < dim; ++j) model.feature_mean[j] += x[j];
  }
  for (int j = 0; j < dim; ++j) model.feature_mean[j] /= static_cast<double>(rows);
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto x = features.row(r);
    for (int j = 0; j < dim; ++j) {
      const double c = x[j] - model.feature_mean[j];
      model.feature_std[j] += c * c;
    }
  }
  for (int j = 0; j < dim; ++j) {
    model.feature_std[j] = std::sqrt(model.feature_std[j] / static_cast<double>(rows));
    if (model.feature_std[j] < 1e-12) model.feature_std[j] = 1.0;
  }

  FeatureMatrix standardized;
  standardized.rows = rows;
  standardized.dim = dim;
  standardized.values.resize(features.values.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto x = features.row(r);
    double* out = standardized.values.data() + static_cast<std::size_t>(r) * dim;
    for (int j = 0; j < dim; ++j) out[j] = (x[j] - model.feature_mean[j]) / model.feature_std[j];
  }

  model.weights.assign(static_cast<std::size_t>(q_buckets) * dim, 0.0);
  model.bias.assign(q_buckets, 0.0);

  std::mt19937_64 rng(config.seed);
  std::vector<std::int64_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad_weights(model.weights.size());
  std::vector<double> grad_bias(model.bias.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::int64_t start = 0; start < rows; start += config.batch_size) {
      const std::int64_t count = std::min<std::int64_t>(config.batch_size, rows - start);
      const std::span<const std::int64_t> batch(order.data() + start,
                                                static_cast<std::size_t>(count));
      loss_grad_rows(model.weights, model.bias, standardized, labels, q_buckets, batch,
                     &grad_weights, &grad_bias);
      for (std::size_t j = 0; j < model.weights.size(); ++j) {
        model.weights[j] -= config.step_size * grad_weights[j];
      }
      for (int q = 0; q < q_buckets; ++q) {
        model.bias[q] -= config.step_size * grad_bias[q];
      }
    }
  }

  model.final_train_loss = loss_grad_rows(model.weights, model.bias, standardized, labels,
                                          q_buckets, order, nullptr, nullptr);
  return model;
}

BucketDistribution predict(const ProbeModel& model, std::span<const double> features) {
  if (features.size() != static_cast<std::size_t>(model.feature_dim)) {
    throw DataError("feature row has dimension " + std::to_string(features.size()) +
                    ", model expects " + std::to_string(model.feature_dim));
  }
  std::vector<double> x(features.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] = (features[j] - model.feature_mean[j]) / model.feature_std[j];
  }
  BucketDistribution dist;
  dist.probabilities.resize(model.q_buckets);
  softmax_row(model.weights, model.bias, x, model.q_buckets, 0, dist.probabilities);
  return dist;
}

int top1(const BucketDistribution& dist) {
  if (dist.probabilities.empty()) throw DataError("empty distribution");
  int best = 0;
  for (int q = 1; q < static_cast<int>(dist.probabilities.size()); ++q) {
    if (dist.probabilities[q] > dist.probabilities[best]) best = q;
  }
  return best + 1;
}

double expected_progress(const BucketDistribution& dist) {
  const int q_buckets = static_cast<int>(dist.probabilities.size());
  if (q_buckets < 2) throw DataError("empty distribution");
  double expected = 0.0;
  for (int q = 1; q <= q_buckets; ++q) {
    expected += dist.probabilities[q - 1] * bucket_midpoint(q, q_buckets);
  }
  return expected;
}

ProbeEvaluation evaluate_probe(const ProbeModel& model, const FeatureMatrix& features,
                               std::span<const int> labels, int threads) {
  validate_features(features);
  validate_labels(labels, features.rows, model.q_buckets);
  if (features.dim != model.feature_dim) throw DataError("feature dimension mismatch");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");

  const std::int64_t rows = features.rows;
  std::vector<int> predicted(rows);
  auto worker = [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t r = begin; r < end; ++r) {
      predicted[r] = top1(predict(model, features.row(r)));
    }
  };
  if (threads == 1 || rows < 2 * threads) {
    worker(0, rows);
  } else {
    std::vector<std::thread> pool;
    const std::int64_t chunk = (rows + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::int64_t begin = t * chunk;
      const std::int64_t end = std::min(rows, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (std::thread& t : pool) t.join();
  }

  // Deterministic reduction in row order regardless of thread count.
  std::int64_t correct = 0;
  double abs_sum = 0.0;
  for (std::int64_t r = 0; r < rows; ++r) {
    if (predicted[r] == labels[r]) ++correct;
    abs_sum += std::abs(predicted[r] - labels[r]);
  }
  ProbeEvaluation eval;
  eval.n_tokens = rows;
  eval.top1_accuracy = static_cast<double>(correct) / static_cast<double>(rows);
  eval.bucket_mae = abs_sum / static_cast<double>(rows);
  return eval;
}

double percent_mae(std::span<const int> top1_buckets, std::span<const double> realized,
                   int q_buckets) {
  if (top1_buckets.size() != realized.size()) {
    throw DataError("top-1 buckets and realized values have different lengths");
  }
  if (top1_buckets.empty()) throw DataError("empty evaluation set");
  double sum = 0.0;
  for (std::size_t i = 0; i < top1_buckets.size(); ++i) {
    sum += std::abs(100.0 * bucket_midpoint(top1_buckets[i], q_buckets) - 100.0 * realized[i]);
  }
  return sum / static_cast<double>(top1_buckets.size());
}

HeatmapResult aggregate_heatmap(std::span<const TraceDistributions> traces, int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("grid needs at least 2 points");
  if (traces.empty()) throw DataError("empty trace group");

  const int q_buckets = static_cast<int>(traces.front().rows.empty()
                                             ? 0
                                             : traces.front().rows.front().probabilities.size());
  if (q_buckets < 2) throw DataError("distributions need at least 2 buckets");

  HeatmapResult result;
  result.grid_points = grid_points;
  result.q_buckets = q_buckets;
  result.n_traces = static_cast<std::int64_t>(traces.size());
  result.grid.assign(static_cast<std::size_t>(grid_points) * q_buckets, 0.0);

  for (const TraceDistributions& trace : traces) {
    const std::int64_t m = static_cast<std::int64_t>(trace.rows.size());
    if (m < 2) throw DataError("heatmap trace contributes fewer than 2 rows");
    for (const BucketDistribution& row : trace.rows) {
      if (static_cast<int>(row.probabilities.size()) != q_buckets) {
        throw DataError("inconsistent bucket count across distributions");
      }
    }
    for (int g = 0; g < grid_points; ++g) {
      const double x = static_cast<double>(g) / (grid_points - 1);
      const double pos = x * static_cast<double>(m - 1);
      std::int64_t j0 = static_cast<std::int64_t>(pos);
      if (j0 > m - 2) j0 = m - 2;
      const double frac = pos - static_cast<double>(j0);
      const auto& lo = trace.rows[j0].probabilities;
      const auto& hi = trace.rows[j0 + 1].probabilities;
      double* cell = result.grid.data() + static_cast<std::size_t>(g) * q_buckets;
      for (int q = 0; q < q_buckets; ++q) {
        cell[q] += (1.0 - frac) * lo[q] + frac * hi[q];
      }
    }
  }

  const double inv = 1.0 / static_cast<double>(traces.size());
  for (double& v : result.grid) v *= inv;

  result.expected_curve.resize(grid_points);
  for (int g = 0; g < grid_points; ++g) {
    const double* cell = result.grid.data() + static_cast<std::size_t>(g) * q_buckets;
    double expected = 0.0;
    for (int q = 1; q <= q_buckets; ++q) expected += cell[q - 1] * bucket_midpoint(q, q_buckets);
    result.expected_curve[g] = expected;
  }
  return result;
}

}  // namespace progresskit
