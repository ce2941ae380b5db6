#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "progresskit/trace.hpp"

namespace progresskit {

// Ordered text spans whose concatenation reproduces the source reasoning.
// Every segment carries at least one token.
struct Segmentation {
  std::vector<std::string> segments;
};

using Segmenter = std::function<Segmentation(std::string_view)>;

// Rule-based segmenter: boundaries at runs of two or more newlines, each run
// attached to the segment it terminates. Whitespace-only pieces are merged
// into a neighbor so the token-count invariant holds. Throws DataError for
// text without any token.
Segmentation segment_paragraphs(std::string_view reasoning);

struct AnnotatedText {
  std::string text;
  std::vector<ProgressAnnotation> annotations;
};

// Appends `<progressbar>a</progressbar>` after each segment, where a is the
// cumulative token share floor(100 * sum_{j<=i} |s_j| / sum_j |s_j|). The
// final value is always exactly 100. Markers add no separator bytes, so
// removing them recovers the concatenated segments byte for byte.
AnnotatedText insert_annotations(const Segmentation& segmentation);

// Cosine ramp for the annotation-masking probability.
struct MaskingSchedule {
  int total_steps = 1;
  double rho_max = 0.5;
};

// rho(step) = (rho_max / 2) * (1 - cos(pi * step / (T - 1))) for T > 1;
// rho_max when T == 1. Requires 0 <= step < T.
double cosine_rho(int step, const MaskingSchedule& schedule);

// Deletes each well-formed marker span independently with probability rho,
// drawing from a generator seeded with seed; surviving spans stay
// byte-identical. With keep_last (corpus-preparation mode) the final span is
// never eligible, preserving it as the prediction target.
std::string mask_annotations(std::string_view annotated, double rho, std::uint64_t seed,
                             bool keep_last = false);

// Whitespace tokenization that additionally cuts marker spans into their own
// tokens: opening delimiter, value, closing delimiter.
struct AnnotatedToken {
  std::string text;
  bool in_marker = false;

  bool operator==(const AnnotatedToken&) const = default;
};

std::vector<AnnotatedToken> tokenize_annotated(std::string_view annotated);

// w_i = gamma for tokens inside a marker span (values and delimiters), 1
// elsewhere. Requires gamma >= 1.
std::vector<double> loss_weights(std::span<const AnnotatedToken> tokens, double gamma);

}  // namespace progresskit
