#include "progresskit/annotate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "progresskit/errors.hpp"
#include "progresskit/markers.hpp"
#include "progresskit/rng.hpp"
#include "progresskit/tokenize.hpp"

namespace progresskit {

Segmentation segment_paragraphs(std::string_view reasoning) {
  if (reasoning.empty()) throw DataError("cannot segment empty text");
  if (count_tokens(reasoning) == 0) throw DataError("cannot segment text without tokens");

  // Cut after each maximal run of >= 2 newlines.
  std::vector<std::string> pieces;
  std::size_t begin = 0;
  std::size_t i = 0;
  while (i < reasoning.size()) {
    if (reasoning[i] == '\n') {
      std::size_t run_end = i;
      while (run_end < reasoning.size() && reasoning[run_end] == '\n') ++run_end;
      if (run_end - i >= 2) {
        pieces.emplace_back(reasoning.substr(begin, run_end - begin));
        begin = run_end;
      }
      i = run_end;
    } else {
      ++i;
    }
  }
  if (begin < reasoning.size()) pieces.emplace_back(reasoning.substr(begin));

  // Merge token-free pieces into the previous segment (or the next one when
  // the text starts with a break) so every segment has >= 1 token.
  Segmentation seg;
  for (std::string& piece : pieces) {
    if (!seg.segments.empty() && count_tokens(piece) == 0) {
      seg.segments.back().append(piece);
    } else if (!seg.segments.empty() && count_tokens(seg.segments.back()) == 0) {
      seg.segments.back().append(piece);
    } else {
      seg.segments.push_back(std::move(piece));
    }
  }
  return seg;
}

AnnotatedText insert_annotations(const Segmentation& segmentation) {
  if (segmentation.segments.empty()) {
    throw DataError("segmentation has no segments");
  }
  std::int64_t total = 0;
  std::vector<std::int64_t> lengths;
  lengths.reserve(segmentation.segments.size());
  for (const std::string& segment : segmentation.segments) {
    const auto n = static_cast<std::int64_t>(count_tokens(segment));
    if (n < 1) throw DataError("segment without tokens");
    lengths.push_back(n);
    total += n;
  }

  AnnotatedText out;
  std::int64_t cumulative = 0;
  for (std::size_t i = 0; i < segmentation.segments.size(); ++i) {
    cumulative += lengths[i];
    const int value = static_cast<int>(100 * cumulative / total);
    out.text.append(segmentation.segments[i]);
    out.text.append(format_marker(value));
    out.annotations.push_back({cumulative, value});
  }
  return out;
}

double cosine_rho(int step, const MaskingSchedule& schedule) {
  if (schedule.total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
  if (schedule.rho_max < 0.0 || schedule.rho_max > 1.0) {
    throw std::invalid_argument("rho_max must be in [0, 1]");
  }
  if (step < 0 || step >= schedule.total_steps) {
    throw std::out_of_range("step outside [0, total_steps)");
  }
  if (schedule.total_steps == 1) return schedule.rho_max;
  const double phase = std::numbers::pi * step / (schedule.total_steps - 1);
  return schedule.rho_max / 2.0 * (1.0 - std::cos(phase));
}

std::string mask_annotations(std::string_view annotated, double rho, std::uint64_t seed,
                             bool keep_last) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("rho must be in [0, 1]");
  const std::vector<MarkerSpan> spans = find_marker_spans(annotated);

  std::mt19937_64 rng(seed);
  std::vector<bool> removed(spans.size(), false);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (keep_last && i + 1 == spans.size()) continue;
    removed[i] = uniform01(rng) < rho;
  }

  std::string out;
  out.reserve(annotated.size());
  std::size_t src = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    out.append(annotated.substr(src, spans[i].begin - src));
    if (!removed[i]) out.append(annotated.substr(spans[i].begin, spans[i].end - spans[i].begin));
    src = spans[i].end;
  }
  out.append(annotated.substr(src));
  return out;
}

std::vector<AnnotatedToken> tokenize_annotated(std::string_view annotated) {
  const std::vector<MarkerSpan> spans = find_marker_spans(annotated);

  std::vector<AnnotatedToken> tokens;
  auto emit_plain = [&](std::string_view piece) {
    for (const auto& [begin, end] : token_spans(piece)) {
      tokens.push_back({std::string(piece.substr(begin, end - begin)), false});
    }
  };

  std::size_t src = 0;
  for (const MarkerSpan& span : spans) {
    emit_plain(annotated.substr(src, span.begin - src));
    // A marker span contributes exactly three tokens: the delimiters and the
    // value as written (whitespace inside the span is a separator).
    const std::size_t body_begin = span.begin + kMarkerOpen.size();
    const std::size_t body_end = span.end - kMarkerClose.size();
    std::string_view body = annotated.substr(body_begin, body_end - body_begin);
    const auto value_spans = token_spans(body);
    tokens.push_back({std::string(kMarkerOpen), true});
    tokens.push_back({std::string(body.substr(value_spans[0].first,
                                              value_spans[0].second - value_spans[0].first)),
                      true});
    tokens.push_back({std::string(kMarkerClose), true});
    src = span.end;
  }
  emit_plain(annotated.substr(src));
  return tokens;
}

std::vector<double> loss_weights(std::span<const AnnotatedToken> tokens, double gamma) {
  if (gamma < 1.0) throw std::invalid_argument("gamma must be >= 1");
  std::vector<double> weights;
  weights.reserve(tokens.size());
  for (const AnnotatedToken& token : tokens) {
    weights.push_back(token.in_marker ? gamma : 1.0);
  }
  return weights;
}

}  // namespace progresskit
