#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace progresskit {

// One question plus the reasoning a model produced for it. token_count is the
// number of tokenized reasoning units; when a producer does not supply it, it
// is computed with the whitespace rule from tokenize.hpp.
struct ReasoningTrace {
  std::string id;
  std::string question;
  std::string reasoning;
  std::string answer;
  std::string model_family = "unspecified";
  std::string task = "unspecified";
  std::int64_t token_count = 0;

  bool operator==(const ReasoningTrace&) const = default;
};

// An inline progress marker. position is the token offset of the marker in
// the marker-free text (tokens that start before the removal point); marker
// bytes themselves are never counted.
struct ProgressAnnotation {
  std::int64_t position = 0;
  int value = 0;  // 0..100

  bool operator==(const ProgressAnnotation&) const = default;
};

struct DatasetSplit {
  std::vector<ReasoningTrace> in_domain;
  std::vector<ReasoningTrace> held_out;
  std::int64_t threshold_tokens = 0;
};

inline constexpr std::int64_t kDefaultLengthThreshold = 16384;

// Parses one JSONL record. Required fields: id, reasoning (non-empty).
// answer and question default to empty, model_family and task to
// "unspecified", token_count to the whitespace token count of reasoning.
// Throws ParseError for malformed JSON, SchemaError for schema violations;
// line_number, when nonzero, is included in messages.
ReasoningTrace parse_trace_line(std::string_view line, std::size_t line_number = 0);

std::string serialize_trace(const ReasoningTrace& trace);

std::vector<ReasoningTrace> read_trace_file(const std::filesystem::path& path);
void write_trace_file(const std::filesystem::path& path, std::span<const ReasoningTrace> traces);

struct ExtractionResult {
  std::string clean_text;
  std::vector<ProgressAnnotation> annotations;
};

// Removes every well-formed marker span from the text, byte for byte, and
// reports each as a ProgressAnnotation at its token offset in the clean text.
// Positions must come out strictly increasing (markers separated by at least
// one token); anything else is a SchemaError.
ExtractionResult extract_annotations(std::string_view reasoning);

// Order-preserving partition into traces with token_count <= threshold and
// the rest.
DatasetSplit split_by_length(std::span<const ReasoningTrace> traces,
                             std::int64_t threshold_tokens = kDefaultLengthThreshold);

}  // namespace progresskit
