#include "progresskit/trace.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "progresskit/errors.hpp"
#include "progresskit/markers.hpp"
#include "progresskit/tokenize.hpp"

namespace progresskit {

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& what, std::size_t line_number) {
  std::string msg = "trace schema error: " + what;
  if (line_number != 0) msg += " (line " + std::to_string(line_number) + ")";
  throw SchemaError(msg);
}

std::string require_string(const json& obj, const char* key, std::size_t line_number) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(std::string("missing field '") + key + "'", line_number);
  if (!it->is_string()) schema_fail(std::string("field '") + key + "' must be a string", line_number);
  return it->get<std::string>();
}

std::string optional_string(const json& obj, const char* key, std::string fallback,
                            std::size_t line_number) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_string()) schema_fail(std::string("field '") + key + "' must be a string", line_number);
  return it->get<std::string>();
}

}  // namespace

ReasoningTrace parse_trace_line(std::string_view line, std::size_t line_number) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    std::string msg = std::string("malformed JSON: ") + e.what();
    if (line_number != 0) msg += " (line " + std::to_string(line_number) + ")";
    throw ParseError(msg);
  }
  if (!obj.is_object()) schema_fail("record is not a JSON object", line_number);

  ReasoningTrace trace;
  trace.id = require_string(obj, "id", line_number);
  if (trace.id.empty()) schema_fail("empty id", line_number);
  trace.reasoning = require_string(obj, "reasoning", line_number);
  if (trace.reasoning.empty()) schema_fail("empty reasoning", line_number);

  trace.question = optional_string(obj, "question", "", line_number);
  trace.answer = optional_string(obj, "answer", "", line_number);
  trace.model_family = optional_string(obj, "model_family", "unspecified", line_number);
  trace.task = optional_string(obj, "task", "unspecified", line_number);
  if (trace.model_family.empty()) schema_fail("empty model_family", line_number);
  if (trace.task.empty()) schema_fail("empty task", line_number);

  if (auto it = obj.find("token_count"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer()) schema_fail("token_count must be an integer", line_number);
    trace.token_count = it->get<std::int64_t>();
  } else {
    trace.token_count = static_cast<std::int64_t>(count_tokens(trace.reasoning));
  }
  if (trace.token_count < 1) schema_fail("token_count must be >= 1", line_number);

  return trace;
}

std::string serialize_trace(const ReasoningTrace& trace) {
  json obj = {
      {"id", trace.id},
      {"question", trace.question},
      {"reasoning", trace.reasoning},
      {"answer", trace.answer},
      {"model_family", trace.model_family},
      {"task", trace.task},
      {"token_count", trace.token_count},
  };
  return obj.dump();
}

std::vector<ReasoningTrace> read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file: " + path.string());
  std::vector<ReasoningTrace> traces;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    traces.push_back(parse_trace_line(line, line_number));
  }
  return traces;
}

void write_trace_file(const std::filesystem::path& path, std::span<const ReasoningTrace> traces) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trace file: " + path.string());
  for (const ReasoningTrace& trace : traces) {
    out << serialize_trace(trace) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

ExtractionResult extract_annotations(std::string_view reasoning) {
  const std::vector<MarkerSpan> spans = find_marker_spans(reasoning);

  ExtractionResult result;
  result.clean_text.reserve(reasoning.size());
  result.annotations.reserve(spans.size());

  // Build the clean text and count token starts as we go, so each marker's
  // position is the number of clean-text tokens that begin before its
  // removal point.
  std::size_t token_starts = 0;
  bool in_token = false;
  std::size_t src = 0;
  auto append_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const char c = reasoning[i];
      if (is_token_separator(c)) {
        in_token = false;
      } else if (!in_token) {
        in_token = true;
        ++token_starts;
      }
      result.clean_text.push_back(c);
    }
  };

  for (const MarkerSpan& span : spans) {
    append_range(src, span.begin);
    result.annotations.push_back(
        {static_cast<std::int64_t>(token_starts), span.value});
    src = span.end;
  }
  append_range(src, reasoning.size());

  for (std::size_t i = 1; i < result.annotations.size(); ++i) {
    if (result.annotations[i].position <= result.annotations[i - 1].position) {
      throw SchemaError("annotation positions not strictly increasing (markers at token offset " +
                        std::to_string(result.annotations[i].position) + ")");
    }
  }
  return result;
}

DatasetSplit split_by_length(std::span<const ReasoningTrace> traces,
                             std::int64_t threshold_tokens) {
  if (threshold_tokens < 1) {
    throw std::invalid_argument("split threshold must be >= 1");
  }
  DatasetSplit split;
  split.threshold_tokens = threshold_tokens;
  for (const ReasoningTrace& trace : traces) {
    if (trace.token_count <= threshold_tokens) {
      split.in_domain.push_back(trace);
    } else {
      split.held_out.push_back(trace);
    }
  }
  return split;
}

}  // namespace progresskit
