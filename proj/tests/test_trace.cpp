#include "progresskit/trace.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>
#include <random>

#include "progresskit/errors.hpp"
#include "progresskit/markers.hpp"
#include "progresskit/tokenize.hpp"
#include "test_util.hpp"

using namespace progresskit;
using nlohmann::json;

TEST_CASE("parse_trace_line fills fields and computes token_count") {
  const auto trace = parse_trace_line(
      R"({"id":"t1","question":"q","reasoning":"a b c","model_family":"m","task":"math"})");
  CHECK(trace.id == "t1");
  CHECK(trace.question == "q");
  CHECK(trace.reasoning == "a b c");
  CHECK(trace.model_family == "m");
  CHECK(trace.task == "math");
  CHECK(trace.token_count == 3);
  CHECK(trace.answer.empty());
}

TEST_CASE("parse_trace_line rejects degenerate input") {
  CHECK_THROWS_AS(parse_trace_line(R"({"id":"t2","reasoning":""})"), SchemaError);
  CHECK_THROWS_AS(parse_trace_line(R"({"reasoning":"x"})"), SchemaError);
  CHECK_THROWS_AS(parse_trace_line(R"({"id":"t3"})"), SchemaError);
  CHECK_THROWS_AS(parse_trace_line(R"({"id":"t4","reasoning":"   "})"), SchemaError);
  CHECK_THROWS_AS(parse_trace_line(R"({"id":"t5","reasoning":"x","token_count":0})"), SchemaError);
  CHECK_THROWS_AS(parse_trace_line(R"({"id":"t6","reasoning":"x","token_count":"3"})"),
                  SchemaError);
}

TEST_CASE("parse_trace_line reports line numbers for malformed JSON") {
  try {
    parse_trace_line("{not json", 7);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }
}

TEST_CASE("explicit token_count overrides the whitespace rule") {
  const auto trace = parse_trace_line(R"({"id":"t","reasoning":"a b c","token_count":42})");
  CHECK(trace.token_count == 42);
}

TEST_CASE("defaults keep the grouping key non-empty") {
  const auto trace = parse_trace_line(R"({"id":"t","reasoning":"a"})");
  CHECK(trace.model_family == "unspecified");
  CHECK(trace.task == "unspecified");
}

TEST_CASE("serialize/parse round trip on random valid lines") {
  std::mt19937_64 rng(20260810);
  std::uniform_int_distribution<int> tokens(1, 40);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int i = 0; i < 1000; ++i) {
    json obj = {
        {"id", "trace-" + std::to_string(i)},
        {"reasoning", testing::random_text(rng, tokens(rng))},
        {"question", testing::random_text(rng, tokens(rng) / 2)},
        {"model_family", testing::random_word(rng)},
        {"task", testing::random_word(rng)},
    };
    if (coin(rng)) obj["answer"] = testing::random_word(rng);
    if (coin(rng)) obj["token_count"] = tokens(rng);

    const ReasoningTrace parsed = parse_trace_line(obj.dump());
    const ReasoningTrace reparsed = parse_trace_line(serialize_trace(parsed));
    CHECK(parsed == reparsed);
  }
}

TEST_CASE("extract_annotations single marker") {
  const auto result = extract_annotations("ab <progressbar>30</progressbar> cd");
  CHECK(result.clean_text == "ab  cd");
  REQUIRE(result.annotations.size() == 1);
  CHECK(result.annotations[0].position == 1);
  CHECK(result.annotations[0].value == 30);
}

TEST_CASE("extract_annotations identity without markers") {
  const auto result = extract_annotations("no markers here");
  CHECK(result.clean_text == "no markers here");
  CHECK(result.annotations.empty());
}

TEST_CASE("extract_annotations error paths") {
  CHECK_THROWS_AS(extract_annotations("x <progressbar>101</progressbar>"), ValueRangeError);
  CHECK_THROWS_AS(extract_annotations("x <progressbar>30"), ParseError);
  CHECK_THROWS_AS(extract_annotations("x <progressbar>abc</progressbar>"), ParseError);
  CHECK_THROWS_AS(extract_annotations("x <progressbar></progressbar>"), ParseError);
  // Adjacent markers share a token offset, which breaks strict ordering.
  CHECK_THROWS_AS(
      extract_annotations("a <progressbar>1</progressbar><progressbar>2</progressbar>"),
      SchemaError);
}

TEST_CASE("extract_annotations accepts whitespace around the value") {
  const auto result = extract_annotations("a <progressbar> 42 </progressbar> b");
  REQUIRE(result.annotations.size() == 1);
  CHECK(result.annotations[0].value == 42);
  CHECK(result.clean_text == "a  b");
}

TEST_CASE("clean text equals source with spans deleted, byte for byte") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> tokens(2, 30);
  std::uniform_int_distribution<int> value(0, 100);
  for (int i = 0; i < 300; ++i) {
    // Build text with markers between token groups, tracking expected bytes.
    std::string with_markers;
    std::string expected_clean;
    const int n_groups = 1 + static_cast<int>(rng() % 4);
    for (int g = 0; g < n_groups; ++g) {
      const std::string chunk = testing::random_text(rng, tokens(rng));
      with_markers += chunk;
      expected_clean += chunk;
      if (g + 1 < n_groups) {
        with_markers += format_marker(value(rng));
        with_markers += ' ';
        expected_clean += ' ';
      }
    }
    const auto result = extract_annotations(with_markers);
    CHECK(result.clean_text == expected_clean);
    CHECK(result.annotations.size() == static_cast<std::size_t>(n_groups - 1));
  }
}

TEST_CASE("annotation positions stay within the clean token count") {
  const auto result =
      extract_annotations("one two <progressbar>50</progressbar> three<progressbar>100</progressbar>");
  const auto clean_tokens = static_cast<std::int64_t>(count_tokens(result.clean_text));
  for (const auto& annotation : result.annotations) {
    CHECK(annotation.position <= clean_tokens);
  }
  REQUIRE(result.annotations.size() == 2);
  CHECK(result.annotations[0].position == 2);
  CHECK(result.annotations[1].position == 3);
}

namespace {

ReasoningTrace make_trace(const std::string& id, std::int64_t tokens) {
  ReasoningTrace trace;
  trace.id = id;
  trace.reasoning = "x";
  trace.model_family = "fam";
  trace.task = "task";
  trace.token_count = tokens;
  return trace;
}

}  // namespace

TEST_CASE("split_by_length partitions at the threshold") {
  const std::vector<ReasoningTrace> traces = {make_trace("a", 10), make_trace("b", 20),
                                              make_trace("c", 30)};
  const DatasetSplit split = split_by_length(traces, 20);
  REQUIRE(split.in_domain.size() == 2);
  REQUIRE(split.held_out.size() == 1);
  CHECK(split.in_domain[0].id == "a");
  CHECK(split.in_domain[1].id == "b");
  CHECK(split.held_out[0].id == "c");
}

TEST_CASE("split_by_length on empty input") {
  const DatasetSplit split = split_by_length({}, 16384);
  CHECK(split.in_domain.empty());
  CHECK(split.held_out.empty());
}

TEST_CASE("split_by_length rejects a non-positive threshold") {
  CHECK_THROWS_AS(split_by_length({}, 0), std::invalid_argument);
}

TEST_CASE("split_by_length matches a filter oracle and preserves order") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> length(1, 40000);
  std::vector<ReasoningTrace> traces;
  for (int i = 0; i < 500; ++i) traces.push_back(make_trace("t" + std::to_string(i), length(rng)));

  const std::int64_t threshold = 16384;
  const DatasetSplit split = split_by_length(traces, threshold);

  std::size_t expected_in = 0;
  for (const auto& trace : traces) {
    if (trace.token_count <= threshold) ++expected_in;
  }
  CHECK(split.in_domain.size() == expected_in);
  CHECK(split.in_domain.size() + split.held_out.size() == traces.size());

  // Disjoint by id and order-preserving within each side.
  std::size_t next_in = 0;
  std::size_t next_out = 0;
  for (const auto& trace : traces) {
    if (trace.token_count <= threshold) {
      CHECK(split.in_domain[next_in++].id == trace.id);
    } else {
      CHECK(split.held_out[next_out++].id == trace.id);
    }
  }
}

TEST_CASE("trace file IO round trip") {
  testing::TempDir dir("trace-io");
  std::vector<ReasoningTrace> traces = {make_trace("a", 3), make_trace("b", 5)};
  traces[0].reasoning = "alpha beta gamma";
  traces[1].question = "why?";
  const auto path = dir.path / "traces.jsonl";
  write_trace_file(path, traces);
  const auto loaded = read_trace_file(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0] == traces[0]);
  CHECK(loaded[1] == traces[1]);

  CHECK_THROWS_AS(read_trace_file(dir.path / "missing.jsonl"), IoError);
}
