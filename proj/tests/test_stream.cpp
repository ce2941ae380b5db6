#include "progresskit/stream.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

#include "progresskit/errors.hpp"
#include "progresskit/markers.hpp"
#include "progresskit/trace.hpp"
#include "test_util.hpp"

using namespace progresskit;

namespace {

// Reassembles the original bytes from text payloads and raw progress spans.
std::string reconstruct(const std::vector<StreamEvent>& events) {
  std::string bytes;
  for (const StreamEvent& event : events) {
    if (event.kind == StreamEventKind::kText || event.kind == StreamEventKind::kProgress) {
      bytes += event.text;
    }
  }
  return bytes;
}

std::vector<StreamEvent> parse_chunked(std::string_view input,
                                       const std::vector<std::size_t>& cuts) {
  MarkerStreamParser parser;
  std::vector<StreamEvent> events;
  std::size_t begin = 0;
  for (std::size_t cut : cuts) {
    const auto chunk = parser.feed(input.substr(begin, cut - begin));
    events.insert(events.end(), chunk.begin(), chunk.end());
    begin = cut;
  }
  const auto tail = parser.feed(input.substr(begin));
  events.insert(events.end(), tail.begin(), tail.end());
  const auto end = parser.finish();
  events.insert(events.end(), end.begin(), end.end());
  return coalesce_text_events(events);
}

std::string random_stream_input(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pieces(1, 12);
  std::uniform_int_distribution<int> kind(0, 9);
  std::uniform_int_distribution<int> value(0, 130);
  std::string input;
  const int n = pieces(rng);
  for (int i = 0; i < n; ++i) {
    switch (kind(rng)) {
      case 0:
        input += format_marker(value(rng));  // sometimes out of range
        break;
      case 1:
        input += "<progressbar>";  // unterminated opener
        break;
      case 2:
        input += "<progressbar>12x</progressbar>";  // bad body
        break;
      case 3:
        input += "<progress";  // partial opener
        break;
      case 4:
        input += "</progressbar>";  // stray closer
        break;
      case 5:
        input += "<progressbar> " + std::to_string(value(rng)) + " </progressbar>";
        break;
      default:
        input += progresskit::testing::random_text(rng, 1 + static_cast<int>(rng() % 5));
        input += ' ';
    }
  }
  return input;
}

}  // namespace

TEST_CASE("plain text passes straight through") {
  MarkerStreamParser parser;
  const auto events = parser.feed("abc");
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == StreamEventKind::kText);
  CHECK(events[0].text == "abc");
  CHECK(events[0].offset == 0);
}

TEST_CASE("marker split across a chunk boundary") {
  MarkerStreamParser parser;
  const auto first = parser.feed("x<progressb");
  REQUIRE(first.size() == 1);
  CHECK(first[0].kind == StreamEventKind::kText);
  CHECK(first[0].text == "x");

  const auto second = parser.feed("ar>42</progressbar>y");
  REQUIRE(second.size() == 2);
  CHECK(second[0].kind == StreamEventKind::kProgress);
  CHECK(second[0].value == 42);
  CHECK(second[0].text == "<progressbar>42</progressbar>");
  CHECK(second[0].offset == 1);
  CHECK(second[1].kind == StreamEventKind::kText);
  CHECK(second[1].text == "y");

  // Whole-string oracle: same coalesced stream.
  const auto whole = parse_stream("x<progressbar>42</progressbar>y");
  auto chunked = parser.finish();
  std::vector<StreamEvent> all = first;
  all.insert(all.end(), second.begin(), second.end());
  all.insert(all.end(), chunked.begin(), chunked.end());
  CHECK(coalesce_text_events(all) == whole);
}

TEST_CASE("out-of-range value warns and passes through as text") {
  const auto events = parse_stream("<progressbar>200</progressbar>");
  REQUIRE(events.size() == 3);
  CHECK(events[0].kind == StreamEventKind::kWarning);
  CHECK(events[0].offset == 0);
  CHECK(events[1].kind == StreamEventKind::kText);
  CHECK(events[1].text == "<progressbar>200</progressbar>");
  CHECK(events[2].kind == StreamEventKind::kEnd);
}

TEST_CASE("non-numeric body warns and passes through") {
  const auto events = parse_stream("a<progressbar>4x2</progressbar>b");
  REQUIRE(events.size() >= 3);
  CHECK(events[0].kind == StreamEventKind::kText);
  CHECK(events[0].text == "a");
  CHECK(events[1].kind == StreamEventKind::kWarning);
  CHECK(reconstruct(events) == "a<progressbar>4x2</progressbar>b");
}

TEST_CASE("buffered partial marker flushes as text at finish") {
  MarkerStreamParser parser;
  CHECK(parser.feed("<progressb").empty());
  const auto events = parser.finish();
  REQUIRE(events.size() == 2);
  CHECK(events[0].kind == StreamEventKind::kText);
  CHECK(events[0].text == "<progressb");
  CHECK(events[1].kind == StreamEventKind::kEnd);
  CHECK(parser.finished());
}

TEST_CASE("clean end emits only the end event") {
  MarkerStreamParser parser;
  const auto events = parser.finish();
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == StreamEventKind::kEnd);
}

TEST_CASE("feed after finish is an error") {
  MarkerStreamParser parser;
  parser.finish();
  CHECK_THROWS_AS(parser.feed("x"), Error);
  CHECK_THROWS_AS(parser.finish(), Error);
}

TEST_CASE("back-to-back markers and a marker opening inside a bad body") {
  const auto events =
      parse_stream("<progressbar><progressbar>42</progressbar>");
  // First opener has no digits: warning, raw text, then a valid marker.
  REQUIRE(events.size() >= 3);
  CHECK(events[0].kind == StreamEventKind::kWarning);
  bool saw_progress = false;
  for (const auto& event : events) {
    if (event.kind == StreamEventKind::kProgress) {
      CHECK(event.value == 42);
      saw_progress = true;
    }
  }
  CHECK(saw_progress);
  CHECK(reconstruct(events) == "<progressbar><progressbar>42</progressbar>");
}

TEST_CASE("progress events agree with extract_annotations on well-formed text") {
  std::mt19937_64 rng(509);
  std::uniform_int_distribution<int> tokens(1, 10);
  std::uniform_int_distribution<int> value(0, 100);
  for (int i = 0; i < 200; ++i) {
    std::string text = testing::random_text(rng, tokens(rng));
    const int n_markers = 1 + static_cast<int>(rng() % 5);
    for (int m = 0; m < n_markers; ++m) {
      text += format_marker(value(rng));
      text += ' ';
      text += testing::random_text(rng, tokens(rng));
    }

    const auto extraction = extract_annotations(text);
    const auto events = parse_stream(text);
    std::vector<int> streamed;
    std::string stream_clean;
    for (const auto& event : events) {
      if (event.kind == StreamEventKind::kProgress) streamed.push_back(event.value);
      if (event.kind == StreamEventKind::kText) stream_clean += event.text;
    }
    REQUIRE(streamed.size() == extraction.annotations.size());
    for (std::size_t m = 0; m < streamed.size(); ++m) {
      CHECK(streamed[m] == extraction.annotations[m].value);
    }
    CHECK(stream_clean == extraction.clean_text);
  }
}

TEST_CASE("chunking invariance and losslessness on fuzzed inputs") {
  std::mt19937_64 rng(521);
  for (int i = 0; i < 300; ++i) {
    const std::string input = random_stream_input(rng);
    const auto whole = parse_stream(input);
    CHECK(reconstruct(whole) == input);

    for (int c = 0; c < 5; ++c) {
      std::vector<std::size_t> cuts;
      const int n_cuts = static_cast<int>(rng() % 6);
      for (int j = 0; j < n_cuts && !input.empty(); ++j) {
        cuts.push_back(rng() % input.size());
      }
      std::sort(cuts.begin(), cuts.end());
      const auto chunked = parse_chunked(input, cuts);
      CHECK(chunked == whole);
    }
  }
}

TEST_CASE("progress events appear in input order with monotone offsets") {
  std::mt19937_64 rng(523);
  for (int i = 0; i < 100; ++i) {
    const std::string input = random_stream_input(rng);
    const auto events = parse_stream(input);
    std::size_t last_offset = 0;
    for (const auto& event : events) {
      CHECK(event.offset >= last_offset);
      last_offset = event.offset;
    }
  }
}
