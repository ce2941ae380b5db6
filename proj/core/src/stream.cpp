#include "progresskit/stream.hpp"

#include "progresskit/errors.hpp"
#include "progresskit/markers.hpp"
#include "progresskit/tokenize.hpp"

namespace progresskit {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::vector<StreamEvent> MarkerStreamParser::feed(std::string_view chunk) {
  if (finished_) throw Error("feed after finish");
  std::vector<StreamEvent> events;
  for (char byte : chunk) {
    consume(byte, events);
    ++consumed_;
  }
  // Pending plain text never contains '<', so it can never begin a marker
  // and is safe to emit at every chunk boundary.
  flush_text(events);
  return events;
}

std::vector<StreamEvent> MarkerStreamParser::finish() {
  if (finished_) throw Error("finish called twice");
  std::vector<StreamEvent> events;
  if (!candidate_.empty()) {
    // Unresolved partial marker: plain text after all.
    if (text_run_.empty()) text_offset_ = candidate_offset_;
    text_run_.append(candidate_);
    candidate_.clear();
  }
  flush_text(events);
  StreamEvent end;
  end.kind = StreamEventKind::kEnd;
  end.offset = consumed_;
  events.push_back(std::move(end));
  finished_ = true;
  return events;
}

void MarkerStreamParser::begin_candidate() {
  candidate_.assign(1, '<');
  candidate_offset_ = consumed_;
  matched_ = 1;
  value_ = 0;
  has_digits_ = false;
  digits_done_ = false;
  state_ = State::kOpenDelimiter;
}

void MarkerStreamParser::flush_text(std::vector<StreamEvent>& events) {
  if (text_run_.empty()) return;
  StreamEvent event;
  event.kind = StreamEventKind::kText;
  event.text = std::move(text_run_);
  event.offset = text_offset_;
  events.push_back(std::move(event));
  text_run_.clear();
}

void MarkerStreamParser::fail_candidate(std::vector<StreamEvent>& events, std::string_view reason,
                                        bool warn) {
  if (warn) {
    StreamEvent warning;
    warning.kind = StreamEventKind::kWarning;
    warning.message = reason;
    warning.offset = candidate_offset_;
    events.push_back(std::move(warning));
  }
  // The raw candidate bytes pass through as text. The candidate cannot
  // contain a later '<' that could open a marker ('<' only occurs at its
  // start and as "</" of the closing delimiter), so no rescan is needed.
  if (text_run_.empty()) text_offset_ = candidate_offset_;
  text_run_.append(candidate_);
  candidate_.clear();
  state_ = State::kText;
}

void MarkerStreamParser::complete_candidate(std::vector<StreamEvent>& events) {
  if (value_ > 100) {
    fail_candidate(events, "progress value out of range [0, 100]", true);
    return;
  }
  StreamEvent event;
  event.kind = StreamEventKind::kProgress;
  event.value = static_cast<int>(value_);
  event.text = std::move(candidate_);
  event.offset = candidate_offset_;
  events.push_back(std::move(event));
  candidate_.clear();
  state_ = State::kText;
}

void MarkerStreamParser::consume(char byte, std::vector<StreamEvent>& events) {
  switch (state_) {
    case State::kText:
      if (byte == '<') {
        flush_text(events);
        begin_candidate();
      } else {
        if (text_run_.empty()) text_offset_ = consumed_;
        text_run_.push_back(byte);
      }
      return;

    case State::kOpenDelimiter:
      if (byte == kMarkerOpen[matched_]) {
        candidate_.push_back(byte);
        if (++matched_ == kMarkerOpen.size()) state_ = State::kBody;
        return;
      }
      // Never reached the body: ordinary text, not a bad marker.
      fail_candidate(events, "", false);
      consume(byte, events);
      return;

    case State::kBody:
      if (is_digit(byte)) {
        if (digits_done_) {
          fail_candidate(events, "malformed marker body", true);
          consume(byte, events);
          return;
        }
        has_digits_ = true;
        if (value_ <= 1000) value_ = value_ * 10 + (byte - '0');
        candidate_.push_back(byte);
        return;
      }
      if (is_token_separator(byte)) {
        if (has_digits_) digits_done_ = true;
        candidate_.push_back(byte);
        return;
      }
      if (byte == '<' && has_digits_) {
        candidate_.push_back(byte);
        matched_ = 1;
        state_ = State::kCloseDelimiter;
        return;
      }
      fail_candidate(events, "marker body must be a base-10 integer", true);
      consume(byte, events);
      return;

    case State::kCloseDelimiter:
      if (byte == kMarkerClose[matched_]) {
        candidate_.push_back(byte);
        if (++matched_ == kMarkerClose.size()) complete_candidate(events);
        return;
      }
      fail_candidate(events, "malformed closing delimiter", true);
      consume(byte, events);
      return;
  }
}

std::vector<StreamEvent> coalesce_text_events(std::span<const StreamEvent> events) {
  std::vector<StreamEvent> out;
  for (const StreamEvent& event : events) {
    if (event.kind == StreamEventKind::kText && !out.empty() &&
        out.back().kind == StreamEventKind::kText) {
      out.back().text.append(event.text);
      continue;
    }
    out.push_back(event);
  }
  return out;
}

std::vector<StreamEvent> parse_stream(std::string_view input) {
  MarkerStreamParser parser;
  std::vector<StreamEvent> events = parser.feed(input);
  std::vector<StreamEvent> tail = parser.finish();
  events.insert(events.end(), tail.begin(), tail.end());
  return coalesce_text_events(events);
}

}  // namespace progresskit
