#include "progresskit/markers.hpp"

#include <string>

#include "progresskit/errors.hpp"
#include "progresskit/tokenize.hpp"

namespace progresskit {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::vector<MarkerSpan> find_marker_spans(std::string_view text) {
  std::vector<MarkerSpan> spans;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = text.find(kMarkerOpen, pos);
    if (open == std::string_view::npos) break;

    const std::size_t body_begin = open + kMarkerOpen.size();
    const std::size_t close = text.find(kMarkerClose, body_begin);
    if (close == std::string_view::npos) {
      throw ParseError("unterminated annotation at byte " + std::to_string(open));
    }

    // Body grammar: optional whitespace, digits, optional whitespace.
    std::size_t i = body_begin;
    while (i < close && is_token_separator(text[i])) ++i;
    long long value = 0;
    bool has_digits = false;
    while (i < close && is_digit(text[i])) {
      has_digits = true;
      if (value <= 1000) value = value * 10 + (text[i] - '0');
      ++i;
    }
    while (i < close && is_token_separator(text[i])) ++i;
    if (!has_digits || i != close) {
      throw ParseError("malformed annotation body at byte " + std::to_string(open));
    }
    if (value > 100) {
      throw ValueRangeError("annotation value out of range [0,100] at byte " +
                            std::to_string(open));
    }

    spans.push_back({open, close + kMarkerClose.size(), static_cast<int>(value)});
    pos = close + kMarkerClose.size();
  }
  return spans;
}

std::string format_marker(int value) {
  std::string out;
  out.reserve(kMarkerOpen.size() + kMarkerClose.size() + 3);
  out.append(kMarkerOpen);
  out.append(std::to_string(value));
  out.append(kMarkerClose);
  return out;
}

}  // namespace progresskit
