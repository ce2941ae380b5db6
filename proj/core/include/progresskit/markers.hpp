#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace progresskit {

inline constexpr std::string_view kMarkerOpen = "<progressbar>";
inline constexpr std::string_view kMarkerClose = "</progressbar>";

// One well-formed marker span; [begin, end) covers both delimiters.
struct MarkerSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  int value = 0;
};

// Scans text for well-formed `<progressbar>N</progressbar>` spans. The body
// is a base-10 integer with optional surrounding whitespace; nesting is not
// permitted. Throws ParseError for an opening delimiter without a well-formed
// body and closing delimiter (offset reported), ValueRangeError for values
// outside [0, 100].
std::vector<MarkerSpan> find_marker_spans(std::string_view text);

std::string format_marker(int value);

}  // namespace progresskit
