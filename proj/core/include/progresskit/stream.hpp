#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace progresskit {

enum class StreamEventKind { kText, kProgress, kWarning, kEnd };

struct StreamEvent {
  StreamEventKind kind = StreamEventKind::kText;
  std::string text;        // text payload; raw span bytes for progress events
  int value = -1;          // progress value for progress events
  std::string message;     // warning description
  std::size_t offset = 0;  // byte offset of the event start in the full input

  bool operator==(const StreamEvent&) const = default;
};

// Incremental byte-level marker parser. Chunks stream in through feed();
// text that cannot begin a marker is emitted immediately while potential
// marker prefixes are buffered across chunk boundaries. A completed
// well-formed span becomes one progress event carrying its raw bytes; a span
// with a bad body or an out-of-range value becomes a warning followed by the
// raw bytes as text, so a live stream never stalls on one bad token. The
// coalesced event stream is invariant under re-chunking of the input, and
// text payloads plus raw progress spans reconstruct the input exactly.
class MarkerStreamParser {
 public:
  // Consumes one chunk. Throws Error if finish() was already called.
  std::vector<StreamEvent> feed(std::string_view chunk);

  // Flushes buffered partial-marker bytes as text and emits the end event.
  std::vector<StreamEvent> finish();

  bool finished() const { return finished_; }

 private:
  enum class State { kText, kOpenDelimiter, kBody, kCloseDelimiter };

  void consume(char byte, std::vector<StreamEvent>& events);
  void begin_candidate();
  void flush_text(std::vector<StreamEvent>& events);
  // Returns the failed candidate to the text run; warn for candidates that
  // got past the opening delimiter.
  void fail_candidate(std::vector<StreamEvent>& events, std::string_view reason, bool warn);
  void complete_candidate(std::vector<StreamEvent>& events);

  State state_ = State::kText;
  std::string text_run_;
  std::size_t text_offset_ = 0;
  std::string candidate_;
  std::size_t candidate_offset_ = 0;
  std::size_t matched_ = 0;  // bytes matched within the active delimiter
  long long value_ = 0;
  bool has_digits_ = false;
  bool digits_done_ = false;
  std::size_t consumed_ = 0;
  bool finished_ = false;
};

// Merges adjacent text events; event-stream comparisons across different
// chunkings are defined on this normal form.
std::vector<StreamEvent> coalesce_text_events(std::span<const StreamEvent> events);

// Convenience single-shot parse: feed the whole input, then finish.
std::vector<StreamEvent> parse_stream(std::string_view input);

}  // namespace progresskit
