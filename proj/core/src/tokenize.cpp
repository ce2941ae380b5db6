#include "progresskit/tokenize.hpp"

namespace progresskit {

std::size_t count_tokens(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_token_separator(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

std::vector<std::pair<std::size_t, std::size_t>> token_spans(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t begin = 0;
  bool in_token = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_token_separator(text[i])) {
      if (in_token) {
        spans.emplace_back(begin, i);
        in_token = false;
      }
    } else if (!in_token) {
      begin = i;
      in_token = true;
    }
  }
  if (in_token) spans.emplace_back(begin, text.size());
  return spans;
}

std::size_t tokens_before(std::string_view text, std::size_t byte_offset) {
  std::size_t count = 0;
  bool in_token = false;
  for (std::size_t i = 0; i < text.size() && i < byte_offset; ++i) {
    if (is_token_separator(text[i])) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

}  // namespace progresskit
