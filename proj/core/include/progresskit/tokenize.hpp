#pragma once

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

namespace progresskit {

// Tokens are maximal runs of non-whitespace bytes. This is the default
// tokenization rule everywhere a token count or token offset is needed;
// producers with a model tokenizer supply explicit counts instead.
inline bool is_token_separator(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::size_t count_tokens(std::string_view text);

// [begin, end) byte range of every token, in order.
std::vector<std::pair<std::size_t, std::size_t>> token_spans(std::string_view text);

// Number of tokens that start strictly before byte_offset.
std::size_t tokens_before(std::string_view text, std::size_t byte_offset);

}  // namespace progresskit
