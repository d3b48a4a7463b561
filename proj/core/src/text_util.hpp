#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace psyrig::detail {

std::optional<int> parse_int(std::string_view s);

inline bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string ascii_lower(std::string_view s);

// Lowercase and collapse whitespace runs to a single space, trimmed.
std::string normalize_for_match(std::string_view s);

// Non-overlapping occurrences of `needle` in `haystack`; 0 for an empty needle.
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

}  // namespace psyrig::detail
