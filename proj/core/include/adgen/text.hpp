#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace adgen::text {

std::string trim(std::string_view s);
std::string lower(std::string_view s);
bool icontains(std::string_view haystack, std::string_view needle);
std::vector<std::string> split_words(std::string_view s);
std::size_t word_count(std::string_view s);

/// Keeps the first `max_words` whitespace-separated words. Returns true in
/// `truncated` when anything was dropped.
std::string truncate_words(std::string_view s, std::size_t max_words, bool* truncated = nullptr);

/// Replaces every occurrence of `key` in `tmpl`.
std::string replace_all(std::string tmpl, std::string_view key, std::string_view value);

std::string format_fixed(double value, int decimals);

}  // namespace adgen::text
