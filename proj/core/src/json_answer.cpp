#include "adgen/json_answer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "adgen/errors.hpp"
#include "adgen/text.hpp"

namespace adgen {

namespace {

// Returns the index one past the closing brace of the object starting at
// `open`, or npos when the braces never balance.
std::size_t balanced_end(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

}  // namespace

nlohmann::json parse_json_answer(std::string_view raw) {
    std::size_t pos = raw.find('{');
    while (pos != std::string_view::npos) {
        const std::size_t end = balanced_end(raw, pos);
        if (end == std::string_view::npos) break;
        auto parsed = nlohmann::json::parse(raw.substr(pos, end - pos), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
        pos = raw.find('{', pos + 1);
    }
    throw UnparseableModelOutput("no balanced JSON object in model output", std::string(raw));
}

namespace text {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool icontains(std::string_view haystack, std::string_view needle) {
    return lower(haystack).find(lower(needle)) != std::string::npos;
}

std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> words;
    std::istringstream in{std::string(s)};
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

std::size_t word_count(std::string_view s) { return split_words(s).size(); }

std::string truncate_words(std::string_view s, std::size_t max_words, bool* truncated) {
    const auto words = split_words(s);
    if (truncated) *truncated = words.size() > max_words;
    if (words.size() <= max_words) return trim(s);
    std::string out;
    for (std::size_t i = 0; i < max_words; ++i) {
        if (i) out.push_back(' ');
        out += words[i];
    }
    return out;
}

std::string replace_all(std::string tmpl, std::string_view key, std::string_view value) {
    if (key.empty()) return tmpl;
    std::size_t pos = 0;
    while ((pos = tmpl.find(key, pos)) != std::string::npos) {
        tmpl.replace(pos, key.size(), value);
        pos += value.size();
    }
    return tmpl;
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

}  // namespace text

}  // namespace adgen
