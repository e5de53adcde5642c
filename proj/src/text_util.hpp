#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace legalir::detail {

inline bool is_space(char c)
{
    return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (is_space(s.front()) || s.front() == '\n')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (is_space(s.back()) || s.back() == '\n')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

inline std::string ascii_lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix)
{
    return s.substr(0, prefix.size()) == prefix;
}

/// Collapses space/tab runs to one space, trims each line, collapses runs of
/// blank lines to a single blank line and drops leading/trailing blank lines.
std::string normalize_whitespace(std::string_view text);

/// Blank-line-delimited paragraphs, each with its lines joined by '\n'.
std::vector<std::string> split_paragraphs(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace legalir::detail
