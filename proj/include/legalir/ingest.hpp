#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace legalir {

using Date = std::chrono::year_month_day;

struct RawDocument {
    std::string id;
    std::string text;
};

/// A cleaned case or query document.
///
/// `body` is the cleaned text with the summary section (if any) taken out of
/// its original position; `full_text()` places the summary in front of the
/// body and is what gets tokenized and indexed.
struct CleanDocument {
    std::string id;
    std::string body;
    std::optional<std::string> summary;
    std::optional<Date> trial_date;
    std::size_t placeholder_count = 0;
    std::size_t token_length = 0;
    /// Set when most paragraphs looked non-English and the text was kept verbatim.
    bool majority_non_english = false;

    [[nodiscard]] std::string full_text() const;

    friend bool operator==(const CleanDocument&, const CleanDocument&) = default;
};

struct ArticleEntry {
    std::string article_id;
    std::string content;
};

inline constexpr std::string_view kPreambleMarker = "[1]";
inline constexpr std::string_view kPlaceholders[] = {
    "FRAGMENT_SUPPRESSED",
    "REFERENCE_SUPPRESSED",
    "CITATION_SUPPRESSED",
};

/// Drops everything before the first "[1]" marker; no marker means no change.
std::string strip_preamble(std::string_view text);

struct PlaceholderRemoval {
    std::string text;
    std::size_t count = 0;
};

/// Removes the placeholder tokens. Runs of spaces/tabs collapse to one space,
/// lines are trimmed, and runs of blank lines collapse to a single blank line.
PlaceholderRemoval remove_placeholders(std::string_view text);

struct LanguageFilterResult {
    std::string text;
    std::size_t removed_paragraphs = 0;
    bool majority_non_english = false;
};

/// True when a paragraph's function-word profile looks French rather than English.
bool is_non_english_paragraph(std::string_view paragraph);

/// Removes blank-line-delimited paragraphs classified as non-English. If more
/// than 80% of the paragraphs are non-English the text is returned verbatim
/// with `majority_non_english` set.
LanguageFilterResult filter_non_english(std::string_view text);

struct SummarySplit {
    std::optional<std::string> summary;
    /// Input with the heading line and summary paragraphs removed.
    std::string remainder;
};

/// Finds a standalone "Summary"/"Summary:" line (case-insensitive) and takes
/// the paragraphs after it up to the next heading-like paragraph, a numbered
/// "[n]" paragraph, or end of text.
SummarySplit split_summary(std::string_view text);

inline std::optional<std::string> extract_summary(std::string_view text)
{
    return split_summary(text).summary;
}

/// All dates recognised in the text, in order of appearance. Formats:
/// "Month D, YYYY", "D Month YYYY", "YYYY-MM-DD", "MM/DD/YYYY".
std::vector<Date> find_dates(std::string_view text);

/// Latest recognised date.
std::optional<Date> extract_trial_date(std::string_view text);

std::string format_date(const Date& date);
/// Parses ISO "YYYY-MM-DD"; returns nullopt on anything else.
std::optional<Date> parse_iso_date(std::string_view text);

CleanDocument preprocess_case(const RawDocument& raw);

/// For plain-text queries (statute task): whitespace normalisation only.
CleanDocument preprocess_plain(const RawDocument& raw);

ArticleEntry preprocess_article(const RawDocument& raw);

/// Article rendered as a CleanDocument so it can be indexed like any other text.
CleanDocument article_document(const ArticleEntry& article);

}  // namespace legalir
