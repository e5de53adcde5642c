#include "legalir/ingest.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <regex>
#include <unordered_set>

#include "legalir/tokenizer.hpp"
#include "text_util.hpp"

namespace legalir {

namespace detail {

std::string normalize_whitespace(std::string_view text)
{
    std::vector<std::string> lines;
    for (auto raw : split_lines(text)) {
        std::string line;
        bool pending_space = false;
        for (char c : raw) {
            if (is_space(c)) {
                pending_space = !line.empty();
                continue;
            }
            if (pending_space) {
                line += ' ';
                pending_space = false;
            }
            line += c;
        }
        lines.push_back(std::move(line));
    }

    std::string out;
    bool blank_pending = false;
    for (auto& line : lines) {
        if (line.empty()) {
            blank_pending = !out.empty();
            continue;
        }
        if (!out.empty()) {
            out += blank_pending ? "\n\n" : "\n";
        }
        blank_pending = false;
        out += line;
    }
    return out;
}

std::vector<std::string> split_paragraphs(std::string_view text)
{
    std::vector<std::string> paragraphs;
    std::string current;
    for (auto line : split_lines(text)) {
        if (trim(line).empty()) {
            if (!current.empty()) {
                paragraphs.push_back(std::move(current));
                current.clear();
            }
            continue;
        }
        if (!current.empty()) {
            current += '\n';
        }
        current += line;
    }
    if (!current.empty()) {
        paragraphs.push_back(std::move(current));
    }
    return paragraphs;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

}  // namespace detail

using namespace detail;

std::string CleanDocument::full_text() const
{
    if (!summary || summary->empty()) {
        return body;
    }
    if (body.empty()) {
        return *summary;
    }
    return *summary + "\n\n" + body;
}

std::string strip_preamble(std::string_view text)
{
    auto pos = text.find(kPreambleMarker);
    if (pos == std::string_view::npos) {
        return std::string(text);
    }
    return std::string(text.substr(pos));
}

PlaceholderRemoval remove_placeholders(std::string_view text)
{
    PlaceholderRemoval result;
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        bool matched = false;
        for (auto ph : kPlaceholders) {
            if (text.compare(i, ph.size(), ph) == 0) {
                ++result.count;
                i += ph.size();
                out += ' ';
                matched = true;
                break;
            }
        }
        if (!matched) {
            out += text[i++];
        }
    }
    result.text = normalize_whitespace(out);
    return result;
}

namespace {

// Fifty most frequent function words of each language.
const std::unordered_set<std::string>& english_function_words()
{
    static const std::unordered_set<std::string> words{
        "the",  "of",   "and",   "to",   "a",     "in",   "is",    "that", "for",  "it",
        "as",   "was",  "with",  "be",   "by",    "on",   "not",   "he",   "this", "are",
        "or",   "his",  "from",  "at",   "which", "but",  "have",  "an",   "had",  "they",
        "you",  "were", "their", "one",  "all",   "we",   "can",   "her",  "has",  "there",
        "been", "if",   "more",  "when", "will",  "would", "who",  "so",   "no",   "she",
    };
    return words;
}

const std::unordered_set<std::string>& french_function_words()
{
    static const std::unordered_set<std::string> words{
        "de",   "la",    "le",   "et",    "les",  "des",     "en",   "un",    "du",    "une",
        "que",  "est",   "pour", "qui",   "dans", "par",     "pas",  "au",    "sur",   "plus",
        "ne",   "se",    "ce",   "il",    "sont", "avec",    "aux",  "ou",    "son",   "sa",
        "mais", "nous",  "comme", "ont",  "été",  "cette",   "elle", "ses",   "leur",  "y",
        "lui",  "tout",  "être", "fait",  "ces",  "même",    "entre", "sans", "aussi", "dont",
    };
    return words;
}

constexpr double kEnglishRatioCeiling = 0.02;
constexpr double kFrenchRatioFloor = 0.05;
constexpr double kMajorityNonEnglish = 0.8;

std::vector<std::string> language_tokens(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(ascii_lower(cur));
            cur.clear();
        }
    };
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80) {
            cur += ch;
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

}  // namespace

bool is_non_english_paragraph(std::string_view paragraph)
{
    auto tokens = language_tokens(paragraph);
    if (tokens.empty()) {
        return false;
    }
    const auto& en = english_function_words();
    const auto& fr = french_function_words();
    std::size_t en_hits = 0;
    std::size_t fr_hits = 0;
    for (const auto& t : tokens) {
        en_hits += en.count(t);
        fr_hits += fr.count(t);
    }
    double n = static_cast<double>(tokens.size());
    return en_hits / n < kEnglishRatioCeiling && fr_hits / n >= kFrenchRatioFloor;
}

LanguageFilterResult filter_non_english(std::string_view text)
{
    LanguageFilterResult result;
    auto paragraphs = split_paragraphs(text);
    std::vector<std::string> kept;
    std::size_t classified = 0;
    for (auto& p : paragraphs) {
        if (language_tokens(p).empty()) {
            kept.push_back(std::move(p));
            continue;
        }
        ++classified;
        if (is_non_english_paragraph(p)) {
            ++result.removed_paragraphs;
        } else {
            kept.push_back(std::move(p));
        }
    }
    if (classified > 0
        && static_cast<double>(result.removed_paragraphs) / static_cast<double>(classified)
               > kMajorityNonEnglish) {
        result.text = std::string(text);
        result.removed_paragraphs = 0;
        result.majority_non_english = true;
        return result;
    }
    if (result.removed_paragraphs == 0) {
        result.text = std::string(text);
        return result;
    }
    result.text = join(kept, "\n\n");
    return result;
}

namespace {

bool is_summary_heading(std::string_view line)
{
    auto lower = ascii_lower(trim(line));
    return lower == "summary" || lower == "summary:";
}

bool is_numbered_paragraph(std::string_view para)
{
    para = trim(para);
    if (para.size() < 3 || para.front() != '[') {
        return false;
    }
    std::size_t i = 1;
    while (i < para.size() && para[i] >= '0' && para[i] <= '9') {
        ++i;
    }
    return i > 1 && i < para.size() && para[i] == ']';
}

bool is_heading_paragraph(std::string_view para)
{
    para = trim(para);
    if (para.empty() || para.find('\n') != std::string_view::npos) {
        return false;
    }
    char last = para.back();
    if (last == '.' || last == '?' || last == '!' || last == ',' || last == ';') {
        return false;
    }
    std::size_t words = 1;
    for (char c : para) {
        words += c == ' ' ? 1 : 0;
    }
    return words <= 10;
}

}  // namespace

SummarySplit split_summary(std::string_view text)
{
    SummarySplit out;
    auto lines = split_lines(text);
    std::size_t heading = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_summary_heading(lines[i])) {
            heading = i;
            break;
        }
    }
    if (heading == lines.size()) {
        out.remainder = std::string(text);
        return out;
    }

    // Walk paragraphs after the heading.
    std::vector<std::string> paragraphs;
    std::size_t i = heading + 1;
    std::size_t stop = lines.size();
    while (i < lines.size()) {
        while (i < lines.size() && trim(lines[i]).empty()) {
            ++i;
        }
        if (i == lines.size()) {
            stop = i;
            break;
        }
        std::size_t start = i;
        std::string para;
        while (i < lines.size() && !trim(lines[i]).empty()) {
            if (!para.empty()) {
                para += '\n';
            }
            para += trim(lines[i]);
            ++i;
        }
        if (is_numbered_paragraph(para) || is_heading_paragraph(para) || is_summary_heading(para)) {
            stop = start;
            break;
        }
        paragraphs.push_back(std::move(para));
    }

    if (paragraphs.empty()) {
        out.remainder = std::string(text);
        return out;
    }
    out.summary = join(paragraphs, "\n\n");

    std::string rest;
    for (std::size_t k = 0; k < heading; ++k) {
        rest += lines[k];
        rest += '\n';
    }
    rest += '\n';
    for (std::size_t k = stop; k < lines.size(); ++k) {
        rest += lines[k];
        rest += '\n';
    }
    out.remainder = normalize_whitespace(rest);
    return out;
}

namespace {

constexpr std::array<const char*, 12> kMonthNames = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December",
};

std::string month_alternation()
{
    std::string alt;
    for (auto* m : kMonthNames) {
        if (!alt.empty()) {
            alt += '|';
        }
        alt += m;
        alt += '|';
        std::string upper(m);
        for (auto& c : upper) {
            if (c >= 'a' && c <= 'z') {
                c = static_cast<char>(c - 'a' + 'A');
            }
        }
        alt += upper;
    }
    return alt;
}

unsigned month_number(const std::string& name)
{
    auto lower = ascii_lower(name);
    for (unsigned i = 0; i < kMonthNames.size(); ++i) {
        if (ascii_lower(kMonthNames[i]) == lower) {
            return i + 1;
        }
    }
    return 0;
}

struct DatePatterns {
    std::regex month_day_year;
    std::regex day_month_year;
    std::regex iso;
    std::regex us_numeric;
};

const DatePatterns& date_patterns()
{
    static const DatePatterns patterns = [] {
        auto months = month_alternation();
        return DatePatterns{
            std::regex("\\b(" + months + ")\\s+(\\d{1,2}),?\\s+(\\d{4})\\b"),
            std::regex("\\b(\\d{1,2})\\s+(" + months + "),?\\s+(\\d{4})\\b"),
            std::regex("\\b(\\d{4})-(\\d{2})-(\\d{2})\\b"),
            std::regex("\\b(\\d{1,2})/(\\d{1,2})/(\\d{4})\\b"),
        };
    }();
    return patterns;
}

std::optional<Date> make_date(int y, unsigned m, unsigned d)
{
    Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) {
        return std::nullopt;
    }
    return date;
}

}  // namespace

std::vector<Date> find_dates(std::string_view text)
{
    const auto& pat = date_patterns();
    std::vector<std::pair<std::ptrdiff_t, Date>> found;
    auto scan = [&](const std::regex& re, auto&& to_date) {
        for (std::cregex_iterator it(text.data(), text.data() + text.size(), re), end; it != end; ++it) {
            if (auto d = to_date(*it)) {
                found.emplace_back(it->position(0), *d);
            }
        }
    };
    scan(pat.month_day_year, [](const std::cmatch& m) {
        return make_date(std::stoi(m[3]), month_number(m[1]), std::stoul(m[2]));
    });
    scan(pat.day_month_year, [](const std::cmatch& m) {
        return make_date(std::stoi(m[3]), month_number(m[2]), std::stoul(m[1]));
    });
    scan(pat.iso, [](const std::cmatch& m) {
        return make_date(std::stoi(m[1]), std::stoul(m[2]), std::stoul(m[3]));
    });
    scan(pat.us_numeric, [](const std::cmatch& m) {
        return make_date(std::stoi(m[3]), std::stoul(m[1]), std::stoul(m[2]));
    });
    std::stable_sort(found.begin(), found.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Date> dates;
    dates.reserve(found.size());
    for (auto& [pos, d] : found) {
        dates.push_back(d);
    }
    return dates;
}

std::optional<Date> extract_trial_date(std::string_view text)
{
    auto dates = find_dates(text);
    if (dates.empty()) {
        return std::nullopt;
    }
    return *std::max_element(dates.begin(), dates.end());
}

std::string format_date(const Date& date)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

std::optional<Date> parse_iso_date(std::string_view text)
{
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (text[i] < '0' || text[i] > '9') {
            return std::nullopt;
        }
    }
    auto num = [&](std::size_t pos, std::size_t len) {
        return std::stoi(std::string(text.substr(pos, len)));
    };
    return make_date(num(0, 4), static_cast<unsigned>(num(5, 2)), static_cast<unsigned>(num(8, 2)));
}

CleanDocument preprocess_case(const RawDocument& raw)
{
    CleanDocument doc;
    doc.id = raw.id;
    doc.trial_date = extract_trial_date(raw.text);

    auto removed = remove_placeholders(strip_preamble(raw.text));
    doc.placeholder_count = removed.count;

    auto filtered = filter_non_english(removed.text);
    doc.majority_non_english = filtered.majority_non_english;

    auto split = split_summary(filtered.text);
    doc.summary = std::move(split.summary);
    doc.body = std::move(split.remainder);

    doc.token_length = tokenize(doc.full_text(), TokenizerConfig::plain()).size();
    return doc;
}

CleanDocument preprocess_plain(const RawDocument& raw)
{
    CleanDocument doc;
    doc.id = raw.id;
    doc.body = normalize_whitespace(raw.text);
    doc.token_length = tokenize(doc.body, TokenizerConfig::plain()).size();
    return doc;
}

namespace {

bool is_lead_in_line(std::string_view line)
{
    for (std::string_view prefix : {"Part ", "Chapter ", "Section ", "Subsection "}) {
        if (starts_with(line, prefix)) {
            return true;
        }
    }
    return false;
}

bool is_caption_line(std::string_view line)
{
    return line.size() >= 2 && line.front() == '(' && line.back() == ')';
}

}  // namespace

ArticleEntry preprocess_article(const RawDocument& raw)
{
    std::vector<std::string> kept;
    for (auto line : split_lines(raw.text)) {
        auto t = trim(line);
        if (t.empty() || is_lead_in_line(t) || is_caption_line(t)) {
            continue;
        }
        kept.emplace_back(t);
    }
    return {raw.id, normalize_whitespace(join(kept, "\n"))};
}

CleanDocument article_document(const ArticleEntry& article)
{
    CleanDocument doc;
    doc.id = article.article_id;
    doc.body = article.content;
    doc.token_length = tokenize(doc.body, TokenizerConfig::plain()).size();
    return doc;
}

}  // namespace legalir
