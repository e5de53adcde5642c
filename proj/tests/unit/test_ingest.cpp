#include <gtest/gtest.h>

#include <chrono>

#include "legalir/ingest.hpp"
#include "legalir/tokenizer.hpp"
#include "oracles.hpp"

using namespace legalir;
using namespace std::chrono;

namespace {

Date ymd(int y, unsigned m, unsigned d)
{
    return Date{year{y}, month{m}, day{d}};
}

std::size_t scan_placeholders(std::string_view text)
{
    std::size_t n = 0;
    for (auto p : kPlaceholders) {
        for (auto pos = text.find(p); pos != std::string_view::npos; pos = text.find(p, pos + p.size())) {
            ++n;
        }
    }
    return n;
}

const char* kFrenchParagraph =
    "Le juge dit que la demande est rejetée et que les parties doivent payer les dépens dans le délai prévu "
    "par la loi pour une affaire de cette nature avec des frais.";

const char* kEnglishParagraph =
    "The applicant submits that the tribunal erred in law and that the decision of the board should be set "
    "aside because it was not reasonable in the circumstances of this case.";

}  // namespace

TEST(StripPreamble, DropsTextBeforeMarker)
{
    EXPECT_EQ(strip_preamble("2001 FC 123 Between: A and B [1] The plaintiff sued."), "[1] The plaintiff sued.");
    EXPECT_EQ(strip_preamble("[1] already clean"), "[1] already clean");
    EXPECT_EQ(strip_preamble("no marker at all"), "no marker at all");
    EXPECT_EQ(strip_preamble(""), "");
}

TEST(StripPreamble, FirstMarkerOnly)
{
    EXPECT_EQ(strip_preamble("head [1] a [2] b [1] c"), "[1] a [2] b [1] c");
}

TEST(RemovePlaceholders, Examples)
{
    auto r = remove_placeholders("see FRAGMENT_SUPPRESSED above");
    EXPECT_EQ(r.text, "see above");
    EXPECT_EQ(r.count, 1u);
    r = remove_placeholders("clean text");
    EXPECT_EQ(r.text, "clean text");
    EXPECT_EQ(r.count, 0u);
    r = remove_placeholders("CITATION_SUPPRESSED REFERENCE_SUPPRESSED");
    EXPECT_EQ(r.text, "");
    EXPECT_EQ(r.count, 2u);
}

TEST(RemovePlaceholders, CountMatchesStringScanOnRandomText)
{
    oracle::Gen gen(21);
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        for (std::size_t i = 0, n = gen.range(0, 30); i < n; ++i) {
            if (gen.coin(0.2)) {
                text += kPlaceholders[gen.index(3)];
            } else {
                text += gen.word(40);
            }
            text += gen.coin(0.1) ? "\n\n" : (gen.coin(0.3) ? "" : " ");
        }
        auto r = remove_placeholders(text);
        EXPECT_EQ(r.count, scan_placeholders(text));
        EXPECT_EQ(scan_placeholders(r.text), 0u) << text;
    }
}

TEST(LanguageFilter, FrenchParagraphRemoved)
{
    EXPECT_TRUE(is_non_english_paragraph(kFrenchParagraph));
    EXPECT_FALSE(is_non_english_paragraph(kEnglishParagraph));
    std::string text = std::string(kEnglishParagraph) + "\n\n" + kFrenchParagraph + "\n\n" + kEnglishParagraph;
    auto r = filter_non_english(text);
    EXPECT_EQ(r.removed_paragraphs, 1u);
    EXPECT_EQ(r.text, std::string(kEnglishParagraph) + "\n\n" + kEnglishParagraph);
    EXPECT_FALSE(r.majority_non_english);
}

TEST(LanguageFilter, EnglishAndEmptyUnchanged)
{
    std::string text = std::string(kEnglishParagraph) + "\n\n" + kEnglishParagraph;
    EXPECT_EQ(filter_non_english(text).text, text);
    EXPECT_EQ(filter_non_english("").text, "");
}

TEST(LanguageFilter, MajorityFrenchKeptVerbatimAndFlagged)
{
    std::string text = std::string(kFrenchParagraph) + "\n\n" + kFrenchParagraph + "\n\n" + kFrenchParagraph;
    auto r = filter_non_english(text);
    EXPECT_TRUE(r.majority_non_english);
    EXPECT_EQ(r.text, text);
    EXPECT_EQ(r.removed_paragraphs, 0u);
}

TEST(Summary, HeadingThenTwoParagraphs)
{
    std::string text = "[1] Intro line.\n\nSummary:\nFirst summary paragraph.\n\nSecond summary paragraph.\n\n"
                       "[2] The facts.";
    auto s = split_summary(text);
    ASSERT_TRUE(s.summary);
    EXPECT_EQ(*s.summary, "First summary paragraph.\n\nSecond summary paragraph.");
    EXPECT_EQ(s.remainder.find("Summary"), std::string::npos);
    EXPECT_NE(s.remainder.find("[2] The facts."), std::string::npos);
}

TEST(Summary, CaseInsensitiveStandaloneLine)
{
    EXPECT_TRUE(extract_summary("SUMMARY\nText here.\n"));
    EXPECT_TRUE(extract_summary("  summary:  \nText here.\n"));
    EXPECT_FALSE(extract_summary("In summary, the appeal fails."));
}

TEST(Summary, AbsentOrEmpty)
{
    EXPECT_FALSE(extract_summary("[1] no such section."));
    EXPECT_FALSE(extract_summary("[1] body\n\nSummary:\n"));
    EXPECT_FALSE(extract_summary("[1] body\n\nSummary:"));
}

TEST(Summary, StopsAtHeadingLikeParagraph)
{
    auto s = split_summary("Summary\nThe court allowed the appeal.\n\nReasons for Judgment\n\nThe reasons follow.");
    ASSERT_TRUE(s.summary);
    EXPECT_EQ(*s.summary, "The court allowed the appeal.");
}

TEST(Dates, LatestIsTrialDate)
{
    EXPECT_EQ(extract_trial_date("heard January 5, 1998 and decided March 2, 2001"), ymd(2001, 3, 2));
    EXPECT_EQ(extract_trial_date("nothing dated here, only the year 1999"), std::nullopt);
    EXPECT_EQ(extract_trial_date("filed 2020-06-30"), ymd(2020, 6, 30));
}

TEST(Dates, AllFormats)
{
    auto d = find_dates("On 5 March 2003, then 07/04/2010, then 2011-12-01, then JUNE 9, 1995.");
    ASSERT_EQ(d.size(), 4u);
    EXPECT_EQ(d[0], ymd(2003, 3, 5));
    EXPECT_EQ(d[1], ymd(2010, 7, 4));
    EXPECT_EQ(d[2], ymd(2011, 12, 1));
    EXPECT_EQ(d[3], ymd(1995, 6, 9));
}

TEST(Dates, MalformedSkipped)
{
    EXPECT_TRUE(find_dates("February 30, 2001 and 2001-13-01 and 13/45/2001").empty());
}

TEST(Dates, IsoRoundTrip)
{
    EXPECT_EQ(format_date(ymd(2005, 1, 1)), "2005-01-01");
    EXPECT_EQ(parse_iso_date("2005-01-01"), ymd(2005, 1, 1));
    EXPECT_EQ(parse_iso_date("2005-02-30"), std::nullopt);
    EXPECT_EQ(parse_iso_date("5 Jan 2005"), std::nullopt);
}

TEST(PreprocessCase, ComposedSteps)
{
    RawDocument raw{"c1", "Heard on March 3, 2004.\nCounsel list\n[1] The claimant FRAGMENT_SUPPRESSED appealed.\n\n"
                          "Summary:\nAppeal dismissed.\n\n[2] Reasons follow."};
    auto doc = preprocess_case(raw);
    EXPECT_EQ(doc.id, "c1");
    EXPECT_EQ(doc.placeholder_count, 1u);
    ASSERT_TRUE(doc.summary);
    EXPECT_EQ(*doc.summary, "Appeal dismissed.");
    EXPECT_EQ(doc.trial_date, ymd(2004, 3, 3));
    EXPECT_EQ(doc.body.find("Counsel"), std::string::npos);
    EXPECT_EQ(doc.body.find("FRAGMENT"), std::string::npos);
    EXPECT_EQ(doc.full_text().rfind("Appeal dismissed.", 0), 0u);
    EXPECT_EQ(doc.token_length, tokenize(doc.full_text(), TokenizerConfig::plain()).size());
}

TEST(PreprocessCase, EmptyDocument)
{
    auto doc = preprocess_case({"e", ""});
    EXPECT_EQ(doc.body, "");
    EXPECT_EQ(doc.placeholder_count, 0u);
    EXPECT_FALSE(doc.trial_date);
    EXPECT_EQ(doc.token_length, 0u);
}

TEST(PreprocessCase, PreambleOnly)
{
    auto doc = preprocess_case({"p", "Style of cause and counsel. [1]"});
    EXPECT_EQ(doc.body.find("Style"), std::string::npos);
    EXPECT_EQ(doc.body.find("counsel"), std::string::npos);
}

TEST(PreprocessCase, DateComesFromOriginalText)
{
    // The only date sits in the preamble, which stripping removes.
    auto doc = preprocess_case({"d", "Decided 2019-04-01.\n[1] Body."});
    EXPECT_EQ(doc.trial_date, ymd(2019, 4, 1));
}

TEST(PreprocessCase, IdempotentOnBody)
{
    oracle::Gen gen(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::string text = "Preamble " + gen.word(50) + "\n[1] ";
        bool has_summary = false;
        for (std::size_t i = 0, n = gen.range(1, 40); i < n; ++i) {
            text += gen.coin(0.1) ? std::string(kPlaceholders[gen.index(3)]) : gen.word(50);
            text += gen.coin(0.1) ? "\n\n" : "  ";
            // At most one summary section per document.
            if (!has_summary && gen.coin(0.03)) {
                has_summary = true;
                text += "\n\nSummary:\n" + gen.word(50) + " " + gen.word(50) + ".\n\n";
            }
        }
        auto once = preprocess_case({"x", text});
        auto twice = preprocess_case({"x", once.body});
        EXPECT_EQ(twice.body, once.body);
        EXPECT_EQ(twice.placeholder_count, 0u);
        EXPECT_EQ(once.placeholder_count, scan_placeholders(text));
    }
}

TEST(PreprocessCase, TrialDateIsMaximum)
{
    oracle::Gen gen(13);
    static const char* months[] = {"January", "April", "July", "October"};
    for (int trial = 0; trial < 100; ++trial) {
        std::string text;
        std::optional<Date> best;
        for (std::size_t i = 0, n = gen.range(0, 5); i < n; ++i) {
            int y = static_cast<int>(gen.range(1990, 2023));
            unsigned m = static_cast<unsigned>(gen.index(4));
            unsigned d = static_cast<unsigned>(gen.range(1, 28));
            text += std::string("on ") + months[m] + " " + std::to_string(d) + ", " + std::to_string(y) + " ";
            Date date = ymd(y, m * 3 + 1, d);
            best = best ? std::max(*best, date) : date;
        }
        EXPECT_EQ(preprocess_case({"t", text}).trial_date, best);
    }
}

TEST(PreprocessArticle, LeadInsAndCaptionsRemoved)
{
    auto a = preprocess_article({"3", "Part I General Provisions\nChapter II Persons\n(Standards for Construction)\n"
                                      "Article 3 The enjoyment of private rights commences at birth."});
    EXPECT_EQ(a.article_id, "3");
    EXPECT_EQ(a.content, "Article 3 The enjoyment of private rights commences at birth.");
    auto plain = preprocess_article({"4", "Article 4 A person reaches majority at eighteen."});
    EXPECT_EQ(plain.content, "Article 4 A person reaches majority at eighteen.");
}

TEST(PreprocessArticle, NoForbiddenLinesSurvive)
{
    oracle::Gen gen(30);
    static const char* leads[] = {"Part ", "Chapter ", "Section ", "Subsection "};
    for (int trial = 0; trial < 100; ++trial) {
        std::string text;
        for (std::size_t i = 0, n = gen.range(1, 10); i < n; ++i) {
            switch (gen.index(3)) {
            case 0:
                text += std::string(leads[gen.index(4)]) + gen.word(20) + "\n";
                break;
            case 1:
                text += "(" + gen.word(20) + " " + gen.word(20) + ")\n";
                break;
            default:
                text += "Article " + std::to_string(i) + " " + gen.word(20) + " (" + gen.word(20) + ")\n";
            }
        }
        auto content = preprocess_article({"a", text}).content;
        std::size_t start = 0;
        while (start <= content.size()) {
            auto end = content.find('\n', start);
            std::string line = content.substr(start, end == std::string::npos ? std::string::npos : end - start);
            for (auto lead : leads) {
                EXPECT_NE(line.rfind(lead, 0), 0u) << line;
            }
            if (!line.empty()) {
                EXPECT_FALSE(line.front() == '(' && line.back() == ')') << line;
            }
            if (end == std::string::npos) {
                break;
            }
            start = end + 1;
        }
    }
}

TEST(PreprocessPlain, WhitespaceOnly)
{
    auto d = preprocess_plain({"q", "  A   query\twith   FRAGMENT_SUPPRESSED  "});
    EXPECT_EQ(d.body, "A query with FRAGMENT_SUPPRESSED");
    EXPECT_FALSE(d.summary);
}
