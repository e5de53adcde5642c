#include "legalir/tokenizer.hpp"

#include "legalir/common.hpp"

namespace legalir {

namespace {

bool is_word_byte(unsigned char c)
{
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::size_t code_points(std::string_view s)
{
    std::size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0) != 0x80) {
            ++n;
        }
    }
    return n;
}

}  // namespace

void TokenizerConfig::validate() const
{
    if (ngram_lo < 1 || ngram_hi < ngram_lo) {
        throw UsageError("invalid n-gram range (" + std::to_string(ngram_lo) + ", "
                         + std::to_string(ngram_hi) + ")");
    }
}

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config)
{
    config.validate();
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        std::size_t start = i;
        while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        if (i == start) {
            continue;
        }
        std::string word(text.substr(start, i - start));
        if (code_points(word) < config.min_token_len) {
            continue;
        }
        if (config.lowercase) {
            for (auto& c : word) {
                if (c >= 'A' && c <= 'Z') {
                    c = static_cast<char>(c - 'A' + 'a');
                }
            }
        }
        words.push_back(std::move(word));
    }

    if (config.ngram_lo == 1 && config.ngram_hi == 1) {
        return words;
    }

    std::vector<std::string> terms;
    for (std::size_t n = config.ngram_lo; n <= config.ngram_hi; ++n) {
        if (n > words.size()) {
            break;
        }
        for (std::size_t pos = 0; pos + n <= words.size(); ++pos) {
            std::string gram = words[pos];
            for (std::size_t k = 1; k < n; ++k) {
                gram += '_';
                gram += words[pos + k];
            }
            terms.push_back(std::move(gram));
        }
    }
    return terms;
}

}  // namespace legalir
