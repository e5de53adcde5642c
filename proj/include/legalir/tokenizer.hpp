#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace legalir {

struct TokenizerConfig {
    bool lowercase = true;
    std::size_t min_token_len = 1;
    std::size_t ngram_lo = 1;
    std::size_t ngram_hi = 1;

    /// Throws UsageError unless 1 <= ngram_lo <= ngram_hi.
    void validate() const;

    static TokenizerConfig plain() { return {}; }
    static TokenizerConfig ngram(std::size_t lo = 1, std::size_t hi = 3)
    {
        return {true, 1, lo, hi};
    }

    friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

/// Splits on non-alphanumeric boundaries (bytes >= 0x80 count as word
/// characters so UTF-8 letters stay inside words), optionally lowercases ASCII,
/// drops tokens shorter than `min_token_len` code points, then emits every
/// contiguous n-gram for n in [ngram_lo, ngram_hi], joined with '_'.
/// Output order: all n=ngram_lo grams left to right, then n+1, and so on.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config);

}  // namespace legalir
