#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "legalir/ingest.hpp"
#include "legalir/tokenizer.hpp"

namespace legalir {

using DocOrdinal = std::uint32_t;
using TermId = std::uint32_t;

struct Posting {
    DocOrdinal doc;
    std::uint32_t tf;

    friend bool operator==(const Posting&, const Posting&) = default;
};

/// Immutable inverted index with the collection statistics needed by BM25 and
/// Dirichlet-smoothed query likelihood. Terms are stored in lexicographic
/// order so that serialisation is independent of hash-map iteration order.
class InvertedIndex {
  public:
    InvertedIndex() = default;

    [[nodiscard]] const TokenizerConfig& config() const { return config_; }
    [[nodiscard]] std::size_t num_docs() const { return doc_ids_.size(); }
    [[nodiscard]] std::size_t num_terms() const { return terms_.size(); }
    [[nodiscard]] double avgdl() const { return avgdl_; }
    [[nodiscard]] std::uint64_t total_coll_tokens() const { return total_coll_tokens_; }

    [[nodiscard]] std::optional<TermId> term_id(std::string_view term) const;
    [[nodiscard]] const std::string& term(TermId id) const { return terms_.at(id); }
    [[nodiscard]] std::span<const Posting> postings(TermId id) const { return postings_.at(id); }
    [[nodiscard]] std::uint32_t doc_freq(TermId id) const
    {
        return static_cast<std::uint32_t>(postings_.at(id).size());
    }
    [[nodiscard]] std::uint64_t coll_freq(TermId id) const { return coll_freq_.at(id); }

    /// Term frequency of `id` in `doc` (binary search over the posting list).
    [[nodiscard]] std::uint32_t tf(TermId id, DocOrdinal doc) const;

    [[nodiscard]] std::uint32_t doc_len(DocOrdinal doc) const { return doc_len_.at(doc); }
    [[nodiscard]] const std::string& doc_id(DocOrdinal doc) const { return doc_ids_.at(doc); }
    [[nodiscard]] std::optional<DocOrdinal> ordinal(std::string_view doc_id) const;
    [[nodiscard]] const std::vector<std::string>& doc_ids() const { return doc_ids_; }

    void save(std::ostream& out) const;
    static InvertedIndex load(std::istream& in);

    friend InvertedIndex build_index(std::span<const CleanDocument> docs, const TokenizerConfig& config);

  private:
    void rebuild_lookups();

    TokenizerConfig config_;
    std::vector<std::string> terms_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::uint64_t> coll_freq_;
    std::vector<std::uint32_t> doc_len_;
    std::vector<std::string> doc_ids_;
    std::uint64_t total_coll_tokens_ = 0;
    double avgdl_ = 0.0;

    std::unordered_map<std::string, TermId> term_lookup_;
    std::unordered_map<std::string, DocOrdinal> doc_lookup_;
};

/// Tokenizes every document's full text with `config` and builds the index.
/// Doc ordinals follow input order. Throws DataError on a duplicate id.
InvertedIndex build_index(std::span<const CleanDocument> docs, const TokenizerConfig& config);

}  // namespace legalir
