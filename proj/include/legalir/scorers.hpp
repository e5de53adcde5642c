#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "legalir/common.hpp"
#include "legalir/index.hpp"
#include "legalir/ingest.hpp"

namespace legalir {

struct Bm25Params {
    double k1 = 3.0;
    double b = 1.0;

    void validate() const;

    /// Case-retrieval feature setting.
    static constexpr Bm25Params case_feature() { return {3.0, 1.0}; }
    /// Statute-retrieval setting.
    static constexpr Bm25Params statute() { return {0.99, 0.75}; }
};

struct QldParams {
    double mu = 2000.0;

    void validate() const;
};

enum class ScorerKind { bm25, qld, bm25_ngram };

std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view name);

/// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
double bm25_idf(std::size_t num_docs, std::size_t doc_freq);

/// BM25 of `doc` against the query tokens. Repeated query tokens contribute
/// once per occurrence. Throws DataError for an unknown ordinal.
double bm25_score(const InvertedIndex& index, std::span<const std::string> query_terms, DocOrdinal doc,
                  const Bm25Params& params);

/// Dirichlet-smoothed query log-likelihood without the per-query constant
/// sum(ln p(q_i|C)): sum_i ln((tf_i + mu * p_i) / (|d| + mu)). Query tokens
/// that never occur in the collection are skipped.
double qld_score(const InvertedIndex& index, std::span<const std::string> query_terms, DocOrdinal doc,
                 const QldParams& params);

struct ScorerParams {
    Bm25Params bm25;
    QldParams qld;
};

/// Scores every document in `index` for `query`, tokenized with the index's
/// own tokenizer configuration. `bm25_ngram` is BM25 over whatever index is
/// passed (normally one built with an n-gram range).
ScoredList score_all(const InvertedIndex& index, const CleanDocument& query, ScorerKind kind,
                     const ScorerParams& params);

/// Same as score_all, from pre-tokenized query terms.
ScoredList score_terms(const InvertedIndex& index, std::string query_id,
                       std::span<const std::string> query_terms, ScorerKind kind, const ScorerParams& params);

ScoredList top_k(const ScoredList& list, std::size_t k);

}  // namespace legalir
