#include "legalir/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace legalir {

void Bm25Params::validate() const
{
    if (!(k1 >= 0.0) || !(b >= 0.0 && b <= 1.0)) {
        throw UsageError("BM25 parameters out of range (k1 >= 0, 0 <= b <= 1)");
    }
}

void QldParams::validate() const
{
    if (!(mu > 0.0) || !std::isfinite(mu)) {
        throw UsageError("QLD mu must be positive");
    }
}

std::string_view to_string(ScorerKind kind)
{
    switch (kind) {
    case ScorerKind::bm25:
        return "bm25";
    case ScorerKind::qld:
        return "qld";
    case ScorerKind::bm25_ngram:
        return "bm25_ngram";
    }
    return "?";
}

ScorerKind parse_scorer_kind(std::string_view name)
{
    if (name == "bm25") {
        return ScorerKind::bm25;
    }
    if (name == "qld") {
        return ScorerKind::qld;
    }
    if (name == "bm25_ngram") {
        return ScorerKind::bm25_ngram;
    }
    throw UsageError("unknown scorer '" + std::string(name) + "'");
}

double bm25_idf(std::size_t num_docs, std::size_t doc_freq)
{
    double n = static_cast<double>(num_docs);
    double df = static_cast<double>(doc_freq);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

namespace {

void check_doc(const InvertedIndex& index, DocOrdinal doc)
{
    if (doc >= index.num_docs()) {
        throw DataError("unknown document ordinal " + std::to_string(doc));
    }
}

double length_norm(const InvertedIndex& index, DocOrdinal doc, const Bm25Params& p)
{
    double rel = index.avgdl() > 0.0 ? index.doc_len(doc) / index.avgdl() : 0.0;
    return p.k1 * (1.0 - p.b + p.b * rel);
}

/// Query tokens resolved to term ids with their multiplicity, in term-id order.
std::vector<std::pair<TermId, std::size_t>> query_term_counts(const InvertedIndex& index,
                                                              std::span<const std::string> terms)
{
    std::map<TermId, std::size_t> counts;
    for (const auto& t : terms) {
        if (auto id = index.term_id(t)) {
            ++counts[*id];
        }
    }
    return {counts.begin(), counts.end()};
}

}  // namespace

double bm25_score(const InvertedIndex& index, std::span<const std::string> query_terms, DocOrdinal doc,
                  const Bm25Params& params)
{
    check_doc(index, doc);
    double norm = length_norm(index, doc, params);
    double score = 0.0;
    for (auto [id, qtf] : query_term_counts(index, query_terms)) {
        double tf = index.tf(id, doc);
        if (tf == 0.0) {
            continue;
        }
        double w = bm25_idf(index.num_docs(), index.doc_freq(id)) * tf * (params.k1 + 1.0) / (tf + norm);
        score += static_cast<double>(qtf) * w;
    }
    return score;
}

double qld_score(const InvertedIndex& index, std::span<const std::string> query_terms, DocOrdinal doc,
                 const QldParams& params)
{
    check_doc(index, doc);
    double total = static_cast<double>(index.total_coll_tokens());
    double denom = std::log(index.doc_len(doc) + params.mu);
    double score = 0.0;
    for (auto [id, qtf] : query_term_counts(index, query_terms)) {
        double p = static_cast<double>(index.coll_freq(id)) / total;
        double tf = index.tf(id, doc);
        score += static_cast<double>(qtf) * (std::log(tf + params.mu * p) - denom);
    }
    return score;
}

ScoredList score_terms(const InvertedIndex& index, std::string query_id,
                       std::span<const std::string> query_terms, ScorerKind kind, const ScorerParams& params)
{
    const std::size_t n = index.num_docs();
    auto terms = query_term_counts(index, query_terms);
    std::vector<double> acc(n, 0.0);

    if (kind == ScorerKind::qld) {
        params.qld.validate();
        const double mu = params.qld.mu;
        const double total = static_cast<double>(index.total_coll_tokens());
        double query_len = 0.0;
        double smoothed_floor = 0.0;
        for (auto [id, qtf] : terms) {
            double p = static_cast<double>(index.coll_freq(id)) / total;
            query_len += static_cast<double>(qtf);
            smoothed_floor += static_cast<double>(qtf) * std::log(mu * p);
            // Documents containing the term gain ln((tf + mu p) / (mu p)).
            for (const auto& post : index.postings(id)) {
                acc[post.doc] += static_cast<double>(qtf) * (std::log(post.tf + mu * p) - std::log(mu * p));
            }
        }
        for (DocOrdinal d = 0; d < n; ++d) {
            acc[d] += smoothed_floor - query_len * std::log(index.doc_len(d) + mu);
        }
    } else {
        params.bm25.validate();
        const auto& p = params.bm25;
        std::vector<double> norm(n);
        for (DocOrdinal d = 0; d < n; ++d) {
            norm[d] = length_norm(index, d, p);
        }
        for (auto [id, qtf] : terms) {
            double idf = bm25_idf(n, index.doc_freq(id));
            for (const auto& post : index.postings(id)) {
                double tf = post.tf;
                acc[post.doc] += static_cast<double>(qtf) * (idf * tf * (p.k1 + 1.0) / (tf + norm[post.doc]));
            }
        }
    }

    ScoredList list;
    list.query_id = std::move(query_id);
    list.entries.reserve(n);
    for (DocOrdinal d = 0; d < n; ++d) {
        list.entries.push_back({index.doc_id(d), acc[d]});
    }
    list.sort();
    return list;
}

ScoredList score_all(const InvertedIndex& index, const CleanDocument& query, ScorerKind kind,
                     const ScorerParams& params)
{
    auto terms = tokenize(query.full_text(), index.config());
    return score_terms(index, query.id, terms, kind, params);
}

ScoredList top_k(const ScoredList& list, std::size_t k)
{
    ScoredList out;
    out.query_id = list.query_id;
    auto n = std::min(k, list.entries.size());
    out.entries.assign(list.entries.begin(), list.entries.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

}  // namespace legalir
