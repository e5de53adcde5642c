#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "legalir/common.hpp"
#include "legalir/ingest.hpp"

namespace legalir {

/// Parameters of the synthetic case-retrieval corpus.
struct SyntheticSpec {
    std::size_t num_queries = 100;
    std::size_t num_candidates = 1000;
    /// Mean relevant candidates per query; each query gets floor(mean) plus one
    /// more with probability frac(mean).
    double relevant_per_query = 4.16;
    std::size_t vocab_size = 2000;
    /// Rare terms planted per query.
    std::size_t rare_terms_per_query = 8;
    /// Fraction of a query's rare terms carried by each relevant candidate.
    double overlap_strength = 0.4;
    std::uint64_t seed = 7;

    void validate() const;
};

/// In-memory corpus: raw texts for every document (queries included), the
/// query id list and the full relevance judgments.
struct SyntheticCorpus {
    std::vector<RawDocument> documents;
    std::vector<std::string> query_ids;
    QrelSet qrels;
    /// Noisy dense-model stand-ins keyed like a score dump.
    RunSet sailer;
    RunSet delta;
    QrelSet train;
    QrelSet valid;
    QrelSet test;
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

/// Writes corpus/, queries/, qrels_{train,valid,test,all}.json, sailer.tsv,
/// delta.tsv and a pipeline.cfg that points at them.
void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace legalir
