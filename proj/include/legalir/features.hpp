#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "legalir/common.hpp"
#include "legalir/ingest.hpp"
#include "legalir/io.hpp"

namespace legalir {

struct FeatureSchema {
    std::string name;
    std::vector<std::string> names;

    /// Throws UsageError on an empty or non-unique name list.
    void validate() const;
    [[nodiscard]] std::size_t size() const { return names.size(); }

    /// The fourteen case-retrieval features.
    static FeatureSchema task1_v1();
    /// The nine statute-retrieval features.
    static FeatureSchema task3_v1();
    /// Built-in schema by name, or a custom schema from explicit names.
    static FeatureSchema resolve(std::string_view name, const std::vector<std::string>& custom_names = {});

    friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

struct FeatureRow {
    std::string query_id;
    std::string candidate_id;
    std::vector<double> values;
    std::optional<int> label;

    friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

/// Rows ordered by (query_id, candidate_id).
struct FeatureTable {
    FeatureSchema schema;
    std::vector<FeatureRow> rows;

    friend bool operator==(const FeatureTable&, const FeatureTable&) = default;
};

/// Precomputed relevance scores from an outside model, keyed by the feature
/// name they populate (e.g. "SAILER").
struct ExternalScoreFile {
    std::string name;
    std::string path;
    io::PairScores scores;

    static ExternalScoreFile load(std::string name, const io::fs::path& path);
};

/// 1-based rank of every entry in a sorted list.
std::map<std::string, std::size_t> rank_feature(const ScoredList& list);

/// Rank given to candidates missing from a list of `list_length` entries.
inline std::size_t missing_rank(std::size_t list_length)
{
    return list_length + 1;
}

using DocumentMap = std::map<std::string, CleanDocument>;
/// Internal scorer output keyed by feature name ("BM25", "QLD", "BM25_ngram").
using InternalScores = std::map<std::string, RunSet>;

/// One row per (query, candidate) pair found in any internal list. Score
/// features missing for a pair are 0.0 and their rank is list length + 1.
/// Throws DataError when a pair references an unknown document or a schema
/// feature has no source.
FeatureTable assemble(const DocumentMap& queries, const DocumentMap& candidates, const InternalScores& internal,
                      const std::vector<ExternalScoreFile>& externals, const FeatureSchema& schema,
                      unsigned threads = 1);

struct LabelResult {
    FeatureTable table;
    /// Relevant (query, doc) pairs in qrels that have no row in the table.
    std::size_t unmatched_qrels = 0;
};

/// label = 1 iff the pair is in qrels, else 0.
LabelResult attach_labels(FeatureTable table, const QrelSet& qrels);

/// Header `query_id candidate_id label <names...>`; unset labels are written as "-".
void write_feature_table(std::ostream& out, const FeatureTable& table);
FeatureTable read_feature_table(std::istream& in, std::string_view source);
FeatureTable read_feature_table(const io::fs::path& path);

}  // namespace legalir
