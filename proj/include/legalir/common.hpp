#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace legalir {

/// Malformed or inconsistent input data (bad file, duplicate id, schema mismatch).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments supplied by the caller.
class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Ranking order used everywhere: score descending, ties by ascending id.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b)
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.doc_id < b.doc_id;
}

/// Per-query ranked result list.
struct ScoredList {
    std::string query_id;
    std::vector<ScoredDoc> entries;

    void sort();
    [[nodiscard]] bool is_sorted() const;

    friend bool operator==(const ScoredList&, const ScoredList&) = default;
};

/// Query id -> ranked list. Iteration order is ascending query id.
using RunSet = std::map<std::string, ScoredList>;

/// Query id -> set of relevant document ids.
using QrelSet = std::map<std::string, std::set<std::string>>;

/// Builds a sorted list from unsorted entries; rejects duplicate doc ids.
ScoredList make_scored_list(std::string query_id, std::vector<ScoredDoc> entries);

}  // namespace legalir
