#include "legalir/common.hpp"

#include <algorithm>

namespace legalir {

void ScoredList::sort()
{
    std::sort(entries.begin(), entries.end(), ranks_before);
}

bool ScoredList::is_sorted() const
{
    for (size_t i = 1; i < entries.size(); ++i) {
        if (!ranks_before(entries[i - 1], entries[i])) {
            return false;
        }
    }
    return true;
}

ScoredList make_scored_list(std::string query_id, std::vector<ScoredDoc> entries)
{
    ScoredList list{std::move(query_id), std::move(entries)};
    list.sort();
    std::vector<const std::string*> ids;
    ids.reserve(list.entries.size());
    for (const auto& e : list.entries) {
        ids.push_back(&e.doc_id);
    }
    std::sort(ids.begin(), ids.end(), [](auto* a, auto* b) { return *a < *b; });
    auto dup = std::adjacent_find(ids.begin(), ids.end(), [](auto* a, auto* b) { return *a == *b; });
    if (dup != ids.end()) {
        throw DataError("duplicate document '" + **dup + "' in list for query '" + list.query_id + "'");
    }
    return list;
}

}  // namespace legalir
