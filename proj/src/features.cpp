#include "legalir/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "legalir/parallel.hpp"

namespace legalir {

void FeatureSchema::validate() const
{
    if (names.empty()) {
        throw UsageError("feature schema '" + name + "' has no features");
    }
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (n.empty() || !seen.insert(n).second) {
            throw UsageError("feature schema '" + name + "' has an empty or repeated feature name '" + n + "'");
        }
    }
}

FeatureSchema FeatureSchema::task1_v1()
{
    return {"task1_v1",
            {"query_length", "candidate_length", "query_ref_num", "doc_ref_num", "BM25", "BM25_rank", "QLD",
             "QLD_rank", "BM25_ngram", "BM25_ngram_rank", "SAILER", "SAILER_rank", "DELTA", "DELTA_rank"}};
}

FeatureSchema FeatureSchema::task3_v1()
{
    return {"task3_v1",
            {"query_length", "article_length", "BM25", "QLD", "BERT", "RoBERTa", "LEGALBERT", "monoT5_large",
             "monoT5_3B"}};
}

FeatureSchema FeatureSchema::resolve(std::string_view name, const std::vector<std::string>& custom_names)
{
    FeatureSchema schema;
    if (name == "task1_v1") {
        schema = task1_v1();
    } else if (name == "task3_v1") {
        schema = task3_v1();
    } else {
        schema = {std::string(name), custom_names};
    }
    schema.validate();
    return schema;
}

ExternalScoreFile ExternalScoreFile::load(std::string name, const io::fs::path& path)
{
    return {std::move(name), path.string(), io::read_score_dump(path)};
}

std::map<std::string, std::size_t> rank_feature(const ScoredList& list)
{
    std::map<std::string, std::size_t> ranks;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        ranks.emplace(list.entries[i].doc_id, i + 1);
    }
    return ranks;
}

namespace {

enum class Source { query_length, candidate_length, query_refs, candidate_refs, score, rank };

struct FeatureSource {
    Source kind;
    /// Index into the scored-source table for score/rank features.
    std::size_t scored = 0;
};

/// Per-query view of one scored source (internal scorer or external file).
struct QueryScores {
    std::map<std::string, double> score;
    std::map<std::string, std::size_t> rank;
    std::size_t length = 0;
};

struct ScoredSource {
    std::string name;
    std::map<std::string, QueryScores> by_query;
};

QueryScores view_of(const ScoredList& list)
{
    QueryScores qs;
    for (const auto& e : list.entries) {
        qs.score.emplace(e.doc_id, e.score);
    }
    qs.rank = rank_feature(list);
    qs.length = list.entries.size();
    return qs;
}

std::string_view strip_rank_suffix(std::string_view name)
{
    constexpr std::string_view suffix = "_rank";
    if (name.size() > suffix.size() && name.substr(name.size() - suffix.size()) == suffix) {
        return name.substr(0, name.size() - suffix.size());
    }
    return {};
}

}  // namespace

FeatureTable assemble(const DocumentMap& queries, const DocumentMap& candidates, const InternalScores& internal,
                      const std::vector<ExternalScoreFile>& externals, const FeatureSchema& schema,
                      unsigned threads)
{
    schema.validate();

    std::vector<ScoredSource> sources;
    std::map<std::string, std::size_t> source_index;
    for (const auto& [name, runs] : internal) {
        ScoredSource src{name, {}};
        for (const auto& [qid, list] : runs) {
            src.by_query.emplace(qid, view_of(list));
        }
        source_index.emplace(name, sources.size());
        sources.push_back(std::move(src));
    }
    for (const auto& ext : externals) {
        if (source_index.contains(ext.name)) {
            throw UsageError("score source '" + ext.name + "' given more than once");
        }
        ScoredSource src{ext.name, {}};
        for (const auto& [qid, list] : io::to_runs(ext.scores)) {
            src.by_query.emplace(qid, view_of(list));
        }
        source_index.emplace(ext.name, sources.size());
        sources.push_back(std::move(src));
    }

    std::vector<FeatureSource> plan;
    for (const auto& name : schema.names) {
        if (name == "query_length") {
            plan.push_back({Source::query_length});
        } else if (name == "candidate_length" || name == "article_length") {
            plan.push_back({Source::candidate_length});
        } else if (name == "query_ref_num") {
            plan.push_back({Source::query_refs});
        } else if (name == "doc_ref_num") {
            plan.push_back({Source::candidate_refs});
        } else if (auto it = source_index.find(name); it != source_index.end()) {
            plan.push_back({Source::score, it->second});
        } else if (auto base = strip_rank_suffix(name);
                   !base.empty() && source_index.contains(std::string(base))) {
            plan.push_back({Source::rank, source_index.at(std::string(base))});
        } else {
            throw DataError("feature '" + name + "' has no score source");
        }
    }

    // Candidate set per query: union over internal lists.
    std::map<std::string, std::set<std::string>> pairs;
    for (const auto& [name, runs] : internal) {
        for (const auto& [qid, list] : runs) {
            if (!queries.contains(qid)) {
                throw DataError("scores for '" + name + "' reference unknown query '" + qid + "'");
            }
            auto& cands = pairs[qid];
            for (const auto& e : list.entries) {
                cands.insert(e.doc_id);
            }
        }
    }

    std::vector<const std::pair<const std::string, std::set<std::string>>*> work;
    for (const auto& entry : pairs) {
        work.push_back(&entry);
    }
    std::vector<std::vector<FeatureRow>> per_query(work.size());

    parallel_for(work.size(), threads, [&](std::size_t w) {
        const auto& [qid, cands] = *work[w];
        const auto& query = queries.at(qid);
        std::vector<const QueryScores*> views(sources.size(), nullptr);
        for (std::size_t s = 0; s < sources.size(); ++s) {
            auto it = sources[s].by_query.find(qid);
            if (it != sources[s].by_query.end()) {
                views[s] = &it->second;
            }
        }
        auto& rows = per_query[w];
        rows.reserve(cands.size());
        for (const auto& cid : cands) {
            auto cit = candidates.find(cid);
            if (cit == candidates.end()) {
                throw DataError("scores reference unknown candidate '" + cid + "' for query '" + qid + "'");
            }
            const auto& cand = cit->second;
            FeatureRow row{qid, cid, {}, std::nullopt};
            row.values.reserve(plan.size());
            for (const auto& f : plan) {
                double v = 0.0;
                switch (f.kind) {
                case Source::query_length:
                    v = static_cast<double>(query.token_length);
                    break;
                case Source::candidate_length:
                    v = static_cast<double>(cand.token_length);
                    break;
                case Source::query_refs:
                    v = static_cast<double>(query.placeholder_count);
                    break;
                case Source::candidate_refs:
                    v = static_cast<double>(cand.placeholder_count);
                    break;
                case Source::score:
                    if (const auto* view = views[f.scored]) {
                        auto it = view->score.find(cid);
                        v = it == view->score.end() ? 0.0 : it->second;
                    }
                    break;
                case Source::rank: {
                    const auto* view = views[f.scored];
                    // A query absent from the source ranks every candidate past its own candidate set.
                    std::size_t len = view ? view->length : cands.size();
                    std::size_t rank = missing_rank(len);
                    if (view) {
                        if (auto it = view->rank.find(cid); it != view->rank.end()) {
                            rank = it->second;
                        }
                    }
                    v = static_cast<double>(rank);
                    break;
                }
                }
                if (!std::isfinite(v)) {
                    throw DataError("non-finite feature value for (" + qid + ", " + cid + ")");
                }
                row.values.push_back(v);
            }
            rows.push_back(std::move(row));
        }
    });

    FeatureTable table{schema, {}};
    for (auto& rows : per_query) {
        for (auto& r : rows) {
            table.rows.push_back(std::move(r));
        }
    }
    return table;
}

LabelResult attach_labels(FeatureTable table, const QrelSet& qrels)
{
    std::set<std::pair<std::string, std::string>> present;
    for (auto& row : table.rows) {
        auto it = qrels.find(row.query_id);
        row.label = (it != qrels.end() && it->second.contains(row.candidate_id)) ? 1 : 0;
        present.emplace(row.query_id, row.candidate_id);
    }
    std::size_t unmatched = 0;
    for (const auto& [qid, rel] : qrels) {
        for (const auto& d : rel) {
            unmatched += present.contains({qid, d}) ? 0 : 1;
        }
    }
    return {std::move(table), unmatched};
}

void write_feature_table(std::ostream& out, const FeatureTable& table)
{
    out << "query_id\tcandidate_id\tlabel";
    for (const auto& n : table.schema.names) {
        out << '\t' << n;
    }
    out << '\n';
    for (const auto& row : table.rows) {
        out << row.query_id << '\t' << row.candidate_id << '\t';
        if (row.label) {
            out << *row.label;
        } else {
            out << '-';
        }
        for (double v : row.values) {
            out << '\t' << io::format_double(v);
        }
        out << '\n';
    }
}

FeatureTable read_feature_table(std::istream& in, std::string_view source)
{
    auto where = [&](std::size_t line_no) { return std::string(source) + ":" + std::to_string(line_no); };
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(std::string(source) + ": empty feature table");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    auto header = io::split_tabs(line);
    if (header.size() < 4 || header[0] != "query_id" || header[1] != "candidate_id" || header[2] != "label") {
        throw DataError(where(1) + ": bad feature table header");
    }
    std::vector<std::string> names(header.begin() + 3, header.end());
    FeatureTable table;
    if (names == FeatureSchema::task1_v1().names) {
        table.schema = FeatureSchema::task1_v1();
    } else if (names == FeatureSchema::task3_v1().names) {
        table.schema = FeatureSchema::task3_v1();
    } else {
        table.schema = {"custom", names};
    }
    table.schema.validate();

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto fields = io::split_tabs(line);
        if (fields.size() != names.size() + 3) {
            throw DataError(where(line_no) + ": expected " + std::to_string(names.size() + 3) + " columns");
        }
        FeatureRow row{std::string(fields[0]), std::string(fields[1]), {}, std::nullopt};
        if (fields[2] == "1") {
            row.label = 1;
        } else if (fields[2] == "0") {
            row.label = 0;
        } else if (fields[2] != "-") {
            throw DataError(where(line_no) + ": label must be 0, 1 or -");
        }
        for (std::size_t k = 3; k < fields.size(); ++k) {
            row.values.push_back(io::parse_double(fields[k], where(line_no)));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

FeatureTable read_feature_table(const io::fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    return read_feature_table(in, path.string());
}

}  // namespace legalir
