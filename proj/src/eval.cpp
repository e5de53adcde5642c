#include "legalir/eval.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace legalir {

namespace {

double ratio(std::size_t num, std::size_t den, bool& zero_flag)
{
    if (den == 0) {
        zero_flag = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

const std::vector<ScoredDoc>& entries_for(const RunSet& runs, const std::string& qid)
{
    static const std::vector<ScoredDoc> empty;
    auto it = runs.find(qid);
    return it == runs.end() ? empty : it->second.entries;
}

QueryMetrics count_query(const std::string& qid, const std::vector<ScoredDoc>& retrieved,
                         const std::set<std::string>& relevant)
{
    QueryMetrics q;
    q.query_id = qid;
    for (const auto& e : retrieved) {
        if (relevant.contains(e.doc_id)) {
            ++q.tp;
        } else {
            ++q.fp;
        }
    }
    q.fn = relevant.size() - q.tp;
    return q;
}

std::size_t unjudged(const RunSet& runs, const QrelSet& qrels)
{
    return static_cast<std::size_t>(
        std::count_if(runs.begin(), runs.end(), [&](const auto& kv) { return !qrels.contains(kv.first); }));
}

}  // namespace

double f_beta(double precision, double recall, double beta)
{
    double b2 = beta * beta;
    double den = b2 * precision + recall;
    return den == 0.0 ? 0.0 : (1.0 + b2) * precision * recall / den;
}

MetricReport micro_prf1(const RunSet& runs, const QrelSet& qrels)
{
    MetricReport r;
    r.mode = "micro_f1";
    bool unused = false;
    for (const auto& [qid, rel] : qrels) {
        auto q = count_query(qid, entries_for(runs, qid), rel);
        q.precision = ratio(q.tp, q.tp + q.fp, unused);
        q.recall = ratio(q.tp, q.tp + q.fn, unused);
        r.tp += q.tp;
        r.fp += q.fp;
        r.fn += q.fn;
        r.per_query.push_back(q);
    }
    r.precision = ratio(r.tp, r.tp + r.fp, r.zero_denominator);
    r.recall = ratio(r.tp, r.tp + r.fn, r.zero_denominator);
    if (r.precision + r.recall == 0.0) {
        r.zero_denominator = true;
    }
    r.f_measure = f_beta(r.precision, r.recall, 1.0);
    r.unjudged_queries = unjudged(runs, qrels);
    return r;
}

MetricReport macro_prf2(const RunSet& runs, const QrelSet& qrels)
{
    MetricReport r;
    r.mode = "macro_f2";
    double p_sum = 0.0;
    double r_sum = 0.0;
    for (const auto& [qid, rel] : qrels) {
        auto q = count_query(qid, entries_for(runs, qid), rel);
        q.precision = ratio(q.tp, q.tp + q.fp, r.zero_denominator);
        q.recall = ratio(q.tp, q.tp + q.fn, r.zero_denominator);
        r.tp += q.tp;
        r.fp += q.fp;
        r.fn += q.fn;
        p_sum += q.precision;
        r_sum += q.recall;
        r.per_query.push_back(q);
    }
    if (!qrels.empty()) {
        r.precision = p_sum / static_cast<double>(qrels.size());
        r.recall = r_sum / static_cast<double>(qrels.size());
    } else {
        r.zero_denominator = true;
    }
    r.f_measure = f_beta(r.precision, r.recall, 2.0);
    r.unjudged_queries = unjudged(runs, qrels);
    return r;
}

double mean_average_precision(const RunSet& runs, const QrelSet& qrels)
{
    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& [qid, rel] : qrels) {
        if (rel.empty()) {
            continue;
        }
        std::size_t hits = 0;
        double ap = 0.0;
        const auto& entries = entries_for(runs, qid);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (rel.contains(entries[i].doc_id)) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(i + 1);
            }
        }
        total += ap / static_cast<double>(rel.size());
        ++counted;
    }
    return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

double recall_at_k(const RunSet& runs, const QrelSet& qrels, std::size_t k)
{
    if (k == 0) {
        throw UsageError("recall@k needs k >= 1");
    }
    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& [qid, rel] : qrels) {
        if (rel.empty()) {
            continue;
        }
        const auto& entries = entries_for(runs, qid);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < std::min(k, entries.size()); ++i) {
            hits += rel.contains(entries[i].doc_id) ? 1 : 0;
        }
        total += static_cast<double>(hits) / static_cast<double>(rel.size());
        ++counted;
    }
    return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

EvalSummary evaluate_all(const RunSet& runs, const QrelSet& qrels)
{
    return {
        micro_prf1(runs, qrels),
        macro_prf2(runs, qrels),
        mean_average_precision(runs, qrels),
        recall_at_k(runs, qrels, 5),
        recall_at_k(runs, qrels, 10),
        recall_at_k(runs, qrels, 30),
    };
}

namespace {

nlohmann::json report_json(const MetricReport& r)
{
    nlohmann::json per_query = nlohmann::json::array();
    for (const auto& q : r.per_query) {
        per_query.push_back({{"query_id", q.query_id},
                             {"precision", q.precision},
                             {"recall", q.recall},
                             {"tp", q.tp},
                             {"fp", q.fp},
                             {"fn", q.fn}});
    }
    return {
        {"precision", r.precision}, {"recall", r.recall},
        {"f_measure", r.f_measure}, {"tp", r.tp},
        {"fp", r.fp},               {"fn", r.fn},
        {"zero_denominator", r.zero_denominator},
        {"unjudged_queries", r.unjudged_queries},
        {"per_query", std::move(per_query)},
    };
}

}  // namespace

void write_eval_report(std::ostream& out, const EvalSummary& s)
{
    nlohmann::json doc = {
        {"micro_f1", report_json(s.micro)},
        {"macro_f2", report_json(s.macro)},
        {"map", s.map},
        {"recall_at_5", s.recall_at_5},
        {"recall_at_10", s.recall_at_10},
        {"recall_at_30", s.recall_at_30},
    };
    out << doc.dump(1) << '\n';
}

}  // namespace legalir
