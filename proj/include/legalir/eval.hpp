#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "legalir/common.hpp"

namespace legalir {

struct QueryMetrics {
    std::string query_id;
    double precision = 0.0;
    double recall = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

struct MetricReport {
    /// "micro_f1" or "macro_f2".
    std::string mode;
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::vector<QueryMetrics> per_query;
    /// Set when any ratio had a zero denominator and was taken as 0.
    bool zero_denominator = false;
    /// Run queries ignored because they have no judgments.
    std::size_t unjudged_queries = 0;
};

/// The evaluated query set is the qrels key set; a judged query missing from
/// the run counts as an empty retrieval, an unjudged run query is ignored.
MetricReport micro_prf1(const RunSet& runs, const QrelSet& qrels);

/// Per-query P and R averaged over judged queries, F2 from the averaged values.
MetricReport macro_prf2(const RunSet& runs, const QrelSet& qrels);

double f_beta(double precision, double recall, double beta);

double mean_average_precision(const RunSet& runs, const QrelSet& qrels);

/// Macro average over judged queries of |relevant in top k| / |relevant|.
double recall_at_k(const RunSet& runs, const QrelSet& qrels, std::size_t k);

struct EvalSummary {
    MetricReport micro;
    MetricReport macro;
    double map = 0.0;
    double recall_at_5 = 0.0;
    double recall_at_10 = 0.0;
    double recall_at_30 = 0.0;
};

EvalSummary evaluate_all(const RunSet& runs, const QrelSet& qrels);
void write_eval_report(std::ostream& out, const EvalSummary& summary);

}  // namespace legalir
