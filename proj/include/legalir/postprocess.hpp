#pragma once

#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "legalir/common.hpp"
#include "legalir/eval.hpp"
#include "legalir/ingest.hpp"

namespace legalir {

/// Dynamic cut-off: keep scores above p * top score, at most h and at least l results.
struct CutoffParams {
    double p = 0.46;
    std::size_t h = 7;
    std::size_t l = 1;

    void validate() const;
};

/// A candidate may stay in at most t result lists; emptied lists are refilled with s entries.
struct DuplicateParams {
    std::size_t t = 1;
    std::size_t s = 2;

    static constexpr std::size_t unlimited = std::numeric_limits<std::size_t>::max();
    void validate() const;
};

struct ThresholdParams {
    double p = 0.0;

    void validate() const;
};

using DateMap = std::map<std::string, std::optional<Date>>;

/// Drops candidates dated strictly after their query. Queries or candidates
/// without a known date are left alone.
RunSet filter_by_trial_date(const RunSet& runs, const DateMap& dates);

RunSet filter_query_cases(const RunSet& runs, const std::set<std::string>& query_ids);

struct DuplicateFilterResult {
    RunSet runs;
    /// Entries put back by the refill step, per query.
    std::map<std::string, std::set<std::string>> refilled;
};

/// Sweeps queries in ascending id. A candidate already kept in t earlier lists
/// is dropped; a list left empty is refilled with its s best original entries.
DuplicateFilterResult filter_duplicates(const RunSet& runs, const DuplicateParams& params);

struct CutoffResult {
    RunSet runs;
    /// Number of entries per query kept only to satisfy the minimum l.
    std::map<std::string, std::size_t> forced;
};

CutoffResult dynamic_cutoff_detailed(const RunSet& runs, const CutoffParams& params);
RunSet dynamic_cutoff(const RunSet& runs, const CutoffParams& params);

/// Keeps entries scoring above p * top score; the top entry is always kept.
RunSet threshold_cutoff(const RunSet& runs, const ThresholdParams& params);

enum class FilterStage { trial_date, query_cases, duplicates, cutoff };

std::string_view to_string(FilterStage stage);
FilterStage parse_filter_stage(std::string_view name);

/// Default stage order: trial date, query cases, duplicates, cut-off.
std::vector<FilterStage> default_stage_order();

struct PostprocessContext {
    DateMap dates;
    std::set<std::string> query_ids;
};

struct PostprocessParams {
    CutoffParams cutoff;
    DuplicateParams duplicates;
    std::vector<FilterStage> order = default_stage_order();
};

RunSet apply_postprocess(const RunSet& runs, const PostprocessContext& ctx, const PostprocessParams& params);

enum class TuneMetric { micro_f1, macro_f2 };

std::string_view to_string(TuneMetric metric);
TuneMetric parse_tune_metric(std::string_view name);

struct GridSpec {
    std::vector<double> p;
    std::vector<std::size_t> h;
    std::vector<std::size_t> l;
    std::vector<std::size_t> t;
    std::vector<std::size_t> s;

    /// p in {0.00, 0.05, ..., 1.00}, h in 1..10, l in 0..4, t in 1..3, s in 0..3.
    static GridSpec defaults();
    [[nodiscard]] std::size_t size() const { return p.size() * h.size() * l.size() * t.size() * s.size(); }
};

struct GridPoint {
    CutoffParams cutoff;
    DuplicateParams duplicates;
    MetricReport metrics;
};

struct GridSearchResult {
    GridPoint best;
    /// Every evaluated point, ordered by (t, s, p, h, l).
    std::vector<GridPoint> table;
};

/// Exhaustive search; points with l > h are skipped. Ties on the metric are
/// broken towards smaller h, larger p, smaller t, smaller s, smaller l.
GridSearchResult grid_search(const RunSet& validation_runs, const QrelSet& qrels, const PostprocessContext& ctx,
                             const GridSpec& grid, TuneMetric metric,
                             const std::vector<FilterStage>& order = default_stage_order(), unsigned threads = 1);

/// Tab-separated: p h l t s precision recall f_measure.
void write_tuning_report(std::ostream& out, const GridSearchResult& result);
std::string tuning_report_row(const GridPoint& point);

struct ThresholdTuning {
    double p = 0.0;
    double target_fraction = 0.0;
    double achieved_fraction = 0.0;
    bool within_tolerance = false;
};

/// Fraction of queries in qrels with two or more relevant documents.
double multi_relevant_fraction(const QrelSet& qrels);

/// Picks p so that the fraction of validation queries returning two or more
/// results is closest to `target_fraction`; ties go to the larger p.
ThresholdTuning tune_threshold(const RunSet& validation_runs, double target_fraction,
                               const std::vector<double>& p_grid, double tolerance = 0.02);

}  // namespace legalir
