#include "legalir/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <tuple>
#include <unordered_map>

#include "legalir/io.hpp"
#include "legalir/parallel.hpp"

namespace legalir {

void CutoffParams::validate() const
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw UsageError("cutoff p must be in [0, 1]");
    }
    if (h < 1) {
        throw UsageError("cutoff h must be >= 1");
    }
    if (l > h) {
        throw UsageError("cutoff l must not exceed h");
    }
}

void DuplicateParams::validate() const
{
    if (t < 1) {
        throw UsageError("duplicate t must be >= 1");
    }
}

void ThresholdParams::validate() const
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw UsageError("threshold p must be in [0, 1]");
    }
}

namespace {

template <typename Keep>
RunSet filter_entries(const RunSet& runs, Keep keep)
{
    RunSet out;
    for (const auto& [qid, list] : runs) {
        ScoredList& dst = out[qid];
        dst.query_id = list.query_id;
        for (const auto& e : list.entries) {
            if (keep(qid, e)) {
                dst.entries.push_back(e);
            }
        }
    }
    return out;
}

std::optional<Date> lookup_date(const DateMap& dates, const std::string& id)
{
    auto it = dates.find(id);
    return it == dates.end() ? std::nullopt : it->second;
}

}  // namespace

RunSet filter_by_trial_date(const RunSet& runs, const DateMap& dates)
{
    return filter_entries(runs, [&](const std::string& qid, const ScoredDoc& e) {
        auto qdate = lookup_date(dates, qid);
        if (!qdate) {
            return true;
        }
        auto cdate = lookup_date(dates, e.doc_id);
        return !cdate || *cdate <= *qdate;
    });
}

RunSet filter_query_cases(const RunSet& runs, const std::set<std::string>& query_ids)
{
    return filter_entries(runs, [&](const std::string&, const ScoredDoc& e) { return !query_ids.contains(e.doc_id); });
}

DuplicateFilterResult filter_duplicates(const RunSet& runs, const DuplicateParams& params)
{
    params.validate();
    DuplicateFilterResult result;
    if (params.t == DuplicateParams::unlimited) {
        result.runs = runs;
        return result;
    }
    std::unordered_map<std::string, std::size_t> kept_in;
    for (const auto& [qid, list] : runs) {
        ScoredList& dst = result.runs[qid];
        dst.query_id = list.query_id;
        for (const auto& e : list.entries) {
            std::size_t& count = kept_in[e.doc_id];
            if (count < params.t) {
                ++count;
                dst.entries.push_back(e);
            }
        }
        if (dst.entries.empty() && !list.entries.empty()) {
            // Refilled entries do not count towards t.
            std::size_t n = std::min(params.s, list.entries.size());
            dst.entries.assign(list.entries.begin(), list.entries.begin() + static_cast<std::ptrdiff_t>(n));
            auto& marks = result.refilled[qid];
            for (const auto& e : dst.entries) {
                marks.insert(e.doc_id);
            }
        }
    }
    return result;
}

CutoffResult dynamic_cutoff_detailed(const RunSet& runs, const CutoffParams& params)
{
    params.validate();
    CutoffResult result;
    for (const auto& [qid, list] : runs) {
        ScoredList& dst = result.runs[qid];
        dst.query_id = list.query_id;
        const auto& src = list.entries;
        if (src.empty()) {
            continue;
        }
        double threshold = params.p * src.front().score;
        std::size_t above = 0;
        while (above < src.size() && src[above].score > threshold) {
            ++above;
        }
        std::size_t keep = std::min(above, params.h);
        std::size_t floor = std::min(params.l, src.size());
        if (keep < floor) {
            result.forced[qid] = floor - keep;
            keep = floor;
        }
        dst.entries.assign(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    return result;
}

RunSet dynamic_cutoff(const RunSet& runs, const CutoffParams& params)
{
    return dynamic_cutoff_detailed(runs, params).runs;
}

RunSet threshold_cutoff(const RunSet& runs, const ThresholdParams& params)
{
    params.validate();
    RunSet out;
    for (const auto& [qid, list] : runs) {
        ScoredList& dst = out[qid];
        dst.query_id = list.query_id;
        const auto& src = list.entries;
        if (src.empty()) {
            continue;
        }
        double threshold = params.p * src.front().score;
        std::size_t keep = 1;
        while (keep < src.size() && src[keep].score > threshold) {
            ++keep;
        }
        dst.entries.assign(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    return out;
}

std::string_view to_string(FilterStage stage)
{
    switch (stage) {
    case FilterStage::trial_date:
        return "trial_date";
    case FilterStage::query_cases:
        return "query_cases";
    case FilterStage::duplicates:
        return "duplicates";
    case FilterStage::cutoff:
        return "cutoff";
    }
    return "?";
}

FilterStage parse_filter_stage(std::string_view name)
{
    for (auto s : {FilterStage::trial_date, FilterStage::query_cases, FilterStage::duplicates, FilterStage::cutoff}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw UsageError("unknown filter stage: " + std::string(name));
}

std::vector<FilterStage> default_stage_order()
{
    return {FilterStage::trial_date, FilterStage::query_cases, FilterStage::duplicates, FilterStage::cutoff};
}

namespace {

RunSet apply_stage(const RunSet& runs, FilterStage stage, const PostprocessContext& ctx,
                   const PostprocessParams& params)
{
    switch (stage) {
    case FilterStage::trial_date:
        return filter_by_trial_date(runs, ctx.dates);
    case FilterStage::query_cases:
        return filter_query_cases(runs, ctx.query_ids);
    case FilterStage::duplicates:
        return filter_duplicates(runs, params.duplicates).runs;
    case FilterStage::cutoff:
        return dynamic_cutoff(runs, params.cutoff);
    }
    return runs;
}

RunSet apply_range(RunSet runs, const std::vector<FilterStage>& order, std::size_t from, std::size_t to,
                   const PostprocessContext& ctx, const PostprocessParams& params)
{
    for (std::size_t i = from; i < to; ++i) {
        runs = apply_stage(runs, order[i], ctx, params);
    }
    return runs;
}

void check_order(const std::vector<FilterStage>& order)
{
    std::set<FilterStage> seen;
    for (auto s : order) {
        if (!seen.insert(s).second) {
            throw UsageError("filter stage listed twice: " + std::string(to_string(s)));
        }
    }
}

}  // namespace

RunSet apply_postprocess(const RunSet& runs, const PostprocessContext& ctx, const PostprocessParams& params)
{
    check_order(params.order);
    params.cutoff.validate();
    params.duplicates.validate();
    return apply_range(runs, params.order, 0, params.order.size(), ctx, params);
}

std::string_view to_string(TuneMetric metric)
{
    return metric == TuneMetric::micro_f1 ? "micro_f1" : "macro_f2";
}

TuneMetric parse_tune_metric(std::string_view name)
{
    if (name == "micro_f1") {
        return TuneMetric::micro_f1;
    }
    if (name == "macro_f2") {
        return TuneMetric::macro_f2;
    }
    throw UsageError("unknown metric: " + std::string(name));
}

GridSpec GridSpec::defaults()
{
    GridSpec g;
    for (int i = 0; i <= 20; ++i) {
        g.p.push_back(i / 20.0);
    }
    for (std::size_t h = 1; h <= 10; ++h) {
        g.h.push_back(h);
    }
    for (std::size_t l = 0; l <= 4; ++l) {
        g.l.push_back(l);
    }
    g.t = {1, 2, 3};
    g.s = {0, 1, 2, 3};
    return g;
}

namespace {

// True when a should win over b at equal metric value.
bool preferred_on_tie(const GridPoint& a, const GridPoint& b)
{
    const auto& ca = a.cutoff;
    const auto& cb = b.cutoff;
    if (ca.h != cb.h) {
        return ca.h < cb.h;
    }
    if (ca.p != cb.p) {
        return ca.p > cb.p;
    }
    if (a.duplicates.t != b.duplicates.t) {
        return a.duplicates.t < b.duplicates.t;
    }
    if (a.duplicates.s != b.duplicates.s) {
        return a.duplicates.s < b.duplicates.s;
    }
    return ca.l < cb.l;
}

bool better(const GridPoint& a, const GridPoint& b)
{
    if (a.metrics.f_measure != b.metrics.f_measure) {
        return a.metrics.f_measure > b.metrics.f_measure;
    }
    return preferred_on_tie(a, b);
}

MetricReport score_point(const RunSet& runs, const QrelSet& qrels, TuneMetric metric)
{
    MetricReport r = metric == TuneMetric::micro_f1 ? micro_prf1(runs, qrels) : macro_prf2(runs, qrels);
    r.per_query.clear();
    return r;
}

template <typename T>
void require_nonempty(const std::vector<T>& v, const char* name)
{
    if (v.empty()) {
        throw UsageError(std::string("grid axis ") + name + " is empty");
    }
}

}  // namespace

GridSearchResult grid_search(const RunSet& validation_runs, const QrelSet& qrels, const PostprocessContext& ctx,
                             const GridSpec& grid, TuneMetric metric, const std::vector<FilterStage>& order,
                             unsigned threads)
{
    require_nonempty(grid.p, "p");
    require_nonempty(grid.h, "h");
    require_nonempty(grid.l, "l");
    require_nonempty(grid.t, "t");
    require_nonempty(grid.s, "s");
    check_order(order);

    std::vector<CutoffParams> cutoffs;
    for (double p : grid.p) {
        for (std::size_t h : grid.h) {
            for (std::size_t l : grid.l) {
                if (l > h) {
                    continue;
                }
                CutoffParams c{p, h, l};
                c.validate();
                cutoffs.push_back(c);
            }
        }
    }
    std::vector<DuplicateParams> dups;
    for (std::size_t t : grid.t) {
        for (std::size_t s : grid.s) {
            DuplicateParams d{t, s};
            d.validate();
            dups.push_back(d);
        }
    }
    if (cutoffs.empty()) {
        throw UsageError("grid has no point with l <= h");
    }

    // Stages before the first parametric one run once; between the two
    // parametric stages the result is cached per outer parameter.
    auto pos = [&](FilterStage s) {
        auto it = std::find(order.begin(), order.end(), s);
        return static_cast<std::size_t>(it - order.begin());
    };
    std::size_t dup_pos = pos(FilterStage::duplicates);
    std::size_t cut_pos = pos(FilterStage::cutoff);
    bool dup_outer = dup_pos <= cut_pos;
    std::size_t first = std::min(dup_pos, cut_pos);
    std::size_t second = std::min(std::max(dup_pos, cut_pos), order.size());
    first = std::min(first, order.size());

    PostprocessParams base;
    RunSet prefix = apply_range(validation_runs, order, 0, first, ctx, base);

    std::size_t n_outer = dup_outer ? dups.size() : cutoffs.size();
    std::size_t n_inner = dup_outer ? cutoffs.size() : dups.size();
    std::vector<std::vector<GridPoint>> slots(n_outer);
    parallel_for(n_outer, threads, [&](std::size_t i) {
        PostprocessParams pp;
        if (dup_outer) {
            pp.duplicates = dups[i];
        } else {
            pp.cutoff = cutoffs[i];
        }
        RunSet middle = apply_range(prefix, order, first, second, ctx, pp);
        auto& out = slots[i];
        out.reserve(n_inner);
        for (std::size_t j = 0; j < n_inner; ++j) {
            if (dup_outer) {
                pp.cutoff = cutoffs[j];
            } else {
                pp.duplicates = dups[j];
            }
            RunSet final_runs = apply_range(middle, order, second, order.size(), ctx, pp);
            out.push_back({pp.cutoff, pp.duplicates, score_point(final_runs, qrels, metric)});
        }
    });

    GridSearchResult result;
    result.table.reserve(cutoffs.size() * dups.size());
    for (auto& slot : slots) {
        std::move(slot.begin(), slot.end(), std::back_inserter(result.table));
    }
    std::sort(result.table.begin(), result.table.end(), [](const GridPoint& a, const GridPoint& b) {
        return std::tie(a.duplicates.t, a.duplicates.s, a.cutoff.p, a.cutoff.h, a.cutoff.l) <
               std::tie(b.duplicates.t, b.duplicates.s, b.cutoff.p, b.cutoff.h, b.cutoff.l);
    });
    result.best = result.table.front();
    for (const auto& point : result.table) {
        if (better(point, result.best)) {
            result.best = point;
        }
    }
    return result;
}

std::string tuning_report_row(const GridPoint& point)
{
    std::string row;
    row += io::format_double(point.cutoff.p);
    row += '\t' + std::to_string(point.cutoff.h);
    row += '\t' + std::to_string(point.cutoff.l);
    row += '\t' + std::to_string(point.duplicates.t);
    row += '\t' + std::to_string(point.duplicates.s);
    row += '\t' + io::format_fixed6(point.metrics.precision);
    row += '\t' + io::format_fixed6(point.metrics.recall);
    row += '\t' + io::format_fixed6(point.metrics.f_measure);
    return row;
}

void write_tuning_report(std::ostream& out, const GridSearchResult& result)
{
    out << "p\th\tl\tt\ts\tprecision\trecall\tf_measure\n";
    for (const auto& point : result.table) {
        out << tuning_report_row(point) << '\n';
    }
}

double multi_relevant_fraction(const QrelSet& qrels)
{
    if (qrels.empty()) {
        return 0.0;
    }
    auto multi = std::count_if(qrels.begin(), qrels.end(), [](const auto& kv) { return kv.second.size() >= 2; });
    return static_cast<double>(multi) / static_cast<double>(qrels.size());
}

ThresholdTuning tune_threshold(const RunSet& validation_runs, double target_fraction,
                               const std::vector<double>& p_grid, double tolerance)
{
    if (p_grid.empty()) {
        throw UsageError("threshold grid is empty");
    }
    ThresholdTuning best;
    best.target_fraction = target_fraction;
    double best_gap = std::numeric_limits<double>::infinity();
    for (double p : p_grid) {
        RunSet cut = threshold_cutoff(validation_runs, ThresholdParams{p});
        std::size_t multi = 0;
        for (const auto& [qid, list] : cut) {
            multi += list.entries.size() >= 2 ? 1 : 0;
        }
        double frac = cut.empty() ? 0.0 : static_cast<double>(multi) / static_cast<double>(cut.size());
        double gap = std::abs(frac - target_fraction);
        if (gap < best_gap || (gap == best_gap && p > best.p)) {
            best_gap = gap;
            best.p = p;
            best.achieved_fraction = frac;
        }
    }
    best.within_tolerance = best_gap <= tolerance;
    return best;
}

}  // namespace legalir
