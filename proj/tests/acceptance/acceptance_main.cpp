// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "legalir/eval.hpp"
#include "legalir/index.hpp"
#include "legalir/io.hpp"
#include "legalir/ltr.hpp"
#include "legalir/pipeline.hpp"
#include "legalir/postprocess.hpp"
#include "legalir/scorers.hpp"
#include "legalir/synth.hpp"
#include "oracles.hpp"
#include "planted.hpp"
#include "random_runs.hpp"

using namespace legalir;
namespace fs = std::filesystem;
using oracle::Tokens;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why)
    {
        if (pass) {
            detail = why;
        }
        pass = false;
    }
};

class Stopwatch {
public:
    [[nodiscard]] double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

CleanDocument doc(std::string id, std::string body)
{
    CleanDocument d;
    d.id = std::move(id);
    d.body = std::move(body);
    return d;
}

// ---------------------------------------------------------------- 1

Outcome scorer_oracles()
{
    Outcome out;
    Stopwatch clock;
    oracle::Gen gen(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Tokens> corpus;
        std::vector<CleanDocument> docs;
        for (std::size_t i = 0, n = gen.range(1, 20); i < n; ++i) {
            corpus.push_back(gen.words(gen.range(1, 30), 25));
            docs.push_back(doc("d" + std::to_string(100 + i), oracle::join(corpus.back())));
        }
        auto index = build_index(docs, TokenizerConfig::plain());
        Tokens q = gen.words(gen.range(1, 8), 30);
        ScorerParams p{{gen.real(0.0, 3.0), gen.real()}, {gen.real(1.0, 3000.0)}};
        auto query = doc("q", oracle::join(q));
        for (auto kind : {ScorerKind::bm25, ScorerKind::qld}) {
            auto list = score_all(index, query, kind, p);
            if (list.entries.size() != corpus.size()) {
                out.fail("score_all did not score every document");
            }
            for (const auto& e : list.entries) {
                std::size_t d = std::stoul(e.doc_id.substr(1)) - 100;
                double want = kind == ScorerKind::bm25 ? oracle::bm25(corpus, q, d, p.bm25.k1, p.bm25.b)
                                                       : oracle::qld(corpus, q, d, p.qld.mu);
                worst = std::max(worst, std::abs(e.score - want));
            }
        }
    }
    double secs = clock.seconds();
    if (worst > 1e-9) {
        out.fail(fmt("max deviation %.3g", worst));
    }
    if (secs >= 10.0) {
        out.fail(fmt("took %.1f s", secs));
    }
    if (out.pass) {
        out.detail = fmt("200 corpora, max deviation %.2g, %.2f s", worst, secs);
    }
    return out;
}

// ---------------------------------------------------------------- 2

RunSet runs_of(const std::map<std::string, std::vector<std::string>>& lists)
{
    RunSet runs;
    for (const auto& [qid, docs] : lists) {
        std::vector<ScoredDoc> entries;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            entries.push_back({docs[i], static_cast<double>(docs.size() - i)});
        }
        runs[qid] = make_scored_list(qid, entries);
    }
    return runs;
}

std::string four(double v)
{
    return fmt("%.4f", v);
}

Outcome metric_hand_checks()
{
    Outcome out;
    auto micro = micro_prf1(runs_of({{"q1", {"A", "B"}}, {"q2", {"D"}}}), {{"q1", {"A", "C"}}, {"q2", {"D"}}});
    if (micro.tp != 2 || micro.fp != 1 || micro.fn != 1 || four(micro.f_measure) != "0.6667") {
        out.fail("micro-F1 example gave " + four(micro.f_measure));
    }
    auto even = macro_prf2(runs_of({{"q1", {"A"}}, {"q2", {"B", "X"}}}), {{"q1", {"A"}}, {"q2", {"B", "C"}}});
    if (four(even.precision) != "0.7500" || four(even.recall) != "0.7500" || four(even.f_measure) != "0.7500") {
        out.fail("macro-F2 P=R=0.75 example gave " + four(even.f_measure));
    }
    auto skew = macro_prf2(runs_of({{"q1", {"A", "X"}}}), {{"q1", {"A"}}});
    if (four(skew.precision) != "0.5000" || four(skew.recall) != "1.0000" || four(skew.f_measure) != "0.8333") {
        out.fail("macro-F2 P=0.5 R=1 example gave " + four(skew.f_measure));
    }
    if (out.pass) {
        out.detail = "micro F1 " + four(micro.f_measure) + ", macro F2 " + four(even.f_measure) + " and " +
                     four(skew.f_measure);
    }
    return out;
}

// ---------------------------------------------------------------- 3

Outcome ngram_degeneracy()
{
    Outcome out;
    oracle::Gen gen(303);
    int corpora = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<CleanDocument> docs;
        for (std::size_t i = 0, n = gen.range(1, 40); i < n; ++i) {
            docs.push_back(doc("d" + std::to_string(i), oracle::join(gen.words(gen.range(0, 40), 30))));
        }
        auto plain = build_index(docs, TokenizerConfig::plain());
        auto ngram = build_index(docs, TokenizerConfig::ngram(1, 1));
        ScorerParams p{{gen.real(0.1, 3.0), gen.real()}, {}};
        for (int qn = 0; qn < 3; ++qn) {
            auto q = doc("q", oracle::join(gen.words(gen.range(1, 10), 35)));
            if (score_all(plain, q, ScorerKind::bm25, p) != score_all(ngram, q, ScorerKind::bm25_ngram, p)) {
                out.fail("lists differ on corpus " + std::to_string(trial));
            }
        }
        ++corpora;
    }
    if (out.pass) {
        out.detail = std::to_string(corpora) + " corpora x 3 queries, identical lists";
    }
    return out;
}

// ---------------------------------------------------------------- 4

/// One feature is label + N(0, 0.01), the rest are uniform noise.
FeatureTable ltr_table(std::mt19937_64& rng, std::size_t queries, std::size_t rows, std::size_t noise)
{
    FeatureTable t;
    t.schema = {"acceptance", {"signal"}};
    for (std::size_t f = 0; f < noise; ++f) {
        t.schema.names.push_back("noise" + std::to_string(f));
    }
    std::normal_distribution<double> jitter(0.0, 0.01);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (std::size_t q = 0; q < queries; ++q) {
        char qid[16];
        std::snprintf(qid, sizeof qid, "q%04zu", q);
        std::size_t positives = 1 + rng() % 4;
        for (std::size_t r = 0; r < rows; ++r) {
            char cid[16];
            std::snprintf(cid, sizeof cid, "c%03zu", r);
            int label = r < positives ? 1 : 0;
            FeatureRow row{qid, cid, {static_cast<double>(label) + jitter(rng)}, label};
            for (std::size_t f = 0; f < noise; ++f) {
                row.values.push_back(uniform(rng));
            }
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

/// Mean NDCG@k of the model's ranking over the given queries with a positive row.
double model_ndcg(const TreeEnsemble& model, const FeatureTable& table, const std::set<std::string>& queries,
                  std::size_t k)
{
    std::map<std::string, std::vector<std::pair<double, int>>> by_query;
    for (const auto& row : table.rows) {
        if (queries.contains(row.query_id)) {
            by_query[row.query_id].emplace_back(model.predict_row(row.values), *row.label);
        }
    }
    double total = 0.0;
    std::size_t n = 0;
    for (auto& [qid, scored] : by_query) {
        // Ties resolved pessimistically so a constant model earns no credit.
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        std::vector<int> labels;
        for (const auto& s : scored) {
            labels.push_back(s.second);
        }
        if (std::find(labels.begin(), labels.end(), 1) != labels.end()) {
            total += oracle::ndcg(labels, k);
            ++n;
        }
    }
    return n ? total / static_cast<double>(n) : 0.0;
}

/// Expected NDCG@k of a uniformly random ordering, by Monte Carlo.
double random_ndcg(const FeatureTable& table, const std::set<std::string>& queries, std::size_t k,
                   std::mt19937_64& rng)
{
    std::map<std::string, std::vector<int>> by_query;
    for (const auto& row : table.rows) {
        if (queries.contains(row.query_id)) {
            by_query[row.query_id].push_back(*row.label);
        }
    }
    double total = 0.0;
    std::size_t n = 0;
    for (auto& [qid, labels] : by_query) {
        if (std::find(labels.begin(), labels.end(), 1) == labels.end()) {
            continue;
        }
        double sum = 0.0;
        constexpr int kDraws = 400;
        for (int d = 0; d < kDraws; ++d) {
            std::shuffle(labels.begin(), labels.end(), rng);
            sum += oracle::ndcg(labels, k);
        }
        total += sum / kDraws;
        ++n;
    }
    return total / static_cast<double>(n);
}

Outcome ltr_sanity()
{
    Outcome out;
    Stopwatch clock;
    std::mt19937_64 rng(404);
    constexpr std::size_t kQueries = 300;
    auto table = ltr_table(rng, kQueries, 20, 4);
    std::set<std::string> valid, held_out;
    std::vector<std::string> valid_list;
    for (std::size_t q = 0; q < kQueries; ++q) {
        char qid[16];
        std::snprintf(qid, sizeof qid, "q%04zu", q);
        if (q % 5 == 0) {
            valid.insert(qid);
            valid_list.emplace_back(qid);
        } else if (q % 5 == 1) {
            held_out.insert(qid);
        }
    }
    auto without_held_out = [&](const FeatureTable& t) {
        FeatureTable r{t.schema, {}};
        for (const auto& row : t.rows) {
            if (!held_out.contains(row.query_id)) {
                r.rows.push_back(row);
            }
        }
        return r;
    };

    TrainConfig cfg;
    cfg.num_trees = 300;
    cfg.validation_queries = valid_list;
    auto sep = train(without_held_out(table), cfg);
    double sep_valid = model_ndcg(sep.model, table, valid, 10);
    if (sep.model.trees.size() > 300 || sep_valid < 0.99) {
        out.fail(fmt("separable validation NDCG@10 %.4f", sep_valid));
    }

    // Shuffle labels across the whole table: no feature carries signal any more.
    auto shuffled = table;
    std::vector<int> labels;
    for (const auto& row : shuffled.rows) {
        labels.push_back(*row.label);
    }
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        shuffled.rows[i].label = labels[i];
    }
    auto noise = train(without_held_out(shuffled), cfg);
    double noise_valid = model_ndcg(noise.model, shuffled, valid, 10);
    double noise_held = model_ndcg(noise.model, shuffled, held_out, 10);
    double base_valid = random_ndcg(shuffled, valid, 10, rng);
    double base_held = random_ndcg(shuffled, held_out, 10, rng);
    if (std::abs(noise_valid - base_valid) > 0.1) {
        out.fail(fmt("shuffled validation NDCG %.4f vs random %.4f", noise_valid, base_valid));
    }
    if (std::abs(noise_held - base_held) > 0.1) {
        out.fail(fmt("shuffled held-out NDCG %.4f vs random %.4f", noise_held, base_held));
    }
    double secs = clock.seconds();
    if (secs >= 60.0) {
        out.fail(fmt("took %.1f s", secs));
    }
    if (out.pass) {
        out.detail = fmt("separable %.4f; shuffled %.4f vs random %.4f", sep_valid, noise_valid, base_valid) +
                     fmt(" (held-out %.4f vs %.4f), %.1f s", noise_held, base_held, secs);
    }
    return out;
}

// ---------------------------------------------------------------- 5

Outcome postprocess_invariants()
{
    Outcome out;
    oracle::Gen gen(505);
    std::size_t lists = 0;
    while (lists < 1000) {
        auto runs = testing_support::random_runs(gen, gen.range(1, 8), 20, 30);
        lists += runs.size();

        auto c = testing_support::random_cutoff(gen);
        auto cut = dynamic_cutoff_detailed(runs, c);
        for (const auto& [qid, list] : runs) {
            const auto& kept = cut.runs.at(qid).entries;
            std::size_t len = list.entries.size();
            if (kept.size() < std::min(c.l, len) || kept.size() > c.h) {
                out.fail("cut-off length out of range for " + qid);
            }
            std::size_t forced = cut.forced.contains(qid) ? cut.forced.at(qid) : 0;
            for (std::size_t i = 0; i + forced < kept.size(); ++i) {
                if (!(kept[i].score > c.p * list.entries.front().score)) {
                    out.fail("non-forced entry at or below p*S in " + qid);
                }
            }
            if (!std::equal(kept.begin(), kept.end(), list.entries.begin())) {
                out.fail("cut-off is not a prefix");
            }
        }
        if (dynamic_cutoff(cut.runs, c) != cut.runs) {
            out.fail("dynamic cut-off not idempotent");
        }

        DuplicateParams d{gen.range(1, 3), gen.range(0, 3)};
        auto dup = filter_duplicates(runs, d);
        for (const auto& [id, n] : testing_support::unmarked_counts(dup)) {
            if (n > d.t) {
                out.fail("candidate " + id + " kept in too many lists");
            }
        }
        if (filter_duplicates(dup.runs, d).runs != dup.runs) {
            out.fail("duplicate filter not idempotent");
        }

        ThresholdParams tp{gen.real()};
        auto th = threshold_cutoff(runs, tp);
        if (threshold_cutoff(th, tp) != th) {
            out.fail("threshold cut-off not idempotent");
        }

        std::set<std::string> query_ids = {"c1", "c2", "c3"};
        auto qf = filter_query_cases(runs, query_ids);
        if (filter_query_cases(qf, query_ids) != qf) {
            out.fail("query-case filter not idempotent");
        }
        DateMap dates;
        for (int i = 0; i < 30; ++i) {
            if (gen.coin(0.7)) {
                dates["c" + std::to_string(i)] =
                    Date{std::chrono::year{2000 + static_cast<int>(gen.index(20))}, std::chrono::month{1},
                         std::chrono::day{1}};
            }
        }
        for (const auto& [qid, list] : runs) {
            if (gen.coin(0.7)) {
                dates[qid] = Date{std::chrono::year{2000 + static_cast<int>(gen.index(20))}, std::chrono::month{6},
                                  std::chrono::day{1}};
            }
        }
        auto df = filter_by_trial_date(runs, dates);
        if (filter_by_trial_date(df, dates) != df) {
            out.fail("trial-date filter not idempotent");
        }
    }
    if (out.pass) {
        out.detail = std::to_string(lists) + " lists, all invariants held";
    }
    return out;
}

// ---------------------------------------------------------------- 6

Outcome planted_optimum()
{
    Outcome out;
    auto c = testing_support::planted_case();
    auto result = grid_search(c.runs, c.qrels, c.ctx, GridSpec::defaults(), TuneMetric::micro_f1);
    const auto& b = result.best;
    if (b.cutoff.p != 0.5 || b.cutoff.h != 3 || b.cutoff.l != 1 || b.duplicates.t != 1 || b.duplicates.s != 1) {
        out.fail("tuner returned " + tuning_report_row(b));
    }
    CutoffParams cd;
    DuplicateParams dd;
    if (cd.p != 0.46 || cd.h != 7 || cd.l != 1 || dd.t != 1 || dd.s != 2) {
        out.fail("default post-processing parameters differ from the published optimum");
    }
    GridPoint published{cd, dd, {}};
    published.metrics.precision = 0.5;
    published.metrics.recall = 0.25;
    published.metrics.f_measure = 1.0 / 3.0;
    std::ostringstream report;
    write_tuning_report(report, GridSearchResult{published, {published}});
    if (report.str() != "p\th\tl\tt\ts\tprecision\trecall\tf_measure\n"
                        "0.46\t7\t1\t1\t2\t0.500000\t0.250000\t0.333333\n") {
        out.fail("tuning report row not echoed verbatim");
    }
    if (out.pass) {
        out.detail = "best " + tuning_report_row(b) + " over " + std::to_string(result.table.size()) + " points";
    }
    return out;
}

// ---------------------------------------------------------------- 7 and 8

struct RunOutput {
    double fused = 0.0;
    double baseline = 0.0;
    double seconds = 0.0;
    std::map<std::string, std::string> files;
};

RunOutput run_synthetic(const fs::path& dir)
{
    fs::remove_all(dir);
    SyntheticSpec spec;
    spec.num_queries = 100;
    spec.relevant_per_query = 4.16;
    write_synthetic(generate_synthetic(spec), dir);
    auto cfg = PipelineConfig::load(dir / "pipeline.cfg");
    cfg.threads = 1;
    cfg.check_inputs();
    Stopwatch clock;
    cmd_run(cfg);
    RunOutput r;
    r.seconds = clock.seconds();
    auto metrics = nlohmann::json::parse(io::read_file(cfg.out("metrics.json")));
    r.fused = metrics.at("micro_f1").at("f_measure").get<double>();
    r.baseline = metrics.at("baseline_bm25_top5").at("f_measure").get<double>();
    for (const char* name : {"run_raw.tsv", "run_final.tsv", "model.json", "features.tsv", "tuned_params.json"}) {
        r.files[name] = io::read_file(cfg.out(name));
    }
    return r;
}

}  // namespace

int main()
{
    auto root = fs::temp_directory_path() / "legalir_acceptance";
    RunOutput first, second;
    bool e2e_ok = true;
    std::string e2e_error;

    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"scorer oracle equivalence", scorer_oracles},
        {"metric hand-checks", metric_hand_checks},
        {"n-gram (1,1) degeneracy", ngram_degeneracy},
        {"LTR sanity", ltr_sanity},
        {"post-processing invariants", postprocess_invariants},
        {"planted grid optimum", planted_optimum},
        {"end-to-end synthetic pipeline",
         [&] {
             Outcome out;
             try {
                 first = run_synthetic(root / "first");
             } catch (const std::exception& e) {
                 e2e_ok = false;
                 e2e_error = e.what();
                 out.fail(std::string("pipeline failed: ") + e.what());
                 return out;
             }
             if (!(first.fused > first.baseline)) {
                 out.fail(fmt("fused micro-F1 %.4f not above BM25 top-5 %.4f", first.fused, first.baseline));
             }
             if (first.seconds >= 300.0) {
                 out.fail(fmt("took %.1f s", first.seconds));
             }
             if (out.pass) {
                 out.detail = fmt("fused micro-F1 %.4f > BM25 top-5 %.4f, %.1f s single-threaded", first.fused,
                                  first.baseline, first.seconds);
             }
             return out;
         }},
        {"determinism",
         [&] {
             Outcome out;
             if (!e2e_ok) {
                 out.fail("first run failed: " + e2e_error);
                 return out;
             }
             try {
                 second = run_synthetic(root / "second");
             } catch (const std::exception& e) {
                 out.fail(std::string("second run failed: ") + e.what());
                 return out;
             }
             for (const auto& [name, bytes] : first.files) {
                 if (second.files.at(name) != bytes) {
                     out.fail(name + " differs between runs");
                 }
             }
             if (out.pass) {
                 out.detail = std::to_string(first.files.size()) + " artifacts byte-identical, run_final.tsv sha256 " +
                              sha256_hex(first.files.at("run_final.tsv")).substr(0, 16);
             }
             return out;
         }},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        failures += o.pass ? 0 : 1;
        std::cout << "criterion " << (i + 1) << " " << (o.pass ? "PASS" : "FAIL") << ": " << criteria[i].first
                  << " (" << o.detail << ")" << std::endl;
    }
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
