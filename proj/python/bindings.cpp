// Python bindings: tokenizer, index + scorers, metrics, post-processing filters
// and the pipeline commands.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdio>

#include "legalir/eval.hpp"
#include "legalir/index.hpp"
#include "legalir/ingest.hpp"
#include "legalir/ltr.hpp"
#include "legalir/pipeline.hpp"
#include "legalir/postprocess.hpp"
#include "legalir/scorers.hpp"
#include "legalir/synth.hpp"
#include "legalir/tokenizer.hpp"

namespace py = pybind11;
using namespace legalir;

namespace {

using PyRuns = std::map<std::string, std::vector<std::pair<std::string, double>>>;

RunSet to_runset(const PyRuns& runs)
{
    RunSet out;
    for (const auto& [qid, entries] : runs) {
        std::vector<ScoredDoc> docs;
        docs.reserve(entries.size());
        for (const auto& [id, score] : entries) {
            docs.push_back({id, score});
        }
        out[qid] = make_scored_list(qid, std::move(docs));
    }
    return out;
}

std::vector<std::pair<std::string, double>> to_py(const ScoredList& list)
{
    std::vector<std::pair<std::string, double>> out;
    out.reserve(list.entries.size());
    for (const auto& e : list.entries) {
        out.emplace_back(e.doc_id, e.score);
    }
    return out;
}

PyRuns to_py(const RunSet& runs)
{
    PyRuns out;
    for (const auto& [qid, list] : runs) {
        out[qid] = to_py(list);
    }
    return out;
}

py::dict metrics_dict(const MetricReport& r)
{
    py::dict d;
    d["mode"] = r.mode;
    d["precision"] = r.precision;
    d["recall"] = r.recall;
    d["f_measure"] = r.f_measure;
    d["tp"] = r.tp;
    d["fp"] = r.fp;
    d["fn"] = r.fn;
    return d;
}

std::optional<std::string> iso_date(const std::optional<Date>& d)
{
    if (!d) {
        return std::nullopt;
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d->year()), static_cast<unsigned>(d->month()),
                  static_cast<unsigned>(d->day()));
    return std::string(buf);
}

TokenizerConfig tokenizer_config(bool lowercase, std::size_t min_len, std::size_t lo, std::size_t hi)
{
    TokenizerConfig c{lowercase, min_len, lo, hi};
    c.validate();
    return c;
}

ScorerParams scorer_params(double k1, double b, double mu)
{
    ScorerParams p{{k1, b}, {mu}};
    p.bm25.validate();
    p.qld.validate();
    return p;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Legal case and statute retrieval pipeline";

    static py::exception<UsageError> usage_error(m, "UsageError", PyExc_ValueError);
    static py::exception<DataError> data_error(m, "DataError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const UsageError& e) {
            usage_error(e.what());
        } catch (const DataError& e) {
            data_error(e.what());
        }
    });

    m.def(
        "tokenize",
        [](const std::string& text, bool lowercase, std::size_t min_token_len, std::size_t ngram_lo,
           std::size_t ngram_hi) { return tokenize(text, tokenizer_config(lowercase, min_token_len, ngram_lo, ngram_hi)); },
        py::arg("text"), py::arg("lowercase") = true, py::arg("min_token_len") = 1, py::arg("ngram_lo") = 1,
        py::arg("ngram_hi") = 1);

    m.def(
        "preprocess_case",
        [](const std::string& id, const std::string& text) {
            auto doc = preprocess_case({id, text});
            py::dict d;
            d["id"] = doc.id;
            d["body"] = doc.body;
            d["summary"] = doc.summary;
            d["trial_date"] = iso_date(doc.trial_date);
            d["placeholder_count"] = doc.placeholder_count;
            d["token_length"] = doc.token_length;
            d["majority_non_english"] = doc.majority_non_english;
            return d;
        },
        py::arg("id"), py::arg("text"));

    py::class_<InvertedIndex>(m, "Index")
        .def(py::init([](const std::vector<std::pair<std::string, std::string>>& docs, bool lowercase,
                         std::size_t min_token_len, std::size_t ngram_lo, std::size_t ngram_hi) {
                 std::vector<CleanDocument> clean;
                 for (const auto& [id, text] : docs) {
                     CleanDocument d;
                     d.id = id;
                     d.body = text;
                     clean.push_back(std::move(d));
                 }
                 return build_index(clean, tokenizer_config(lowercase, min_token_len, ngram_lo, ngram_hi));
             }),
             py::arg("docs"), py::arg("lowercase") = true, py::arg("min_token_len") = 1, py::arg("ngram_lo") = 1,
             py::arg("ngram_hi") = 1)
        .def_property_readonly("num_docs", &InvertedIndex::num_docs)
        .def_property_readonly("num_terms", &InvertedIndex::num_terms)
        .def_property_readonly("avgdl", &InvertedIndex::avgdl)
        .def("doc_freq",
             [](const InvertedIndex& idx, const std::string& term) -> std::size_t {
                 auto id = idx.term_id(term);
                 return id ? idx.doc_freq(*id) : 0;
             })
        .def(
            "search",
            [](const InvertedIndex& idx, const std::string& query, const std::string& scorer, std::size_t k,
               double k1, double b, double mu) {
                CleanDocument q;
                q.id = "query";
                q.body = query;
                auto list = score_all(idx, q, parse_scorer_kind(scorer), scorer_params(k1, b, mu));
                return to_py(top_k(list, k));
            },
            py::arg("query"), py::arg("scorer") = "bm25", py::arg("k") = 10, py::arg("k1") = 3.0,
            py::arg("b") = 1.0, py::arg("mu") = 2000.0);

    m.def(
        "micro_f1", [](const PyRuns& runs, const QrelSet& qrels) { return metrics_dict(micro_prf1(to_runset(runs), qrels)); },
        py::arg("runs"), py::arg("qrels"));
    m.def(
        "macro_f2", [](const PyRuns& runs, const QrelSet& qrels) { return metrics_dict(macro_prf2(to_runset(runs), qrels)); },
        py::arg("runs"), py::arg("qrels"));
    m.def(
        "ndcg_at_k", [](const std::vector<int>& labels, std::size_t k) { return ndcg_at_k(labels, k); },
        py::arg("labels"), py::arg("k"));

    m.def(
        "dynamic_cutoff",
        [](const PyRuns& runs, double p, std::size_t h, std::size_t l) {
            CutoffParams c{p, h, l};
            c.validate();
            return to_py(dynamic_cutoff(to_runset(runs), c));
        },
        py::arg("runs"), py::arg("p") = 0.46, py::arg("h") = 7, py::arg("l") = 1);
    m.def(
        "filter_duplicates",
        [](const PyRuns& runs, std::size_t t, std::size_t s) {
            DuplicateParams d{t, s};
            d.validate();
            auto r = filter_duplicates(to_runset(runs), d);
            return py::make_tuple(to_py(r.runs), r.refilled);
        },
        py::arg("runs"), py::arg("t") = 1, py::arg("s") = 2);
    m.def(
        "threshold_cutoff",
        [](const PyRuns& runs, double p) {
            ThresholdParams t{p};
            t.validate();
            return to_py(threshold_cutoff(to_runset(runs), t));
        },
        py::arg("runs"), py::arg("p"));

    m.def(
        "generate_synthetic",
        [](const std::filesystem::path& out, std::size_t queries, std::size_t candidates, std::uint64_t seed) {
            SyntheticSpec spec;
            spec.num_queries = queries;
            spec.num_candidates = candidates;
            spec.seed = seed;
            spec.validate();
            write_synthetic(generate_synthetic(spec), out);
            return out / "pipeline.cfg";
        },
        py::arg("out"), py::arg("queries") = 100, py::arg("candidates") = 1000, py::arg("seed") = 7);

    m.def(
        "run_stage",
        [](const std::filesystem::path& config, const std::string& stage, unsigned threads) {
            static const std::map<std::string, void (*)(const PipelineConfig&)> stages = {
                {"ingest", cmd_ingest}, {"index", cmd_index},   {"score", cmd_score},
                {"features", cmd_features}, {"train", cmd_train}, {"rerank", cmd_rerank},
                {"tune", cmd_tune},     {"postprocess", cmd_postprocess}, {"eval", cmd_eval},
                {"run", cmd_run},
            };
            auto it = stages.find(stage);
            if (it == stages.end()) {
                throw UsageError("unknown stage '" + stage + "'");
            }
            auto cfg = PipelineConfig::load(config);
            if (threads > 0) {
                cfg.threads = threads;
            }
            cfg.check_inputs();
            py::gil_scoped_release release;
            it->second(cfg);
        },
        py::arg("config"), py::arg("stage") = "run", py::arg("threads") = 0);
}
