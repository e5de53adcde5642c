#include "legalir/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "legalir/eval.hpp"
#include "legalir/features.hpp"
#include "legalir/index.hpp"
#include "legalir/ingest.hpp"
#include "legalir/io.hpp"
#include "legalir/parallel.hpp"
#include "text_util.hpp"

namespace legalir {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Task task)
{
    return task == Task::case_retrieval ? "task1" : "task3";
}

std::string_view to_string(ScoreTransform transform)
{
    return transform == ScoreTransform::sigmoid ? "sigmoid" : "raw";
}

// ---------------------------------------------------------------- config

namespace {

std::size_t parse_size(std::string_view text, std::string_view key)
{
    std::size_t value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw UsageError("config key '" + std::string(key) + "': expected a non-negative integer, got '" +
                         std::string(text) + "'");
    }
    return value;
}

double parse_real(std::string_view text, std::string_view key)
{
    try {
        return io::parse_double(text, key);
    } catch (const DataError&) {
        throw UsageError("config key '" + std::string(key) + "': expected a number, got '" + std::string(text) + "'");
    }
}

bool parse_bool(std::string_view text, std::string_view key)
{
    if (text == "true" || text == "1") {
        return true;
    }
    if (text == "false" || text == "0") {
        return false;
    }
    throw UsageError("config key '" + std::string(key) + "': expected true or false");
}

std::vector<std::string> split_list(std::string_view text)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find(',', start);
        auto part = detail::trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (!part.empty()) {
            out.emplace_back(part);
        }
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

// "1,2,5" or "1..10" or a mix.
std::vector<std::size_t> parse_size_list(std::string_view text, std::string_view key)
{
    std::vector<std::size_t> out;
    for (const auto& item : split_list(text)) {
        auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(parse_size(item, key));
            continue;
        }
        std::size_t lo = parse_size(std::string_view(item).substr(0, dots), key);
        std::size_t hi = parse_size(std::string_view(item).substr(dots + 2), key);
        if (lo > hi) {
            throw UsageError("config key '" + std::string(key) + "': empty range " + item);
        }
        for (std::size_t v = lo; v <= hi; ++v) {
            out.push_back(v);
        }
    }
    if (out.empty()) {
        throw UsageError("config key '" + std::string(key) + "' is empty");
    }
    return out;
}

// "0.1,0.5" or "lo:hi:step" or a mix.
std::vector<double> parse_real_list(std::string_view text, std::string_view key)
{
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        auto c1 = item.find(':');
        if (c1 == std::string::npos) {
            out.push_back(parse_real(item, key));
            continue;
        }
        auto c2 = item.find(':', c1 + 1);
        if (c2 == std::string::npos) {
            throw UsageError("config key '" + std::string(key) + "': range needs lo:hi:step");
        }
        std::string_view sv(item);
        double lo = parse_real(sv.substr(0, c1), key);
        double hi = parse_real(sv.substr(c1 + 1, c2 - c1 - 1), key);
        double step = parse_real(sv.substr(c2 + 1), key);
        if (!(step > 0.0) || lo > hi) {
            throw UsageError("config key '" + std::string(key) + "': bad range " + item);
        }
        auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) {
            out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
        }
    }
    if (out.empty()) {
        throw UsageError("config key '" + std::string(key) + "' is empty");
    }
    return out;
}

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys = {
        "task",          "corpus_dir",      "queries_dir",     "qrels_train",      "qrels_valid",
        "qrels_test",    "output_dir",      "external_scores", "schema",           "features",
        "lowercase",     "min_token_len",   "ngram_lo",        "ngram_hi",         "bm25_k1",
        "bm25_b",        "qld_mu",          "retrieval_depth", "num_trees",        "max_leaves",
        "learning_rate", "min_samples_leaf", "ndcg_truncation", "objective",       "seed",
        "validation_fraction", "early_stopping_patience", "grid_p", "grid_h",      "grid_l",
        "grid_t",        "grid_s",          "metric",          "stage_order",      "score_transform",
        "cutoff_p",      "cutoff_h",        "cutoff_l",        "dup_t",            "dup_s",
        "threshold_p",   "threshold_tolerance", "threads",     "run_tag",
    };
    return keys;
}

}  // namespace

PipelineConfig PipelineConfig::parse(std::istream& in, const fs::path& base_dir, std::string_view source)
{
    PipelineConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        auto eq = text.find('=');
        std::string where = std::string(source) + ":" + std::to_string(line_no);
        if (eq == std::string_view::npos) {
            throw UsageError(where + ": expected key = value");
        }
        std::string key(detail::trim(text.substr(0, eq)));
        std::string value(detail::trim(text.substr(eq + 1)));
        if (!known_keys().contains(key)) {
            throw UsageError(where + ": unknown key '" + key + "'");
        }
        if (!cfg.entries.emplace(key, value).second) {
            throw UsageError(where + ": key '" + key + "' given twice");
        }
    }

    const auto& e = cfg.entries;
    auto get = [&](const char* key) -> std::optional<std::string> {
        auto it = e.find(key);
        return it == e.end() ? std::nullopt : std::optional<std::string>(it->second);
    };
    auto path = [&](const std::string& v) { return (base_dir / v).lexically_normal(); };

    if (auto v = get("task")) {
        if (*v == "task1") {
            cfg.task = Task::case_retrieval;
        } else if (*v == "task3") {
            cfg.task = Task::statute_retrieval;
        } else {
            throw UsageError("config key 'task': expected task1 or task3");
        }
    }
    if (cfg.task == Task::statute_retrieval) {
        cfg.schema = "task3_v1";
        cfg.scorer.bm25 = Bm25Params::statute();
        cfg.retrieval_depth = 200;
        cfg.metric = TuneMetric::macro_f2;
        cfg.train.set_objective("precision@1");
    }

    for (const auto& [key, value] : e) {
        if (key == "corpus_dir") {
            cfg.corpus_dir = path(value);
        } else if (key == "queries_dir") {
            cfg.queries_dir = path(value);
        } else if (key == "qrels_train") {
            cfg.qrels_train = path(value);
        } else if (key == "qrels_valid") {
            cfg.qrels_valid = path(value);
        } else if (key == "qrels_test") {
            cfg.qrels_test = path(value);
        } else if (key == "output_dir") {
            cfg.output_dir = path(value);
        } else if (key == "external_scores") {
            for (const auto& item : split_list(value)) {
                auto colon = item.find(':');
                if (colon == std::string::npos || colon == 0) {
                    throw UsageError("config key 'external_scores': expected NAME:path entries");
                }
                cfg.external_scores.emplace_back(item.substr(0, colon), path(item.substr(colon + 1)));
            }
        } else if (key == "schema") {
            cfg.schema = value;
        } else if (key == "features") {
            cfg.features = split_list(value);
        } else if (key == "lowercase") {
            cfg.tokenizer.lowercase = parse_bool(value, key);
        } else if (key == "min_token_len") {
            cfg.tokenizer.min_token_len = parse_size(value, key);
        } else if (key == "ngram_lo") {
            cfg.ngram_lo = parse_size(value, key);
        } else if (key == "ngram_hi") {
            cfg.ngram_hi = parse_size(value, key);
        } else if (key == "bm25_k1") {
            cfg.scorer.bm25.k1 = parse_real(value, key);
        } else if (key == "bm25_b") {
            cfg.scorer.bm25.b = parse_real(value, key);
        } else if (key == "qld_mu") {
            cfg.scorer.qld.mu = parse_real(value, key);
        } else if (key == "retrieval_depth") {
            cfg.retrieval_depth = parse_size(value, key);
        } else if (key == "num_trees") {
            cfg.train.num_trees = parse_size(value, key);
        } else if (key == "max_leaves") {
            cfg.train.max_leaves = parse_size(value, key);
        } else if (key == "learning_rate") {
            cfg.train.learning_rate = parse_real(value, key);
        } else if (key == "min_samples_leaf") {
            cfg.train.min_samples_leaf = parse_size(value, key);
        } else if (key == "objective") {
            cfg.train.set_objective(value);
        } else if (key == "seed") {
            cfg.train.seed = parse_size(value, key);
        } else if (key == "validation_fraction") {
            cfg.train.validation_fraction = parse_real(value, key);
        } else if (key == "early_stopping_patience") {
            cfg.train.early_stopping_patience = parse_size(value, key);
        } else if (key == "grid_p") {
            cfg.grid.p = parse_real_list(value, key);
        } else if (key == "grid_h") {
            cfg.grid.h = parse_size_list(value, key);
        } else if (key == "grid_l") {
            cfg.grid.l = parse_size_list(value, key);
        } else if (key == "grid_t") {
            cfg.grid.t = parse_size_list(value, key);
        } else if (key == "grid_s") {
            cfg.grid.s = parse_size_list(value, key);
        } else if (key == "metric") {
            cfg.metric = parse_tune_metric(value);
        } else if (key == "stage_order") {
            cfg.stage_order.clear();
            for (const auto& s : split_list(value)) {
                cfg.stage_order.push_back(parse_filter_stage(s));
            }
            cfg.defaults.order = cfg.stage_order;
        } else if (key == "score_transform") {
            if (value == "sigmoid") {
                cfg.score_transform = ScoreTransform::sigmoid;
            } else if (value == "raw") {
                cfg.score_transform = ScoreTransform::raw;
            } else {
                throw UsageError("config key 'score_transform': expected sigmoid or raw");
            }
        } else if (key == "cutoff_p") {
            cfg.defaults.cutoff.p = parse_real(value, key);
        } else if (key == "cutoff_h") {
            cfg.defaults.cutoff.h = parse_size(value, key);
        } else if (key == "cutoff_l") {
            cfg.defaults.cutoff.l = parse_size(value, key);
        } else if (key == "dup_t") {
            cfg.defaults.duplicates.t = value == "inf" ? DuplicateParams::unlimited : parse_size(value, key);
        } else if (key == "dup_s") {
            cfg.defaults.duplicates.s = parse_size(value, key);
        } else if (key == "threshold_p") {
            cfg.threshold_p = parse_real(value, key);
        } else if (key == "threshold_tolerance") {
            cfg.threshold_tolerance = parse_real(value, key);
        } else if (key == "threads") {
            cfg.threads = static_cast<unsigned>(std::max<std::size_t>(1, parse_size(value, key)));
        } else if (key == "run_tag") {
            cfg.run_tag = value;
        }
    }
    // ndcg_truncation last so it overrides an objective's implied K.
    if (auto v = get("ndcg_truncation")) {
        cfg.train.ndcg_truncation = parse_size(*v, "ndcg_truncation");
    }

    for (const char* key : {"corpus_dir", "queries_dir", "output_dir"}) {
        if (!e.contains(key)) {
            throw UsageError(std::string(source) + ": missing required key '" + key + "'");
        }
    }
    cfg.tokenizer.ngram_lo = 1;
    cfg.tokenizer.ngram_hi = 1;
    cfg.tokenizer.validate();
    TokenizerConfig ng = cfg.tokenizer;
    ng.ngram_lo = cfg.ngram_lo;
    ng.ngram_hi = cfg.ngram_hi;
    ng.validate();
    cfg.scorer.bm25.validate();
    cfg.scorer.qld.validate();
    cfg.train.validate();
    cfg.defaults.cutoff.validate();
    cfg.defaults.duplicates.validate();
    ThresholdParams{cfg.threshold_p}.validate();
    if (cfg.retrieval_depth == 0) {
        throw UsageError("retrieval_depth must be >= 1");
    }
    FeatureSchema::resolve(cfg.schema, cfg.features);
    return cfg;
}

PipelineConfig PipelineConfig::load(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open config '" + path.string() + "'");
    }
    return parse(in, path.parent_path(), path.string());
}

void PipelineConfig::check_inputs() const
{
    auto need_dir = [](const fs::path& p, const char* key) {
        if (!fs::is_directory(p)) {
            throw DataError(std::string(key) + ": directory '" + p.string() + "' does not exist");
        }
    };
    auto need_file = [](const fs::path& p, const std::string& key) {
        if (!p.empty() && !fs::is_regular_file(p)) {
            throw DataError(key + ": file '" + p.string() + "' does not exist");
        }
    };
    need_dir(corpus_dir, "corpus_dir");
    need_dir(queries_dir, "queries_dir");
    need_file(qrels_train, "qrels_train");
    need_file(qrels_valid, "qrels_valid");
    need_file(qrels_test, "qrels_test");
    for (const auto& [name, p] : external_scores) {
        need_file(p, "external_scores " + name);
    }
}

// ---------------------------------------------------------------- hashing / manifest

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string sha256_file(const fs::path& path)
{
    return sha256_hex(io::read_file(path));
}

namespace {

void log(std::string_view stage, const std::string& message)
{
    std::cerr << "[" << stage << "] " << message << '\n';
}

std::string hash_input(const fs::path& p)
{
    if (!fs::is_directory(p)) {
        return sha256_file(p);
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file()) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::string combined;
    for (const auto& f : files) {
        combined += f.filename().string();
        combined += '\t';
        combined += sha256_file(f);
        combined += '\n';
    }
    return sha256_hex(combined);
}

std::string config_hash(const PipelineConfig& cfg)
{
    json j = cfg.entries;
    return sha256_hex(j.dump());
}

// Records outputs of one command with the hashes of what they were built from.
void record(const PipelineConfig& cfg, std::string_view command, const std::vector<fs::path>& inputs,
            const std::vector<std::string>& outputs)
{
    auto path = cfg.out("manifest.json");
    json manifest = json::object();
    if (fs::exists(path)) {
        try {
            manifest = json::parse(io::read_file(path));
        } catch (const json::exception&) {
            manifest = json::object();
        }
    }
    json ins = json::object();
    for (const auto& in : inputs) {
        if (!in.empty() && fs::exists(in)) {
            ins[in.generic_string()] = hash_input(in);
        }
    }
    for (const auto& name : outputs) {
        manifest["artifacts"][name] = {
            {"command", command},
            {"sha256", sha256_file(cfg.out(name))},
            {"inputs", ins},
            {"config_sha256", config_hash(cfg)},
        };
    }
    manifest["config"] = cfg.entries;
    io::atomic_write(path, [&](std::ostream& out) { out << manifest.dump(1) << '\n'; });
}

template <typename Fn>
void write_out(const PipelineConfig& cfg, std::string_view name, Fn&& fn)
{
    io::atomic_write(cfg.out(name), fn);
}

std::vector<fs::path> outs(const PipelineConfig& cfg, std::initializer_list<std::string_view> names)
{
    std::vector<fs::path> v;
    for (auto n : names) {
        v.push_back(cfg.out(n));
    }
    return v;
}

std::vector<fs::path> concat(std::vector<fs::path> a, const std::vector<fs::path>& b)
{
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

void require_file(const fs::path& p, std::string_view what)
{
    if (!fs::is_regular_file(p)) {
        throw DataError(std::string(what) + " '" + p.string() + "' not found; run the earlier stage first");
    }
}

QrelSet load_qrels(const fs::path& p, std::string_view key)
{
    if (p.empty()) {
        throw UsageError("config key '" + std::string(key) + "' is required for this command");
    }
    return io::read_qrels_json(p);
}

std::set<std::string> judged_queries(const PipelineConfig& cfg)
{
    std::set<std::string> ids;
    for (const auto* p : {&cfg.qrels_train, &cfg.qrels_valid}) {
        if (!p->empty()) {
            for (const auto& [qid, rel] : io::read_qrels_json(*p)) {
                ids.insert(qid);
            }
        }
    }
    return ids;
}

RunSet restrict(const RunSet& runs, const std::set<std::string>& keep, bool inside)
{
    RunSet out;
    for (const auto& [qid, list] : runs) {
        if (keep.contains(qid) == inside) {
            out.emplace(qid, list);
        }
    }
    return out;
}

template <typename Map>
std::set<std::string> keys_of(const Map& m)
{
    std::set<std::string> out;
    for (const auto& kv : m) {
        out.insert(kv.first);
    }
    return out;
}

std::vector<CleanDocument> load_docs(const PipelineConfig& cfg, std::string_view name)
{
    require_file(cfg.out(name), "document file");
    return io::read_documents_jsonl(cfg.out(name));
}

TokenizerConfig ngram_config(const PipelineConfig& cfg)
{
    TokenizerConfig c = cfg.tokenizer;
    c.ngram_lo = cfg.ngram_lo;
    c.ngram_hi = cfg.ngram_hi;
    return c;
}

struct ScoreSource {
    std::string feature;
    std::string file;
    std::string index_file;
    ScorerKind kind;
};

std::vector<ScoreSource> score_sources(const PipelineConfig& cfg)
{
    std::vector<ScoreSource> s = {
        {"BM25", "scores_bm25.tsv", "index_plain.bin", ScorerKind::bm25},
        {"QLD", "scores_qld.tsv", "index_plain.bin", ScorerKind::qld},
    };
    if (cfg.task == Task::case_retrieval) {
        s.push_back({"BM25_ngram", "scores_bm25_ngram.tsv", "index_ngram.bin", ScorerKind::bm25_ngram});
    }
    return s;
}

InvertedIndex load_index(const fs::path& p)
{
    require_file(p, "index");
    std::ifstream in(p, std::ios::binary);
    return InvertedIndex::load(in);
}

DateMap collect_dates(const std::vector<CleanDocument>& a, const std::vector<CleanDocument>& b)
{
    DateMap dates;
    for (const auto* docs : {&a, &b}) {
        for (const auto& d : *docs) {
            dates[d.id] = d.trial_date;
        }
    }
    return dates;
}

PostprocessContext make_context(const PipelineConfig& cfg)
{
    auto corpus = load_docs(cfg, "corpus.jsonl");
    auto queries = load_docs(cfg, "queries.jsonl");
    PostprocessContext ctx;
    ctx.dates = collect_dates(corpus, queries);
    for (const auto& q : queries) {
        ctx.query_ids.insert(q.id);
    }
    return ctx;
}

void write_runs(const PipelineConfig& cfg, std::string_view name, const RunSet& runs)
{
    write_out(cfg, name, [&](std::ostream& out) { io::write_run_file(out, runs, cfg.run_tag); });
}

json metric_json(const MetricReport& r)
{
    return {{"precision", r.precision}, {"recall", r.recall}, {"f_measure", r.f_measure},
            {"tp", r.tp},               {"fp", r.fp},         {"fn", r.fn}};
}

}  // namespace

// ---------------------------------------------------------------- commands

void cmd_ingest(const PipelineConfig& cfg)
{
    auto raw_docs = io::read_corpus_dir(cfg.corpus_dir);
    auto raw_queries = io::read_corpus_dir(cfg.queries_dir);
    if (raw_docs.empty()) {
        throw DataError("corpus_dir '" + cfg.corpus_dir.string() + "' has no .txt documents");
    }
    if (raw_queries.empty()) {
        throw DataError("queries_dir '" + cfg.queries_dir.string() + "' has no .txt documents");
    }
    bool cases = cfg.task == Task::case_retrieval;
    std::vector<CleanDocument> docs(raw_docs.size());
    parallel_for(raw_docs.size(), cfg.threads, [&](std::size_t i) {
        docs[i] = cases ? preprocess_case(raw_docs[i]) : article_document(preprocess_article(raw_docs[i]));
    });
    std::vector<CleanDocument> queries(raw_queries.size());
    parallel_for(raw_queries.size(), cfg.threads, [&](std::size_t i) {
        queries[i] = cases ? preprocess_case(raw_queries[i]) : preprocess_plain(raw_queries[i]);
    });

    std::size_t placeholders = 0, dated = 0, summaries = 0, foreign = 0, empty = 0;
    for (const auto& d : docs) {
        placeholders += d.placeholder_count;
        dated += d.trial_date ? 1 : 0;
        summaries += d.summary ? 1 : 0;
        foreign += d.majority_non_english ? 1 : 0;
        empty += d.token_length == 0 ? 1 : 0;
    }
    json stats = {
        {"documents", docs.size()},       {"queries", queries.size()},
        {"placeholders_removed", placeholders}, {"dated_documents", dated},
        {"documents_with_summary", summaries},  {"majority_non_english", foreign},
        {"empty_documents", empty},
    };
    write_out(cfg, "corpus.jsonl", [&](std::ostream& out) { io::write_documents_jsonl(out, docs); });
    write_out(cfg, "queries.jsonl", [&](std::ostream& out) { io::write_documents_jsonl(out, queries); });
    write_out(cfg, "ingest_stats.json", [&](std::ostream& out) { out << stats.dump(1) << '\n'; });
    log("ingest", std::to_string(docs.size()) + " documents, " + std::to_string(queries.size()) + " queries");
    record(cfg, "ingest", {cfg.corpus_dir, cfg.queries_dir}, {"corpus.jsonl", "queries.jsonl", "ingest_stats.json"});
}

void cmd_index(const PipelineConfig& cfg)
{
    auto docs = load_docs(cfg, "corpus.jsonl");
    std::vector<std::pair<std::string, TokenizerConfig>> targets = {{"index_plain.bin", cfg.tokenizer}};
    if (cfg.task == Task::case_retrieval) {
        targets.emplace_back("index_ngram.bin", ngram_config(cfg));
    }
    std::vector<std::string> names;
    for (const auto& [name, tok] : targets) {
        auto index = build_index(docs, tok);
        write_out(cfg, name, [&](std::ostream& out) { index.save(out); });
        log("index", name + ": " + std::to_string(index.num_terms()) + " terms");
        names.push_back(name);
    }
    record(cfg, "index", outs(cfg, {"corpus.jsonl"}), names);
}

void cmd_score(const PipelineConfig& cfg)
{
    auto queries = load_docs(cfg, "queries.jsonl");
    std::map<std::string, std::unique_ptr<InvertedIndex>> indexes;
    std::vector<std::string> names;
    for (const auto& src : score_sources(cfg)) {
        if (!indexes.contains(src.index_file)) {
            indexes[src.index_file] = std::make_unique<InvertedIndex>(load_index(cfg.out(src.index_file)));
        }
        const InvertedIndex& index = *indexes[src.index_file];
        std::vector<ScoredList> lists(queries.size());
        parallel_for(queries.size(), cfg.threads, [&](std::size_t i) {
            lists[i] = top_k(score_all(index, queries[i], src.kind, cfg.scorer), cfg.retrieval_depth);
        });
        RunSet runs;
        for (auto& l : lists) {
            std::string qid = l.query_id;
            runs.emplace(std::move(qid), std::move(l));
        }
        write_out(cfg, src.file, [&](std::ostream& out) { io::write_score_dump(out, runs); });
        names.push_back(src.file);
    }
    log("score", std::to_string(queries.size()) + " queries x " + std::to_string(names.size()) + " scorers");
    record(cfg, "score", outs(cfg, {"queries.jsonl", "index_plain.bin", "index_ngram.bin"}), names);
}

void cmd_features(const PipelineConfig& cfg)
{
    auto corpus = load_docs(cfg, "corpus.jsonl");
    auto queries = load_docs(cfg, "queries.jsonl");
    DocumentMap qmap, cmap;
    for (auto& q : queries) {
        qmap.emplace(q.id, std::move(q));
    }
    for (auto& d : corpus) {
        cmap.emplace(d.id, std::move(d));
    }
    InternalScores internal;
    std::vector<fs::path> inputs = outs(cfg, {"corpus.jsonl", "queries.jsonl"});
    for (const auto& src : score_sources(cfg)) {
        require_file(cfg.out(src.file), "score dump");
        internal[src.feature] = io::to_runs(io::read_score_dump(cfg.out(src.file)));
        inputs.push_back(cfg.out(src.file));
    }
    std::vector<ExternalScoreFile> externals;
    for (const auto& [name, p] : cfg.external_scores) {
        externals.push_back(ExternalScoreFile::load(name, p));
        inputs.push_back(p);
    }
    auto schema = FeatureSchema::resolve(cfg.schema, cfg.features);
    auto table = assemble(qmap, cmap, internal, externals, schema, cfg.threads);

    QrelSet labels;
    for (const auto* p : {&cfg.qrels_train, &cfg.qrels_valid}) {
        if (!p->empty()) {
            for (auto& [qid, rel] : io::read_qrels_json(*p)) {
                labels[qid].insert(rel.begin(), rel.end());
            }
            inputs.push_back(*p);
        }
    }
    auto labelled = attach_labels(std::move(table), labels);
    for (auto& row : labelled.table.rows) {
        if (!labels.contains(row.query_id)) {
            row.label.reset();
        }
    }
    if (labelled.unmatched_qrels > 0) {
        log("features", std::to_string(labelled.unmatched_qrels) + " judged pairs fall outside the candidate sets");
    }
    write_out(cfg, "features.tsv", [&](std::ostream& out) { write_feature_table(out, labelled.table); });
    log("features", std::to_string(labelled.table.rows.size()) + " rows x " + std::to_string(schema.size()) +
                        " features");
    record(cfg, "features", inputs, {"features.tsv"});
}

void cmd_train(const PipelineConfig& cfg)
{
    require_file(cfg.out("features.tsv"), "feature table");
    auto table = read_feature_table(cfg.out("features.tsv"));
    FeatureTable labelled{table.schema, {}};
    for (auto& row : table.rows) {
        if (row.label) {
            labelled.rows.push_back(std::move(row));
        }
    }
    TrainConfig tc = cfg.train;
    if (!cfg.qrels_valid.empty()) {
        auto present = keys_of(io::read_qrels_json(cfg.qrels_valid));
        std::set<std::string> in_table;
        for (const auto& row : labelled.rows) {
            if (present.contains(row.query_id)) {
                in_table.insert(row.query_id);
            }
        }
        tc.validation_queries.assign(in_table.begin(), in_table.end());
    }
    auto result = train(labelled, tc);
    write_out(cfg, "model.json", [&](std::ostream& out) { result.model.save(out); });
    write_out(cfg, "train_log.tsv", [&](std::ostream& out) { write_train_log(out, result.log); });
    log("train", std::to_string(result.model.trees.size()) + " trees kept (best iteration " +
                     std::to_string(result.model.best_iteration) + ")");
    record(cfg, "train", concat(outs(cfg, {"features.tsv"}), {cfg.qrels_valid}), {"model.json", "train_log.tsv"});
}

void cmd_rerank(const PipelineConfig& cfg)
{
    require_file(cfg.out("model.json"), "model");
    require_file(cfg.out("features.tsv"), "feature table");
    std::ifstream in(cfg.out("model.json"), std::ios::binary);
    auto model = TreeEnsemble::load(in, cfg.out("model.json").string());
    auto table = read_feature_table(cfg.out("features.tsv"));
    auto runs = predict(model, table);
    if (cfg.score_transform == ScoreTransform::sigmoid) {
        for (auto& [qid, list] : runs) {
            for (auto& e : list.entries) {
                e.score = 1.0 / (1.0 + std::exp(-e.score));
            }
            list.sort();
        }
    }
    write_runs(cfg, "run_raw.tsv", runs);
    log("rerank", std::to_string(runs.size()) + " queries reranked");
    record(cfg, "rerank", outs(cfg, {"model.json", "features.tsv"}), {"run_raw.tsv"});
}

void cmd_tune(const PipelineConfig& cfg)
{
    require_file(cfg.out("run_raw.tsv"), "run file");
    auto runs = io::read_run_file(cfg.out("run_raw.tsv"));
    auto valid_qrels = load_qrels(cfg.qrels_valid, "qrels_valid");
    auto valid_runs = restrict(runs, keys_of(valid_qrels), true);
    json tuned;
    tuned["task"] = to_string(cfg.task);
    if (cfg.task == Task::case_retrieval) {
        auto ctx = make_context(cfg);
        auto result = grid_search(valid_runs, valid_qrels, ctx, cfg.grid, cfg.metric, cfg.stage_order, cfg.threads);
        write_out(cfg, "tuning_report.tsv", [&](std::ostream& out) { write_tuning_report(out, result); });
        const auto& b = result.best;
        tuned["metric"] = to_string(cfg.metric);
        tuned["p"] = b.cutoff.p;
        tuned["h"] = b.cutoff.h;
        tuned["l"] = b.cutoff.l;
        tuned["t"] = b.duplicates.t;
        tuned["s"] = b.duplicates.s;
        tuned["validation"] = metric_json(b.metrics);
        log("tune", "best " + tuning_report_row(b) + " over " + std::to_string(result.table.size()) + " points");
    } else {
        auto train_qrels = load_qrels(cfg.qrels_train, "qrels_train");
        double target = multi_relevant_fraction(train_qrels);
        auto t = tune_threshold(valid_runs, target, cfg.grid.p, cfg.threshold_tolerance);
        write_out(cfg, "tuning_report.tsv", [&](std::ostream& out) {
            out << "p\ttarget_fraction\tachieved_fraction\twithin_tolerance\n";
            out << io::format_double(t.p) << '\t' << io::format_fixed6(t.target_fraction) << '\t'
                << io::format_fixed6(t.achieved_fraction) << '\t' << (t.within_tolerance ? "yes" : "no") << '\n';
        });
        tuned["p"] = t.p;
        tuned["target_fraction"] = t.target_fraction;
        tuned["achieved_fraction"] = t.achieved_fraction;
        tuned["within_tolerance"] = t.within_tolerance;
        if (!t.within_tolerance) {
            log("tune", "no p reaches the target fraction within tolerance");
        }
    }
    write_out(cfg, "tuned_params.json", [&](std::ostream& out) { out << tuned.dump(1) << '\n'; });
    record(cfg, "tune", concat(outs(cfg, {"run_raw.tsv"}), {cfg.qrels_valid, cfg.qrels_train}),
           {"tuning_report.tsv", "tuned_params.json"});
}

void cmd_postprocess(const PipelineConfig& cfg)
{
    require_file(cfg.out("run_raw.tsv"), "run file");
    auto runs = io::read_run_file(cfg.out("run_raw.tsv"));
    auto test_runs = restrict(runs, judged_queries(cfg), false);
    std::optional<json> tuned;
    if (fs::exists(cfg.out("tuned_params.json"))) {
        tuned = json::parse(io::read_file(cfg.out("tuned_params.json")));
    }
    RunSet final_runs;
    if (cfg.task == Task::case_retrieval) {
        PostprocessParams params = cfg.defaults;
        params.order = cfg.stage_order;
        if (tuned) {
            params.cutoff = {tuned->at("p").get<double>(), tuned->at("h").get<std::size_t>(),
                             tuned->at("l").get<std::size_t>()};
            params.duplicates = {tuned->at("t").get<std::size_t>(), tuned->at("s").get<std::size_t>()};
        }
        final_runs = apply_postprocess(test_runs, make_context(cfg), params);
    } else {
        double p = tuned ? tuned->at("p").get<double>() : cfg.threshold_p;
        final_runs = threshold_cutoff(test_runs, ThresholdParams{p});
    }
    write_runs(cfg, "run_final.tsv", final_runs);
    log("postprocess", std::to_string(final_runs.size()) + " test queries");
    record(cfg, "postprocess", outs(cfg, {"run_raw.tsv", "tuned_params.json"}), {"run_final.tsv"});
}

void cmd_eval(const PipelineConfig& cfg)
{
    require_file(cfg.out("run_final.tsv"), "run file");
    auto runs = io::read_run_file(cfg.out("run_final.tsv"));
    auto qrels = load_qrels(cfg.qrels_test, "qrels_test");
    auto summary = evaluate_all(runs, qrels);
    std::ostringstream report;
    write_eval_report(report, summary);
    json doc = json::parse(report.str());
    if (fs::exists(cfg.out("scores_bm25.tsv"))) {
        auto bm25 = io::to_runs(io::read_score_dump(cfg.out("scores_bm25.tsv")));
        RunSet top5;
        for (const auto& [qid, list] : restrict(bm25, keys_of(qrels), true)) {
            top5.emplace(qid, top_k(list, 5));
        }
        doc["baseline_bm25_top5"] = metric_json(micro_prf1(top5, qrels));
    }
    write_out(cfg, "metrics.json", [&](std::ostream& out) { out << doc.dump(1) << '\n'; });
    const auto& headline = cfg.task == Task::case_retrieval ? summary.micro : summary.macro;
    log("eval", headline.mode + " " + io::format_fixed6(headline.f_measure));
    record(cfg, "eval", concat(outs(cfg, {"run_final.tsv"}), {cfg.qrels_test}), {"metrics.json"});
}

void cmd_run(const PipelineConfig& cfg)
{
    cmd_ingest(cfg);
    cmd_index(cfg);
    cmd_score(cfg);
    cmd_features(cfg);
    cmd_train(cfg);
    cmd_rerank(cfg);
    cmd_tune(cfg);
    cmd_postprocess(cfg);
    if (!cfg.qrels_test.empty()) {
        cmd_eval(cfg);
    }
}

}  // namespace legalir
