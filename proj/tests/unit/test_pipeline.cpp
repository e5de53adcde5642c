#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "legalir/io.hpp"
#include "legalir/pipeline.hpp"
#include "legalir/synth.hpp"
#include "oracles.hpp"

using namespace legalir;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("legalir_pipe_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

PipelineConfig parse_text(const std::string& text, const fs::path& base = "/base")
{
    std::istringstream in(text);
    return PipelineConfig::parse(in, base, "test.cfg");
}

const std::string kMinimal = "corpus_dir = c\nqueries_dir = q\noutput_dir = o\n";

int run_cli(const std::string& args)
{
    std::string cmd = std::string(LEGALIR_CLI) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

SyntheticSpec small_spec()
{
    SyntheticSpec s;
    s.num_queries = 24;
    s.num_candidates = 160;
    s.vocab_size = 400;
    s.seed = 3;
    return s;
}

/// Small config tweaks so the unit-level runs finish quickly.
void append_fast_settings(const fs::path& cfg_path)
{
    std::ofstream(cfg_path, std::ios::app) << "num_trees = 40\nmin_samples_leaf = 5\nretrieval_depth = 30\n"
                                              "grid_p = 0:1:0.1\ngrid_h = 1..6\n";
}

}  // namespace

TEST(Config, ParsesValuesAndResolvesPaths)
{
    auto cfg = parse_text(kMinimal + "# comment\nbm25_k1 = 2.5\ngrid_h = 2..4\ngrid_p = 0:1:0.25\ndup_t = inf\n"
                                     "external_scores = SAILER:s.tsv, DELTA:/abs/d.tsv\nobjective = ndcg@5\n"
                                     "stage_order = duplicates, cutoff, trial_date\nscore_transform = raw\n");
    EXPECT_EQ(cfg.corpus_dir, fs::path("/base/c"));
    EXPECT_EQ(cfg.scorer.bm25.k1, 2.5);
    EXPECT_EQ(cfg.grid.h, (std::vector<std::size_t>{2, 3, 4}));
    EXPECT_EQ(cfg.grid.p, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
    EXPECT_EQ(cfg.defaults.duplicates.t, DuplicateParams::unlimited);
    ASSERT_EQ(cfg.external_scores.size(), 2u);
    EXPECT_EQ(cfg.external_scores[0].second, fs::path("/base/s.tsv"));
    EXPECT_EQ(cfg.external_scores[1].second, fs::path("/abs/d.tsv"));
    EXPECT_EQ(cfg.train.ndcg_truncation, 5u);
    EXPECT_EQ(cfg.stage_order.front(), FilterStage::duplicates);
    EXPECT_EQ(cfg.score_transform, ScoreTransform::raw);
    EXPECT_EQ(cfg.out("x.tsv"), fs::path("/base/o/x.tsv"));
    EXPECT_EQ(cfg.entries.at("bm25_k1"), "2.5");
}

TEST(Config, StatuteTaskDefaults)
{
    auto cfg = parse_text(kMinimal + "task = task3\n");
    EXPECT_EQ(cfg.task, Task::statute_retrieval);
    EXPECT_EQ(cfg.schema, "task3_v1");
    EXPECT_EQ(cfg.scorer.bm25.k1, 0.99);
    EXPECT_EQ(cfg.scorer.bm25.b, 0.75);
    EXPECT_EQ(cfg.train.ndcg_truncation, 1u);
    EXPECT_EQ(cfg.metric, TuneMetric::macro_f2);
    auto overridden = parse_text(kMinimal + "task = task3\nbm25_k1 = 1.2\n");
    EXPECT_EQ(overridden.scorer.bm25.k1, 1.2);
}

TEST(Config, RejectsBadInput)
{
    EXPECT_THROW(parse_text(kMinimal + "bm25_kl = 1\n"), UsageError);
    EXPECT_THROW(parse_text(kMinimal + "threads = 2\nthreads = 3\n"), UsageError);
    EXPECT_THROW(parse_text("corpus_dir = c\nqueries_dir = q\n"), UsageError);
    EXPECT_THROW(parse_text(kMinimal + "no equals sign\n"), UsageError);
    EXPECT_THROW(parse_text(kMinimal + "num_trees = -4\n"), UsageError);
    EXPECT_THROW(parse_text(kMinimal + "task = task2\n"), UsageError);
    EXPECT_THROW(parse_text(kMinimal + "grid_h = 5..2\n"), UsageError);
    EXPECT_THROW(parse_text(kMinimal + "external_scores = nocolon\n"), UsageError);
    try {
        parse_text(kMinimal + "\nbogus = 1\n");
        FAIL();
    } catch (const UsageError& e) {
        EXPECT_NE(std::string(e.what()).find("test.cfg:5"), std::string::npos) << e.what();
    }
}

TEST(Config, CheckInputsNamesMissingPath)
{
    auto dir = scratch("check");
    auto cfg = parse_text(kMinimal, dir);
    try {
        cfg.check_inputs();
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("corpus_dir"), std::string::npos);
    }
}

TEST(Hashing, KnownVectors)
{
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Synthetic, DeterministicAndConsistent)
{
    auto a = generate_synthetic(small_spec());
    auto b = generate_synthetic(small_spec());
    EXPECT_EQ(a.documents.size(), b.documents.size());
    for (std::size_t i = 0; i < a.documents.size(); ++i) {
        EXPECT_EQ(a.documents[i].text, b.documents[i].text);
    }
    EXPECT_EQ(a.qrels, b.qrels);
    EXPECT_EQ(a.query_ids.size(), 24u);
    EXPECT_EQ(a.train.size() + a.valid.size() + a.test.size(), a.qrels.size());
    for (const auto& [qid, rel] : a.qrels) {
        EXPECT_FALSE(rel.empty());
        EXPECT_FALSE(rel.contains(qid));
    }
    auto other = small_spec();
    other.seed = 4;
    EXPECT_NE(generate_synthetic(other).qrels, a.qrels);
    other = small_spec();
    other.num_queries = 0;
    EXPECT_THROW(other.validate(), UsageError);
}

TEST(EndToEnd, SyntheticCaseRetrievalIsReproducible)
{
    auto root = scratch("e2e");
    std::string first_run, first_model;
    for (const char* name : {"a", "b"}) {
        auto dir = root / name;
        write_synthetic(generate_synthetic(small_spec()), dir);
        append_fast_settings(dir / "pipeline.cfg");
        auto cfg = PipelineConfig::load(dir / "pipeline.cfg");
        cfg.threads = std::string(name) == "a" ? 1 : 3;
        cfg.check_inputs();
        cmd_run(cfg);
        for (const char* artifact :
             {"corpus.jsonl", "queries.jsonl", "index_plain.bin", "index_ngram.bin", "scores_bm25.tsv",
              "scores_qld.tsv", "scores_bm25_ngram.tsv", "features.tsv", "model.json", "train_log.tsv",
              "run_raw.tsv", "tuning_report.tsv", "tuned_params.json", "run_final.tsv", "metrics.json"}) {
            EXPECT_TRUE(fs::exists(cfg.out(artifact))) << artifact;
        }
        auto run = io::read_file(cfg.out("run_final.tsv"));
        auto model = io::read_file(cfg.out("model.json"));
        if (first_run.empty()) {
            first_run = run;
            first_model = model;
        } else {
            EXPECT_EQ(run, first_run);
            EXPECT_EQ(model, first_model);
        }

        auto manifest = nlohmann::json::parse(io::read_file(cfg.out("manifest.json")));
        EXPECT_EQ(manifest["artifacts"]["run_final.tsv"]["sha256"], sha256_hex(run));
        EXPECT_EQ(manifest["artifacts"]["model.json"]["command"], "train");

        // Only queries outside the train/valid judgments reach the final run.
        auto final_runs = io::read_run_file(cfg.out("run_final.tsv"));
        auto train = io::read_qrels_json(cfg.qrels_train);
        auto valid = io::read_qrels_json(cfg.qrels_valid);
        for (const auto& [qid, list] : final_runs) {
            EXPECT_FALSE(train.contains(qid) || valid.contains(qid)) << qid;
        }
        auto metrics = nlohmann::json::parse(io::read_file(cfg.out("metrics.json")));
        EXPECT_TRUE(metrics.contains("micro_f1"));
        EXPECT_TRUE(metrics.contains("baseline_bm25_top5"));
    }
}

TEST(EndToEnd, StagesFailCleanlyOutOfOrder)
{
    auto dir = scratch("order");
    write_synthetic(generate_synthetic(small_spec()), dir);
    auto cfg = PipelineConfig::load(dir / "pipeline.cfg");
    EXPECT_THROW(cmd_train(cfg), DataError);
    EXPECT_THROW(cmd_index(cfg), DataError);
}

TEST(EndToEnd, StatuteRetrievalWithCustomSchema)
{
    auto dir = scratch("task3");
    fs::create_directories(dir / "articles");
    fs::create_directories(dir / "queries");
    oracle::Gen gen(31);
    std::vector<std::vector<std::string>> article_words;
    for (int a = 0; a < 30; ++a) {
        std::vector<std::string> words;
        for (int w = 0; w < 12; ++w) {
            words.push_back(gen.word(1000));
        }
        article_words.push_back(words);
        std::ofstream(dir / "articles" / ("art" + std::to_string(a) + ".txt"))
            << "Part I General\n(Caption " << a << ")\n" << oracle::join(words) << "\n";
    }
    nlohmann::json train, valid, test;
    for (int q = 0; q < 24; ++q) {
        std::vector<std::size_t> targets = {gen.index(30)};
        if (gen.coin(0.3)) {
            auto second = gen.index(30);
            if (second != targets[0]) {
                targets.push_back(second);
            }
        }
        std::vector<std::string> text;
        nlohmann::json rel = nlohmann::json::array();
        for (auto t : targets) {
            for (int w = 0; w < 4; ++w) {
                text.push_back(article_words[t][gen.index(12)]);
            }
            rel.push_back("art" + std::to_string(t));
        }
        auto qid = "Q" + std::to_string(q);
        std::ofstream(dir / "queries" / (qid + ".txt")) << oracle::join(text) << "\n";
        (q < 12 ? train : q < 18 ? valid : test)[qid] = rel;
    }
    std::ofstream(dir / "train.json") << train.dump();
    std::ofstream(dir / "valid.json") << valid.dump();
    std::ofstream(dir / "test.json") << test.dump();
    std::ofstream(dir / "pipeline.cfg")
        << "task = task3\ncorpus_dir = articles\nqueries_dir = queries\noutput_dir = out\n"
           "qrels_train = train.json\nqrels_valid = valid.json\nqrels_test = test.json\n"
           "schema = statute_small\nfeatures = query_length, article_length, BM25, QLD\n"
           "num_trees = 20\nmin_samples_leaf = 2\nretrieval_depth = 10\n";

    auto cfg = PipelineConfig::load(dir / "pipeline.cfg");
    cfg.check_inputs();
    cmd_run(cfg);
    auto table = read_feature_table(cfg.out("features.tsv"));
    EXPECT_EQ(table.schema.names, (std::vector<std::string>{"query_length", "article_length", "BM25", "QLD"}));
    EXPECT_FALSE(fs::exists(cfg.out("index_ngram.bin")));
    auto tuned = nlohmann::json::parse(io::read_file(cfg.out("tuned_params.json")));
    EXPECT_TRUE(tuned.contains("target_fraction"));
    auto final_runs = io::read_run_file(cfg.out("run_final.tsv"));
    EXPECT_EQ(final_runs.size(), 6u);
    for (const auto& [qid, list] : final_runs) {
        EXPECT_FALSE(list.entries.empty());
    }
    auto metrics = nlohmann::json::parse(io::read_file(cfg.out("metrics.json")));
    EXPECT_GT(metrics["macro_f2"]["f_measure"].get<double>(), 0.0);
}

TEST(Cli, ExitCodes)
{
    auto dir = scratch("cli");
    EXPECT_EQ(run_cli(""), 1);
    EXPECT_EQ(run_cli("bogus"), 1);
    EXPECT_EQ(run_cli("run --config " + (dir / "missing.cfg").string()), 1);
    std::ofstream(dir / "bad.cfg") << "nonsense = 1\n";
    EXPECT_EQ(run_cli("ingest --config " + (dir / "bad.cfg").string()), 1);
    std::ofstream(dir / "nodata.cfg") << "corpus_dir = nowhere\nqueries_dir = q\noutput_dir = o\n";
    EXPECT_EQ(run_cli("ingest --config " + (dir / "nodata.cfg").string()), 2);

    EXPECT_EQ(run_cli("synth --out " + (dir / "syn").string() + " --queries 12 --candidates 100 --vocab 300"), 0);
    append_fast_settings(dir / "syn" / "pipeline.cfg");
    EXPECT_EQ(run_cli("ingest -c " + (dir / "syn" / "pipeline.cfg").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "syn" / "out" / "corpus.jsonl"));
    EXPECT_EQ(run_cli("train -c " + (dir / "syn" / "pipeline.cfg").string()), 2);
    EXPECT_EQ(run_cli("synth --out " + (dir / "bad").string() + " --queries 0"), 1);
}
