// Command-line front end for the retrieval pipeline.
//
//   legalir synth --out DIR [--queries N] [--candidates N] [--seed S]
//   legalir <stage> --config FILE [--threads N]
//
// Exit status: 0 ok, 1 usage, 2 data error, 3 internal error.

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "legalir/pipeline.hpp"
#include "legalir/synth.hpp"

namespace {

using legalir::PipelineConfig;

struct StageCommand {
    const char* name;
    const char* help;
    void (*run)(const PipelineConfig&);
};

constexpr StageCommand kStages[] = {
    {"ingest", "clean corpus and query documents", legalir::cmd_ingest},
    {"index", "build the plain and n-gram indexes", legalir::cmd_index},
    {"score", "write BM25 / QLD / n-gram BM25 score dumps", legalir::cmd_score},
    {"features", "assemble the feature table", legalir::cmd_features},
    {"train", "train the tree ensemble ranker", legalir::cmd_train},
    {"rerank", "score every candidate with the trained model", legalir::cmd_rerank},
    {"tune", "grid-search post-processing parameters on validation queries", legalir::cmd_tune},
    {"postprocess", "apply the tuned filters to test queries", legalir::cmd_postprocess},
    {"eval", "evaluate the final run against test judgments", legalir::cmd_eval},
    {"run", "every stage in order", legalir::cmd_run},
};

int run(int argc, char** argv)
{
    CLI::App app{"Legal case and statute retrieval pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    unsigned threads = 0;
    std::map<std::string, CLI::App*> stage_apps;
    for (const auto& stage : kStages) {
        auto* sub = app.add_subcommand(stage.name, stage.help);
        sub->add_option("-c,--config", config_path, "pipeline configuration file")->required()->check(
            CLI::ExistingFile);
        sub->add_option("-t,--threads", threads, "worker threads (overrides the config)");
        stage_apps[stage.name] = sub;
    }

    legalir::SyntheticSpec spec;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "generate a synthetic case-retrieval corpus");
    synth->add_option("-o,--out", synth_out, "output directory")->required();
    synth->add_option("--queries", spec.num_queries, "number of queries");
    synth->add_option("--candidates", spec.num_candidates, "number of candidate documents");
    synth->add_option("--relevant", spec.relevant_per_query, "mean relevant candidates per query");
    synth->add_option("--vocab", spec.vocab_size, "common vocabulary size");
    synth->add_option("--rare-terms", spec.rare_terms_per_query, "rare terms planted per query");
    synth->add_option("--overlap", spec.overlap_strength, "share of rare terms a relevant candidate carries");
    synth->add_option("--seed", spec.seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (synth->parsed()) {
        auto corpus = legalir::generate_synthetic(spec);
        legalir::write_synthetic(corpus, synth_out);
        std::cerr << "[synth] " << corpus.documents.size() << " documents, " << corpus.query_ids.size()
                  << " queries written to " << synth_out << '\n';
        return 0;
    }
    for (const auto& stage : kStages) {
        if (stage_apps[stage.name]->parsed()) {
            auto cfg = PipelineConfig::load(config_path);
            if (threads > 0) {
                cfg.threads = threads;
            }
            cfg.check_inputs();
            stage.run(cfg);
            return 0;
        }
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const legalir::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const legalir::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}
