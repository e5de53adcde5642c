#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "legalir/ltr.hpp"
#include "legalir/postprocess.hpp"
#include "legalir/scorers.hpp"
#include "legalir/tokenizer.hpp"

namespace legalir {

enum class Task { case_retrieval, statute_retrieval };

/// How reranker outputs are mapped before the p * S cut-off rules. LTR scores
/// may be negative, which makes p * S meaningless; the logistic map keeps the
/// order and lands in (0, 1).
enum class ScoreTransform { sigmoid, raw };

/// Flat `key = value` configuration. Relative paths resolve against the
/// directory of the configuration file.
struct PipelineConfig {
    Task task = Task::case_retrieval;
    std::filesystem::path corpus_dir;
    std::filesystem::path queries_dir;
    std::filesystem::path qrels_train;
    std::filesystem::path qrels_valid;
    std::filesystem::path qrels_test;
    std::filesystem::path output_dir;
    std::vector<std::pair<std::string, std::filesystem::path>> external_scores;

    std::string schema = "task1_v1";
    std::vector<std::string> features;

    TokenizerConfig tokenizer;
    std::size_t ngram_lo = 1;
    std::size_t ngram_hi = 3;
    ScorerParams scorer;
    std::size_t retrieval_depth = 100;

    TrainConfig train;

    GridSpec grid = GridSpec::defaults();
    TuneMetric metric = TuneMetric::micro_f1;
    std::vector<FilterStage> stage_order = default_stage_order();
    ScoreTransform score_transform = ScoreTransform::sigmoid;
    /// Used by `postprocess` when no tuned parameters exist yet.
    PostprocessParams defaults;
    double threshold_p = 0.8;
    double threshold_tolerance = 0.02;

    unsigned threads = 1;
    std::string run_tag = "legalir";

    /// Every key as written, for the manifest.
    std::map<std::string, std::string> entries;

    static PipelineConfig parse(std::istream& in, const std::filesystem::path& base_dir, std::string_view source);
    static PipelineConfig load(const std::filesystem::path& path);

    /// Throws DataError naming the first configured input path that does not exist.
    void check_inputs() const;
    [[nodiscard]] std::filesystem::path out(std::string_view name) const { return output_dir / name; }
};

std::string_view to_string(Task task);
std::string_view to_string(ScoreTransform transform);

void cmd_ingest(const PipelineConfig& cfg);
void cmd_index(const PipelineConfig& cfg);
void cmd_score(const PipelineConfig& cfg);
void cmd_features(const PipelineConfig& cfg);
void cmd_train(const PipelineConfig& cfg);
void cmd_rerank(const PipelineConfig& cfg);
void cmd_tune(const PipelineConfig& cfg);
void cmd_postprocess(const PipelineConfig& cfg);
void cmd_eval(const PipelineConfig& cfg);
/// Every stage in order.
void cmd_run(const PipelineConfig& cfg);

/// Lowercase hex SHA-256 of a byte string / of a file.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace legalir
