#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "legalir/common.hpp"
#include "legalir/features.hpp"

namespace legalir {

/// NDCG@k over binary labels in ranked order: gain 2^label - 1, discount
/// 1 / log2(rank + 1). Zero when no label is relevant.
double ndcg_at_k(std::span<const int> ranked_labels, std::size_t k);

struct TrainConfig {
    std::size_t num_trees = 300;
    std::size_t max_leaves = 31;
    double learning_rate = 0.05;
    std::size_t min_samples_leaf = 20;
    /// NDCG truncation used both for the lambda gradients and model selection.
    std::size_t ndcg_truncation = 10;
    std::uint64_t seed = 42;
    /// Fraction of qualifying queries held out for model selection; 0 means
    /// select on the training queries. Ignored when `validation_queries` is set.
    double validation_fraction = 0.2;
    std::vector<std::string> validation_queries;
    std::size_t early_stopping_patience = 50;

    void validate() const;

    /// Accepts "ndcg@K", "precision@1" (-> NDCG@1) and "precision@2" (-> NDCG@2).
    void set_objective(std::string_view objective);
    [[nodiscard]] std::string objective() const;
};

struct TreeNode {
    /// -1 marks a leaf.
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    [[nodiscard]] bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Binary regression tree; rows with value <= threshold go left.
struct RegressionTree {
    std::vector<TreeNode> nodes;

    [[nodiscard]] double predict(std::span<const double> row) const;
    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct TreeEnsemble {
    std::string schema_name;
    std::vector<std::string> feature_names;
    double base_score = 0.0;
    std::vector<RegressionTree> trees;
    TrainConfig config;
    std::size_t best_iteration = 0;

    [[nodiscard]] double predict_row(std::span<const double> row) const;
    /// Throws DataError if a split references a missing feature, a child index
    /// is out of range, or a value is non-finite.
    void validate() const;

    void save(std::ostream& out) const;
    static TreeEnsemble load(std::istream& in, std::string_view source);
};

struct TrainLogRow {
    std::size_t iteration = 0;
    double train_ndcg = 0.0;
    double valid_ndcg = 0.0;
    double valid_precision_at_1 = 0.0;
};

struct TrainResult {
    TreeEnsemble model;
    std::vector<TrainLogRow> log;
    std::vector<std::string> train_queries;
    std::vector<std::string> valid_queries;
};

/// LambdaMART: each tree is a Newton step on pairwise lambdas weighted by the
/// |delta NDCG@K| of swapping the pair. The returned ensemble is cut at the
/// iteration with the best validation NDCG. Every row must carry a label.
TrainResult train(const FeatureTable& table, const TrainConfig& config);

/// Per-query ranked lists of model scores. Throws DataError when the table
/// schema does not match the model.
RunSet predict(const TreeEnsemble& model, const FeatureTable& table);

/// Mean NDCG@k of `runs` over the queries in `qrels` that have at least one
/// relevant document.
double mean_ndcg(const RunSet& runs, const QrelSet& qrels, std::size_t k);

void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log);

}  // namespace legalir
