#include "legalir/ltr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>

#include <json.hpp>

#include "legalir/io.hpp"

namespace legalir {

using nlohmann::json;

double ndcg_at_k(std::span<const int> ranked_labels, std::size_t k)
{
    auto gain = [](int label) { return std::exp2(static_cast<double>(label)) - 1.0; };
    auto discount = [](std::size_t pos) { return 1.0 / std::log2(static_cast<double>(pos) + 2.0); };

    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranked_labels.size()); ++i) {
        dcg += gain(ranked_labels[i]) * discount(i);
    }
    std::vector<int> ideal(ranked_labels.begin(), ranked_labels.end());
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += gain(ideal[i]) * discount(i);
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

void TrainConfig::validate() const
{
    if (num_trees == 0 || max_leaves < 2 || min_samples_leaf == 0 || ndcg_truncation == 0
        || early_stopping_patience == 0) {
        throw UsageError("training counts must be positive (max_leaves >= 2)");
    }
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw UsageError("learning_rate must be in (0, 1]");
    }
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw UsageError("validation_fraction must be in [0, 1)");
    }
}

void TrainConfig::set_objective(std::string_view objective)
{
    if (objective == "precision@1") {
        ndcg_truncation = 1;
        return;
    }
    if (objective == "precision@2") {
        ndcg_truncation = 2;
        return;
    }
    constexpr std::string_view prefix = "ndcg@";
    if (objective.substr(0, prefix.size()) == prefix) {
        auto rest = std::string(objective.substr(prefix.size()));
        std::size_t used = 0;
        long k = 0;
        try {
            k = std::stol(rest, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == rest.size() && k > 0) {
            ndcg_truncation = static_cast<std::size_t>(k);
            return;
        }
    }
    throw UsageError("unknown objective '" + std::string(objective) + "'");
}

std::string TrainConfig::objective() const
{
    return "ndcg@" + std::to_string(ndcg_truncation);
}

double RegressionTree::predict(std::span<const double> row) const
{
    if (nodes.empty()) {
        return 0.0;
    }
    std::size_t n = 0;
    while (!nodes[n].is_leaf()) {
        const auto& node = nodes[n];
        n = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                    : node.right);
    }
    return nodes[n].value;
}

double TreeEnsemble::predict_row(std::span<const double> row) const
{
    double score = base_score;
    for (const auto& tree : trees) {
        score += tree.predict(row);
    }
    return score;
}

void TreeEnsemble::validate() const
{
    if (!std::isfinite(base_score)) {
        throw DataError("model base_score is not finite");
    }
    for (std::size_t t = 0; t < trees.size(); ++t) {
        const auto& nodes = trees[t].nodes;
        for (std::size_t n = 0; n < nodes.size(); ++n) {
            const auto& node = nodes[n];
            auto where = "tree " + std::to_string(t) + " node " + std::to_string(n);
            if (node.is_leaf()) {
                if (!std::isfinite(node.value)) {
                    throw DataError(where + ": non-finite leaf value");
                }
                continue;
            }
            if (static_cast<std::size_t>(node.feature) >= feature_names.size()) {
                throw DataError(where + ": split feature index out of range");
            }
            // Children always follow their parent, so traversal terminates.
            auto child_ok = [&](int c) {
                return c > static_cast<int>(n) && static_cast<std::size_t>(c) < nodes.size();
            };
            if (!child_ok(node.left) || !child_ok(node.right) || !std::isfinite(node.threshold)) {
                throw DataError(where + ": malformed split");
            }
        }
    }
}

namespace {

constexpr int kModelFormatVersion = 1;
constexpr double kSigmoid = 1.0;
constexpr double kMinSumHessian = 1e-3;
constexpr double kL2 = 1e-3;
constexpr double kMinGain = 1e-12;

json config_to_json(const TrainConfig& c)
{
    return {
        {"num_trees", c.num_trees},
        {"max_leaves", c.max_leaves},
        {"learning_rate", c.learning_rate},
        {"min_samples_leaf", c.min_samples_leaf},
        {"objective", c.objective()},
        {"ndcg_truncation", c.ndcg_truncation},
        {"seed", c.seed},
        {"validation_fraction", c.validation_fraction},
        {"validation_queries", c.validation_queries},
        {"early_stopping_patience", c.early_stopping_patience},
    };
}

TrainConfig config_from_json(const json& j)
{
    TrainConfig c;
    c.num_trees = j.at("num_trees").get<std::size_t>();
    c.max_leaves = j.at("max_leaves").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    c.ndcg_truncation = j.at("ndcg_truncation").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validation_fraction = j.at("validation_fraction").get<double>();
    c.validation_queries = j.at("validation_queries").get<std::vector<std::string>>();
    c.early_stopping_patience = j.at("early_stopping_patience").get<std::size_t>();
    return c;
}

}  // namespace

void TreeEnsemble::save(std::ostream& out) const
{
    json trees_json = json::array();
    for (const auto& tree : trees) {
        json nodes = json::array();
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) {
                nodes.push_back({{"value", node.value}});
            } else {
                nodes.push_back({{"feature", node.feature},
                                 {"threshold", node.threshold},
                                 {"left", node.left},
                                 {"right", node.right}});
            }
        }
        trees_json.push_back({{"nodes", std::move(nodes)}});
    }
    json doc = {
        {"format", "legalir.tree_ensemble"},
        {"version", kModelFormatVersion},
        {"schema_name", schema_name},
        {"feature_names", feature_names},
        {"base_score", base_score},
        {"best_iteration", best_iteration},
        {"config", config_to_json(config)},
        {"trees", std::move(trees_json)},
    };
    out << doc.dump(1) << '\n';
}

TreeEnsemble TreeEnsemble::load(std::istream& in, std::string_view source)
{
    TreeEnsemble model;
    try {
        auto doc = json::parse(in);
        if (doc.at("format") != "legalir.tree_ensemble") {
            throw DataError(std::string(source) + ": not a tree ensemble model");
        }
        if (doc.at("version").get<int>() != kModelFormatVersion) {
            throw DataError(std::string(source) + ": unsupported model version");
        }
        model.schema_name = doc.at("schema_name").get<std::string>();
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        model.base_score = doc.at("base_score").get<double>();
        model.best_iteration = doc.at("best_iteration").get<std::size_t>();
        model.config = config_from_json(doc.at("config"));
        for (const auto& t : doc.at("trees")) {
            RegressionTree tree;
            for (const auto& n : t.at("nodes")) {
                TreeNode node;
                if (n.contains("value")) {
                    node.value = n.at("value").get<double>();
                } else {
                    node.feature = n.at("feature").get<int>();
                    node.threshold = n.at("threshold").get<double>();
                    node.left = n.at("left").get<int>();
                    node.right = n.at("right").get<int>();
                }
                tree.nodes.push_back(node);
            }
            model.trees.push_back(std::move(tree));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string(source) + ": " + e.what());
    }
    model.validate();
    return model;
}

namespace {

struct QueryGroup {
    std::string query_id;
    std::vector<std::size_t> rows;  // indices into the table, candidate-id order
    bool has_positive = false;
    bool has_negative = false;

    [[nodiscard]] bool qualifies() const { return has_positive && has_negative; }
};

std::vector<QueryGroup> group_rows(const FeatureTable& table)
{
    std::map<std::string, QueryGroup> groups;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        auto& g = groups[row.query_id];
        g.query_id = row.query_id;
        g.rows.push_back(r);
        if (row.label && *row.label > 0) {
            g.has_positive = true;
        } else {
            g.has_negative = true;
        }
    }
    std::vector<QueryGroup> out;
    for (auto& [qid, g] : groups) {
        std::sort(g.rows.begin(), g.rows.end(), [&](std::size_t a, std::size_t b) {
            return table.rows[a].candidate_id < table.rows[b].candidate_id;
        });
        out.push_back(std::move(g));
    }
    return out;
}

/// Positions of a query's rows sorted by (score desc, candidate id asc).
std::vector<std::size_t> ranked_order(const QueryGroup& g, std::span<const double> scores)
{
    std::vector<std::size_t> order(g.rows.size());
    std::iota(order.begin(), order.end(), 0);
    // Rows are in candidate-id order, so a stable sort on score breaks ties by id.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[g.rows[a]] > scores[g.rows[b]]; });
    return order;
}

struct GroupMetrics {
    double ndcg = 0.0;
    double precision_at_1 = 0.0;
};

/// Mean NDCG@k and P@1 over groups with at least one relevant row.
GroupMetrics evaluate_groups(const std::vector<const QueryGroup*>& groups, const std::vector<int>& labels,
                             std::span<const double> scores, std::size_t k)
{
    GroupMetrics m;
    std::size_t counted = 0;
    for (const auto* g : groups) {
        if (!g->has_positive) {
            continue;
        }
        auto order = ranked_order(*g, scores);
        std::vector<int> ranked;
        ranked.reserve(order.size());
        for (auto pos : order) {
            ranked.push_back(labels[g->rows[pos]]);
        }
        m.ndcg += ndcg_at_k(ranked, k);
        m.precision_at_1 += ranked.front() > 0 ? 1.0 : 0.0;
        ++counted;
    }
    if (counted > 0) {
        m.ndcg /= static_cast<double>(counted);
        m.precision_at_1 /= static_cast<double>(counted);
    }
    return m;
}

/// Adds LambdaRank gradients (ascent direction) and hessians for one query.
void accumulate_lambdas(const QueryGroup& g, const std::vector<int>& labels, std::span<const double> scores,
                        std::size_t truncation, std::vector<double>& grad, std::vector<double>& hess)
{
    auto order = ranked_order(g, scores);
    const std::size_t n = order.size();

    std::vector<int> sorted_labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        sorted_labels[i] = labels[g.rows[order[i]]];
    }
    std::vector<int> ideal = sorted_labels;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double max_dcg = 0.0;
    for (std::size_t i = 0; i < std::min(truncation, n); ++i) {
        max_dcg += (std::exp2(ideal[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    if (max_dcg <= 0.0) {
        return;
    }
    auto discount = [](std::size_t pos) { return 1.0 / std::log2(static_cast<double>(pos) + 2.0); };

    for (std::size_t i = 0; i < std::min(truncation, n); ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            int li = sorted_labels[i];
            int lj = sorted_labels[j];
            if (li == lj) {
                continue;
            }
            std::size_t hi = li > lj ? i : j;
            std::size_t lo = li > lj ? j : i;
            std::size_t row_hi = g.rows[order[hi]];
            std::size_t row_lo = g.rows[order[lo]];

            double delta_ndcg = std::abs((std::exp2(li) - std::exp2(lj)) * (discount(i) - discount(j))) / max_dcg;
            double rho = 1.0 / (1.0 + std::exp(kSigmoid * (scores[row_hi] - scores[row_lo])));
            double lambda = kSigmoid * rho * delta_ndcg;
            double h = kSigmoid * kSigmoid * rho * (1.0 - rho) * delta_ndcg;
            grad[row_hi] += lambda;
            grad[row_lo] -= lambda;
            hess[row_hi] += h;
            hess[row_lo] += h;
        }
    }
}

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct Leaf {
    int node = 0;
    /// Row ids per feature, each sorted by that feature's value.
    std::vector<std::vector<std::uint32_t>> sorted;
    double grad_sum = 0.0;
    double hess_sum = 0.0;
    SplitCandidate best;

    [[nodiscard]] std::size_t size() const { return sorted.empty() ? 0 : sorted.front().size(); }
};

double leaf_objective(double g, double h)
{
    return g * g / (h + kL2);
}

class TreeBuilder {
  public:
    TreeBuilder(const std::vector<std::vector<double>>& columns, const std::vector<std::vector<std::uint32_t>>& presorted,
                const TrainConfig& config)
        : columns_(columns), presorted_(presorted), config_(config)
    {
    }

    /// Fits one tree to (grad, hess); `row_update` receives each training row's leaf value.
    RegressionTree fit(const std::vector<double>& grad, const std::vector<double>& hess,
                       std::vector<double>& row_update)
    {
        RegressionTree tree;
        tree.nodes.emplace_back();
        std::vector<Leaf> leaves;
        Leaf root;
        root.node = 0;
        root.sorted = presorted_;
        for (auto r : root.sorted.front()) {
            root.grad_sum += grad[r];
            root.hess_sum += hess[r];
        }
        find_split(root, grad, hess);
        leaves.push_back(std::move(root));

        while (leaves.size() < config_.max_leaves) {
            std::size_t pick = leaves.size();
            for (std::size_t l = 0; l < leaves.size(); ++l) {
                if (leaves[l].best.feature >= 0
                    && (pick == leaves.size() || leaves[l].best.gain > leaves[pick].best.gain)) {
                    pick = l;
                }
            }
            if (pick == leaves.size()) {
                break;
            }
            auto [left, right] = split(leaves[pick], tree, grad, hess);
            leaves[pick] = std::move(left);
            leaves.push_back(std::move(right));
        }

        for (const auto& leaf : leaves) {
            double value = 0.0;
            if (leaf.hess_sum > 0.0) {
                value = config_.learning_rate * leaf.grad_sum / (leaf.hess_sum + kL2);
            }
            tree.nodes[static_cast<std::size_t>(leaf.node)].value = value;
            for (auto r : leaf.sorted.front()) {
                row_update[r] = value;
            }
        }
        return tree;
    }

  private:
    void find_split(Leaf& leaf, const std::vector<double>& grad, const std::vector<double>& hess) const
    {
        leaf.best = {};
        const std::size_t n = leaf.size();
        const std::size_t min_leaf = config_.min_samples_leaf;
        if (n < 2 * min_leaf) {
            return;
        }
        const double parent = leaf_objective(leaf.grad_sum, leaf.hess_sum);
        for (std::size_t f = 0; f < leaf.sorted.size(); ++f) {
            const auto& rows = leaf.sorted[f];
            const auto& col = columns_[f];
            double gl = 0.0;
            double hl = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                gl += grad[rows[i]];
                hl += hess[rows[i]];
                std::size_t left_count = i + 1;
                if (left_count < min_leaf) {
                    continue;
                }
                if (n - left_count < min_leaf) {
                    break;
                }
                double v = col[rows[i]];
                if (v == col[rows[i + 1]]) {
                    continue;
                }
                double hr = leaf.hess_sum - hl;
                if (hl < kMinSumHessian || hr < kMinSumHessian) {
                    continue;
                }
                double gain = leaf_objective(gl, hl) + leaf_objective(leaf.grad_sum - gl, hr) - parent;
                if (gain > kMinGain && gain > leaf.best.gain) {
                    leaf.best = {gain, static_cast<int>(f), v};
                }
            }
        }
    }

    std::pair<Leaf, Leaf> split(Leaf& leaf, RegressionTree& tree, const std::vector<double>& grad,
                                const std::vector<double>& hess)
    {
        const auto feature = static_cast<std::size_t>(leaf.best.feature);
        const double threshold = leaf.best.threshold;
        const auto& col = columns_[feature];

        Leaf left;
        Leaf right;
        left.sorted.resize(leaf.sorted.size());
        right.sorted.resize(leaf.sorted.size());
        for (std::size_t f = 0; f < leaf.sorted.size(); ++f) {
            for (auto r : leaf.sorted[f]) {
                (col[r] <= threshold ? left : right).sorted[f].push_back(r);
            }
        }
        for (auto r : left.sorted.front()) {
            left.grad_sum += grad[r];
            left.hess_sum += hess[r];
        }
        right.grad_sum = leaf.grad_sum - left.grad_sum;
        right.hess_sum = leaf.hess_sum - left.hess_sum;

        auto& node = tree.nodes[static_cast<std::size_t>(leaf.node)];
        node.feature = leaf.best.feature;
        node.threshold = threshold;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        left.node = node.left;
        right.node = node.right;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();

        find_split(left, grad, hess);
        find_split(right, grad, hess);
        return {std::move(left), std::move(right)};
    }

    const std::vector<std::vector<double>>& columns_;
    const std::vector<std::vector<std::uint32_t>>& presorted_;
    const TrainConfig& config_;
};

/// Deterministic Fisher-Yates; independent of the standard library's shuffle.
void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(rng() % i);
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace

TrainResult train(const FeatureTable& table, const TrainConfig& config)
{
    config.validate();
    const std::size_t num_features = table.schema.size();
    std::vector<int> labels(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        auto where = "row " + std::to_string(r) + " (" + row.query_id + ", " + row.candidate_id + ")";
        if (!row.label) {
            throw DataError(where + " has no label");
        }
        if (row.values.size() != num_features) {
            throw DataError(where + " has " + std::to_string(row.values.size()) + " values, schema has "
                            + std::to_string(num_features));
        }
        for (double v : row.values) {
            if (!std::isfinite(v)) {
                throw DataError(where + " has a non-finite feature value");
            }
        }
        labels[r] = *row.label > 0 ? 1 : 0;
    }

    auto groups = group_rows(table);
    if (std::none_of(groups.begin(), groups.end(), [](const auto& g) { return g.has_positive; })) {
        throw DataError("training table has no positive labels");
    }
    std::vector<std::size_t> qualifying;
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        (groups[i].qualifies() ? qualifying : others).push_back(i);
    }
    if (qualifying.size() < 2) {
        throw DataError("training needs at least 2 queries with both relevant and irrelevant rows (found "
                        + std::to_string(qualifying.size()) + ")");
    }

    // Train/validation split by query.
    std::vector<char> is_valid(groups.size(), 0);
    bool select_on_train = false;
    if (!config.validation_queries.empty()) {
        std::set<std::string> wanted(config.validation_queries.begin(), config.validation_queries.end());
        for (std::size_t i = 0; i < groups.size(); ++i) {
            if (wanted.erase(groups[i].query_id) > 0) {
                is_valid[i] = 1;
            }
        }
        if (!wanted.empty()) {
            throw DataError("validation query '" + *wanted.begin() + "' has no rows");
        }
    } else if (config.validation_fraction > 0.0) {
        auto shuffled = qualifying;
        seeded_shuffle(shuffled, config.seed);
        auto n_valid = static_cast<std::size_t>(
            std::llround(config.validation_fraction * static_cast<double>(shuffled.size())));
        n_valid = std::clamp<std::size_t>(n_valid, 1, shuffled.size() - 1);
        for (std::size_t k = 0; k < n_valid; ++k) {
            is_valid[shuffled[k]] = 1;
        }
    } else {
        select_on_train = true;
    }

    std::vector<const QueryGroup*> train_groups;
    std::vector<const QueryGroup*> valid_groups;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        (is_valid[i] ? valid_groups : train_groups).push_back(&groups[i]);
    }
    if (select_on_train) {
        valid_groups = train_groups;
    }
    auto qualifies = [](const QueryGroup* g) { return g->qualifies(); };
    if (std::none_of(train_groups.begin(), train_groups.end(), qualifies)) {
        throw DataError("no training query has both relevant and irrelevant rows");
    }
    if (std::none_of(valid_groups.begin(), valid_groups.end(), [](auto* g) { return g->has_positive; })) {
        throw DataError("no validation query has a relevant row");
    }

    // Training rows, column-major, with per-feature presorted orders.
    std::vector<std::size_t> train_rows;
    for (const auto* g : train_groups) {
        train_rows.insert(train_rows.end(), g->rows.begin(), g->rows.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::vector<std::uint32_t> local_of(table.rows.size(), std::numeric_limits<std::uint32_t>::max());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
        local_of[train_rows[i]] = static_cast<std::uint32_t>(i);
    }
    std::vector<std::vector<double>> columns(num_features, std::vector<double>(train_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
        const auto& values = table.rows[train_rows[i]].values;
        for (std::size_t f = 0; f < num_features; ++f) {
            columns[f][i] = values[f];
        }
    }
    std::vector<std::vector<std::uint32_t>> presorted(num_features);
    for (std::size_t f = 0; f < num_features; ++f) {
        auto& order = presorted[f];
        order.resize(train_rows.size());
        std::iota(order.begin(), order.end(), 0U);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return columns[f][a] < columns[f][b]; });
    }

    TrainResult result;
    auto& model = result.model;
    model.schema_name = table.schema.name;
    model.feature_names = table.schema.names;
    model.config = config;
    for (const auto* g : train_groups) {
        result.train_queries.push_back(g->query_id);
    }
    for (const auto* g : valid_groups) {
        result.valid_queries.push_back(g->query_id);
    }

    std::vector<double> scores(table.rows.size(), model.base_score);
    std::vector<double> grad(table.rows.size());
    std::vector<double> hess(table.rows.size());
    std::vector<double> local_grad(train_rows.size());
    std::vector<double> local_hess(train_rows.size());
    std::vector<double> update(train_rows.size());
    TreeBuilder builder(columns, presorted, config);

    double best_valid = -std::numeric_limits<double>::infinity();
    std::size_t best_iter = 0;
    for (std::size_t it = 1; it <= config.num_trees; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(hess.begin(), hess.end(), 0.0);
        for (const auto* g : train_groups) {
            accumulate_lambdas(*g, labels, scores, config.ndcg_truncation, grad, hess);
        }
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            local_grad[i] = grad[train_rows[i]];
            local_hess[i] = hess[train_rows[i]];
        }
        auto tree = builder.fit(local_grad, local_hess, update);

        std::vector<char> updated(table.rows.size(), 0);
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            scores[train_rows[i]] += update[i];
            updated[train_rows[i]] = 1;
        }
        for (const auto* g : valid_groups) {
            for (auto r : g->rows) {
                if (!updated[r]) {
                    scores[r] += tree.predict(table.rows[r].values);
                    updated[r] = 1;
                }
            }
        }
        model.trees.push_back(std::move(tree));

        auto train_m = evaluate_groups(train_groups, labels, scores, config.ndcg_truncation);
        auto valid_m = evaluate_groups(valid_groups, labels, scores, config.ndcg_truncation);
        result.log.push_back({it, train_m.ndcg, valid_m.ndcg, valid_m.precision_at_1});

        if (valid_m.ndcg > best_valid) {
            best_valid = valid_m.ndcg;
            best_iter = it;
        } else if (it - best_iter >= config.early_stopping_patience) {
            break;
        }
    }
    model.trees.resize(best_iter);
    model.best_iteration = best_iter;
    model.validate();
    return result;
}

RunSet predict(const TreeEnsemble& model, const FeatureTable& table)
{
    if (table.schema.names != model.feature_names) {
        throw DataError("feature table schema '" + table.schema.name + "' does not match model schema '"
                        + model.schema_name + "'");
    }
    RunSet runs;
    for (const auto& row : table.rows) {
        if (row.values.size() != model.feature_names.size()) {
            throw DataError("row (" + row.query_id + ", " + row.candidate_id + ") has the wrong number of values");
        }
        auto& list = runs[row.query_id];
        list.query_id = row.query_id;
        list.entries.push_back({row.candidate_id, model.predict_row(row.values)});
    }
    for (auto& [qid, list] : runs) {
        list = make_scored_list(qid, std::move(list.entries));
    }
    return runs;
}

double mean_ndcg(const RunSet& runs, const QrelSet& qrels, std::size_t k)
{
    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& [qid, rel] : qrels) {
        if (rel.empty()) {
            continue;
        }
        // The ideal ranking counts every relevant document, retrieved or not.
        double dcg = 0.0;
        if (auto it = runs.find(qid); it != runs.end()) {
            const auto& entries = it->second.entries;
            for (std::size_t i = 0; i < std::min(k, entries.size()); ++i) {
                if (rel.contains(entries[i].doc_id)) {
                    dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
                }
            }
        }
        double idcg = 0.0;
        for (std::size_t i = 0; i < std::min(k, rel.size()); ++i) {
            idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
        }
        total += dcg / idcg;
        ++counted;
    }
    return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log)
{
    out << "iteration\ttrain_ndcg\tvalid_ndcg\tvalid_precision_at_1\n";
    for (const auto& row : log) {
        out << row.iteration << '\t' << io::format_double(row.train_ndcg) << '\t'
            << io::format_double(row.valid_ndcg) << '\t' << io::format_double(row.valid_precision_at_1) << '\n';
    }
}

}  // namespace legalir
