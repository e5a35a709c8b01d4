#include "voltcast/models/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "voltcast/errors.hpp"
#include "voltcast/stats.hpp"

namespace voltcast::models {

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Exact greedy split: scan each feature in sorted order and compare SSE
// reduction via prefix sums. Ties break toward the lowest feature index,
// then the lowest threshold (guaranteed by scan order and strict >).
SplitChoice best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& residuals,
                       const std::vector<int>& idx, int min_leaf) {
    SplitChoice best;
    const int n = int(idx.size());
    if (n < 2 * min_leaf) return best;

    double total_sum = 0.0;
    for (int i : idx) total_sum += residuals(i);

    std::vector<int> order(idx);
    for (int f = 0; f < x.cols(); ++f) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return x(a, f) < x(b, f) || (x(a, f) == x(b, f) && a < b);
        });
        double left_sum = 0.0;
        for (int i = 0; i + 1 < n; ++i) {
            left_sum += residuals(order[i]);
            const double v = x(order[i], f), v_next = x(order[i + 1], f);
            if (v == v_next) continue;
            const int n_left = i + 1, n_right = n - n_left;
            if (n_left < min_leaf || n_right < min_leaf) continue;
            const double right_sum = total_sum - left_sum;
            // SSE reduction = sum_l^2/n_l + sum_r^2/n_r - sum^2/n
            const double gain = left_sum * left_sum / n_left +
                                right_sum * right_sum / n_right -
                                total_sum * total_sum / n;
            if (gain > best.gain + 1e-12) {
                best.feature = f;
                best.threshold = 0.5 * (v + v_next);
                best.gain = gain;
            }
        }
    }
    return best;
}

int build_node(RegressionTree& tree, const Eigen::MatrixXd& x, const Eigen::VectorXd& residuals,
               const std::vector<int>& idx, int depth, const GbtParams& params) {
    const int node_id = int(tree.nodes.size());
    tree.nodes.emplace_back();

    double sum = 0.0;
    for (int i : idx) sum += residuals(i);
    tree.nodes[node_id].value = idx.empty() ? 0.0 : sum / double(idx.size());

    if (depth >= params.max_depth) return node_id;
    const SplitChoice split = best_split(x, residuals, idx, params.min_samples_leaf);
    if (split.feature < 0) return node_id;

    std::vector<int> left_idx, right_idx;
    for (int i : idx)
        (x(i, split.feature) <= split.threshold ? left_idx : right_idx).push_back(i);

    tree.nodes[node_id].feature = split.feature;
    tree.nodes[node_id].threshold = split.threshold;
    const int left = build_node(tree, x, residuals, left_idx, depth + 1, params);
    const int right = build_node(tree, x, residuals, right_idx, depth + 1, params);
    tree.nodes[node_id].left = left;
    tree.nodes[node_id].right = right;
    return node_id;
}

}  // namespace

double RegressionTree::predict_row(const Eigen::RowVectorXd& x) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
        const TreeNode& nd = nodes[node];
        node = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[node].value;
}

GbtModel fit_gbt(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 const std::vector<std::string>& feature_names, const GbtParams& params) {
    if (x.cols() == 0) throw ModelError("GBT fit with an empty feature set");
    if (x.rows() != y.size()) throw ModelError("GBT fit: feature/target row mismatch");
    const int n = int(x.rows());

    GbtModel model;
    model.params = params;
    model.feature_names = feature_names;
    model.base_prediction = y.mean();

    Eigen::VectorXd pred = Eigen::VectorXd::Constant(n, model.base_prediction);
    Rng rng(params.seed);

    for (int round = 0; round < params.n_rounds; ++round) {
        const Eigen::VectorXd residuals = y - pred;

        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        if (params.subsample < 1.0) {
            rng.shuffle(idx);
            idx.resize(std::max<size_t>(1, size_t(params.subsample * n)));
            std::sort(idx.begin(), idx.end());
        }

        RegressionTree tree;
        build_node(tree, x, residuals, idx, 0, params);
        for (int i = 0; i < n; ++i) pred(i) += params.learning_rate * tree.predict_row(x.row(i));
        model.trees.push_back(std::move(tree));
        model.train_mse.push_back((y - pred).squaredNorm() / n);
    }
    return model;
}

Eigen::VectorXd gbt_predict(const GbtModel& model, const Eigen::MatrixXd& x) {
    Eigen::VectorXd pred = Eigen::VectorXd::Constant(x.rows(), model.base_prediction);
    for (const auto& tree : model.trees)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            pred(i) += model.params.learning_rate * tree.predict_row(x.row(i));
    return pred;
}

namespace {

nlohmann::json node_to_json(const RegressionTree& tree, int id) {
    const TreeNode& nd = tree.nodes[id];
    if (nd.feature < 0) return {{"leaf", nd.value}};
    return {{"feature", nd.feature},
            {"threshold", nd.threshold},
            {"left", node_to_json(tree, nd.left)},
            {"right", node_to_json(tree, nd.right)}};
}

int node_from_json(RegressionTree& tree, const nlohmann::json& j) {
    const int id = int(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("leaf")) {
        tree.nodes[id].value = j.at("leaf");
        return id;
    }
    tree.nodes[id].feature = j.at("feature");
    tree.nodes[id].threshold = j.at("threshold");
    const int left = node_from_json(tree, j.at("left"));
    const int right = node_from_json(tree, j.at("right"));
    tree.nodes[id].left = left;
    tree.nodes[id].right = right;
    return id;
}

}  // namespace

std::string GbtModel::to_json() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "gbt";
    j["base_prediction"] = base_prediction;
    j["feature_names"] = feature_names;
    j["params"] = {{"n_rounds", params.n_rounds},
                   {"max_depth", params.max_depth},
                   {"min_samples_leaf", params.min_samples_leaf},
                   {"learning_rate", params.learning_rate},
                   {"subsample", params.subsample},
                   {"seed", params.seed}};
    auto& trees_json = j["trees"] = nlohmann::json::array();
    for (const auto& tree : trees) trees_json.push_back(node_to_json(tree, 0));
    return j.dump() + "\n";
}

GbtModel GbtModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("kind") != "gbt") throw DataError("not a GBT model document");
    GbtModel m;
    m.base_prediction = j.at("base_prediction");
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto& p = j.at("params");
    m.params.n_rounds = p.at("n_rounds");
    m.params.max_depth = p.at("max_depth");
    m.params.min_samples_leaf = p.at("min_samples_leaf");
    m.params.learning_rate = p.at("learning_rate");
    m.params.subsample = p.at("subsample");
    m.params.seed = p.at("seed");
    for (const auto& tj : j.at("trees")) {
        RegressionTree tree;
        node_from_json(tree, tj);
        m.trees.push_back(std::move(tree));
    }
    return m;
}

}  // namespace voltcast::models
