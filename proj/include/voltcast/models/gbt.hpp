#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace voltcast::models {

struct GbtParams {
    int n_rounds = 200;
    int max_depth = 3;
    int min_samples_leaf = 5;
    double learning_rate = 0.1;
    double subsample = 1.0;
    uint64_t seed = 42;
};

/// Binary regression tree stored as a flat node array (root = 0).
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;  // leaf output
    int left = -1, right = -1;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict_row(const Eigen::RowVectorXd& x) const;
};

/// Squared-loss gradient boosting: each round fits a depth-limited tree to the
/// current residuals, predictions advance by learning_rate * tree output.
struct GbtModel {
    GbtParams params;
    double base_prediction = 0.0;  // training-target mean
    std::vector<RegressionTree> trees;
    std::vector<std::string> feature_names;
    std::vector<double> train_mse;  // full-sample MSE after each round

    std::string to_json() const;
    static GbtModel from_json(const std::string& text);
};

GbtModel fit_gbt(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 const std::vector<std::string>& feature_names, const GbtParams& params);

Eigen::VectorXd gbt_predict(const GbtModel& model, const Eigen::MatrixXd& x);

}  // namespace voltcast::models
