#include "voltcast/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "voltcast/errors.hpp"
#include "voltcast/stats.hpp"

namespace voltcast {

std::vector<double> ridge_predict(const FeatureMatrix& matrix,
                                  const std::vector<std::string>& cols,
                                  const std::vector<int>& train_rows,
                                  const std::vector<int>& eval_rows, double lambda) {
    const size_t p = cols.size();
    Eigen::MatrixXd x(train_rows.size(), p);
    Eigen::VectorXd y(train_rows.size());
    for (size_t i = 0; i < train_rows.size(); ++i) {
        y(i) = matrix.target[train_rows[i]];
        for (size_t j = 0; j < p; ++j) x(i, j) = matrix.col(cols[j]).values[train_rows[i]];
    }
    const double y_mean = y.mean();
    Eigen::VectorXd beta;
    if (p > 0) {
        const Eigen::VectorXd yc = y.array() - y_mean;
        Eigen::MatrixXd gram = x.transpose() * x;
        gram.diagonal().array() += lambda;
        beta = gram.ldlt().solve(x.transpose() * yc);
    }

    std::vector<double> preds;
    preds.reserve(eval_rows.size());
    for (int r : eval_rows) {
        double v = y_mean;
        for (size_t j = 0; j < p; ++j) v += beta(j) * matrix.col(cols[j]).values[r];
        preds.push_back(v);
    }
    return preds;
}

namespace {

double validation_mse(const FeatureMatrix& matrix, const std::vector<std::string>& cols,
                      const std::vector<int>& train_rows, const std::vector<int>& val_rows,
                      double lambda) {
    const auto preds = ridge_predict(matrix, cols, train_rows, val_rows, lambda);
    double s = 0.0;
    for (size_t i = 0; i < val_rows.size(); ++i) {
        const double e = preds[i] - matrix.target[val_rows[i]];
        s += e * e;
    }
    return s / double(val_rows.size());
}

}  // namespace

SelectionResult forward_sequential_selection(const FeatureMatrix& standardized,
                                             const std::vector<int>& train_rows,
                                             const std::vector<int>& val_rows,
                                             const SfsOptions& opts) {
    if (train_rows.empty() || val_rows.empty())
        throw DataError("SFS needs non-empty train and validation splits");
    if (int(standardized.columns.size()) <= 0) throw DataError("SFS over an empty feature matrix");

    {
        std::vector<double> y;
        for (int r : train_rows) y.push_back(standardized.target[r]);
        if (sample_variance(y) <= 0.0)
            throw DataError("SFS target is constant on the training split");
    }

    SelectionResult result;
    result.budget = opts.budget;

    std::vector<std::string> candidates = standardized.column_names();
    std::sort(candidates.begin(), candidates.end());  // deterministic argmin tie-break

    double best_so_far =
        validation_mse(standardized, {}, train_rows, val_rows, opts.ridge_lambda);
    // "Improves" means beating the incumbent by more than 1e-6 of the
    // intercept-only baseline; this keeps exact duplicates of selected columns
    // out (their only gain is ridge shrinkage relief, orders below that).
    const double min_gain = 1e-6 * std::max(best_so_far, 1e-300);

    while (int(result.selected.size()) < opts.budget && !candidates.empty()) {
        std::string best_col;
        double best_score = std::numeric_limits<double>::infinity();
        for (const auto& cand : candidates) {
            auto cols = result.selected;
            cols.push_back(cand);
            const double score =
                validation_mse(standardized, cols, train_rows, val_rows, opts.ridge_lambda);
            if (score < best_score) {  // strict: first (lexicographically lowest) wins ties
                best_score = score;
                best_col = cand;
            }
        }
        if (!(best_score < best_so_far - min_gain)) break;  // no candidate improves
        best_so_far = best_score;
        result.selected.push_back(best_col);
        result.scores.push_back(best_score);
        candidates.erase(std::find(candidates.begin(), candidates.end(), best_col));
    }
    return result;
}

FeatureMatrix select_columns(const FeatureMatrix& matrix, const std::vector<std::string>& names) {
    FeatureMatrix out;
    out.days = matrix.days;
    out.target_name = matrix.target_name;
    out.target = matrix.target;
    out.usable = matrix.usable;
    for (const auto& name : names) out.columns.push_back(matrix.col(name));
    return out;
}

}  // namespace voltcast
