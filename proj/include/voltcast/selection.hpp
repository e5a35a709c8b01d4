#pragma once

#include <string>
#include <vector>

#include "voltcast/feature_matrix.hpp"

namespace voltcast {

/// Greedy forward selection scored by the validation MSE of a ridge proxy.
struct SelectionResult {
    std::vector<std::string> selected;  // greedy inclusion order
    std::vector<double> scores;         // validation MSE after each inclusion
    int budget = 0;
};

struct SfsOptions {
    int budget = 30;
    double ridge_lambda = 1e-3;  // on standardized features
};

/// Ridge regression with an unpenalized intercept; returns predictions for
/// eval_rows. Used as the SFS proxy and exposed for tests.
std::vector<double> ridge_predict(const FeatureMatrix& matrix,
                                  const std::vector<std::string>& cols,
                                  const std::vector<int>& train_rows,
                                  const std::vector<int>& eval_rows, double lambda);

SelectionResult forward_sequential_selection(const FeatureMatrix& standardized,
                                             const std::vector<int>& train_rows,
                                             const std::vector<int>& val_rows,
                                             const SfsOptions& opts);

/// Matrix restricted to the named columns (original order preserved by name list).
FeatureMatrix select_columns(const FeatureMatrix& matrix, const std::vector<std::string>& names);

}  // namespace voltcast
