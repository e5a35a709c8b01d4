#pragma once

#include <string>
#include <vector>

#include "voltcast/feature_matrix.hpp"
#include "voltcast/models/gbt.hpp"
#include "voltcast/models/lstm.hpp"

namespace voltcast::models {

/// Residual-derived convex weights: omega1 = eps2/(eps1+eps2) on f1,
/// omega2 = eps1/(eps1+eps2) on f2; 0.5/0.5 when both residuals vanish.
struct CombineResult {
    double omega1 = 0.5, omega2 = 0.5;
    std::vector<double> combined;
};

CombineResult combine(const std::vector<double>& f1, const std::vector<double>& f2, double eps1,
                      double eps2);

struct EnsembleParams {
    GbtParams gbt;
    LstmParams lstm;
    bool use_gbt = true;
    bool use_lstm = true;
};

/// Two-stage hybrid: the GBT's stage-1 predictions enter the LSTM as an extra
/// input column; the final output is the residual-weighted aggregation of the
/// two submodels (epsilon = mean absolute validation residual).
struct EnsembleModel {
    bool has_gbt = true;
    bool has_lstm = true;
    GbtModel gbt;
    LstmModel lstm;
    double epsilon1 = 0.0;  // LSTM
    double epsilon2 = 0.0;  // GBT
    double omega1 = 0.5;    // weight on the LSTM predictions
    double omega2 = 0.5;
    std::vector<std::string> feature_names;  // fit-time schema
    int seq_len = 22;

    std::string to_json() const;
    static EnsembleModel from_json(const std::string& text);
};

/// Rows whose trailing window of seq_len rows is fully usable.
std::vector<int> sequence_ready_rows(const FeatureMatrix& matrix, int seq_len,
                                     const std::vector<int>& rows);

EnsembleModel fit_ensemble(const FeatureMatrix& matrix, const std::vector<int>& train_rows,
                           const std::vector<int>& val_rows, const EnsembleParams& params);

/// Predictions for rows that are sequence-ready; checks the fit-time schema
/// and reports any missing columns.
std::vector<double> ensemble_predict(const EnsembleModel& model, const FeatureMatrix& matrix,
                                     const std::vector<int>& rows);

/// Stage predictions used by diagnostics/tests: (lstm, gbt) per row.
struct StagePredictions {
    std::vector<double> lstm;
    std::vector<double> gbt;
};
StagePredictions ensemble_stage_predictions(const EnsembleModel& model,
                                            const FeatureMatrix& matrix,
                                            const std::vector<int>& rows);

}  // namespace voltcast::models
