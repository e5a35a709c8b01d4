#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "voltcast/feature_matrix.hpp"

namespace voltcast::models {

enum class HarVariant { HarCj, HarqCj };

std::string to_string(HarVariant v);
HarVariant har_variant_from_string(const std::string& s);

/// OLS fit of next-day volatility on daily/weekly/monthly continuous lags and
/// the daily jump; the HARQ variant adds a sqrt(RQ)*RV_d measurement-noise
/// term and a negative-return leverage term.
struct HarModel {
    HarVariant variant = HarVariant::HarCj;
    std::vector<std::string> term_names;  // includes "intercept"
    Eigen::VectorXd coef;
    Eigen::VectorXd std_errors;
    double r2 = 0.0;
    double resid_var = 0.0;
    int n_obs = 0;

    std::string to_json() const;
    static HarModel from_json(const std::string& text);
};

/// Columns each variant reads from the raw (unstandardized) feature matrix.
std::vector<std::string> har_required_columns(HarVariant v);

HarModel fit_har(const FeatureMatrix& raw, const std::vector<int>& rows, HarVariant variant);

std::vector<double> har_predict(const HarModel& model, const FeatureMatrix& raw,
                                const std::vector<int>& rows);

}  // namespace voltcast::models
