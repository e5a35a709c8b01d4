#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "voltcast/calendar.hpp"
#include "voltcast/feature_matrix.hpp"
#include "voltcast/market_data.hpp"

namespace voltcast::eval {

struct ForecastRecord {
    Date day;
    std::string model;
    double prediction = 0.0;
    double actual = 0.0;
};

struct MetricReport {
    std::string model;
    double mae = 0.0, mse = 0.0, mape = 0.0;
    int n = 0;
    int mape_excluded = 0;  // zero-actual rows dropped from MAPE only
};

/// MAE = mean|e|, MSE = mean e^2, MAPE = mean|e/actual| (zero actuals excluded
/// and counted).
MetricReport metrics(const std::vector<ForecastRecord>& records);

struct DmOptions {
    double significance = 0.10;
    /// Long-run variance lags: 0 = plain sample variance (one-step default),
    /// >0 = Newey-West with Bartlett weights.
    int newey_west_lags = 0;
    /// Harvey-Leybourne-Newbold small-sample factor for h=1.
    bool small_sample = false;
};

struct DmResult {
    std::string model_a, model_b;
    double statistic = 0.0;
    double p_value = 1.0;
    bool indistinguishable = false;  // all loss differentials identical (zero variance)
    bool reject = false;
    double significance = 0.10;
    std::string loss = "MSE";
    int n = 0;
};

/// One-sided Diebold-Mariano on squared-error loss; alternative "model A more
/// accurate" (negative statistic, p from the standard normal left tail).
DmResult dm_test(const std::vector<double>& errors_a, const std::vector<double>& errors_b,
                 const DmOptions& opts = {});

struct RejectionHeatmap {
    std::vector<std::string> models;
    std::vector<std::vector<int>> counts;  // [a][b] = segments where A beat B
    int segments = 0;
    int segment_size = 50;
    double significance = 0.10;
};

/// Splits each model's out-of-sample records into consecutive segments and
/// counts per-pair DM rejections; a trailing partial segment is dropped.
RejectionHeatmap rejection_heatmap(const std::map<std::string, std::vector<ForecastRecord>>& records,
                                   int segment_size = 50, double significance = 0.10);

// ---------------------------------------------------------------------------
// Walk-forward backtest
// ---------------------------------------------------------------------------
struct BacktestDataset {
    FeatureMatrix raw;      // full assembled matrix (HAR baselines read this)
    FeatureMatrix reduced;  // post-selection/KPCA matrix (ensemble reads this)
    DailySeries daily_returns;
};

class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual std::string name() const = 0;
    /// Fit on rows [0, end_row) of the dataset (only usable rows enter fits).
    virtual void fit(const BacktestDataset& data, int end_row) = 0;
    /// One-step forecast of the target at `row` (strictly after the fit window).
    virtual double predict_row(const BacktestDataset& data, int row) = 0;
    /// Rows this model can score given the scheme (default: usable rows).
    virtual bool can_score(const BacktestDataset& data, int row) const;
};

struct BacktestScheme {
    int test_start_row = 0;  // first forecast row
    int refit_every = 20;    // 0 or negative = single fit, static forecasts
};

/// Expanding-window walk-forward: fit on rows < t, predict row t, refit every
/// `refit_every` test steps. Emits aligned records for every model on every
/// row all models can score.
std::vector<ForecastRecord> rolling_backtest(
    const std::vector<std::shared_ptr<Forecaster>>& models, const BacktestDataset& data,
    const BacktestScheme& scheme);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------
void write_records_csv(std::ostream& out, const std::vector<ForecastRecord>& records);
std::vector<ForecastRecord> read_records_csv(std::istream& in);
std::map<std::string, std::vector<ForecastRecord>> records_by_model(
    const std::vector<ForecastRecord>& records);

std::string metrics_json(const std::vector<MetricReport>& reports);
std::string metrics_table(const std::vector<MetricReport>& reports);
std::string dm_results_json(const std::vector<DmResult>& results);
void write_heatmap_csv(std::ostream& out, const RejectionHeatmap& heatmap);

}  // namespace voltcast::eval
