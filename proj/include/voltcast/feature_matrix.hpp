#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "voltcast/calendar.hpp"
#include "voltcast/market_data.hpp"
#include "voltcast/realized_measures.hpp"

namespace voltcast {

// Feature groups used by the ablation toggles.
inline constexpr const char* kGroupPriceFluct = "price_fluctuations";
inline constexpr const char* kGroupWeather = "weather";
inline constexpr const char* kGroupSupplyDemand = "supply_demand";
inline constexpr const char* kGroupRegional = "regional";
inline constexpr const char* kGroupRating = "rating";

struct FeatureColumn {
    std::string name;
    std::string unit;
    std::string group;
    std::vector<double> values;  // NaN = missing
};

/// Day-indexed named feature columns aligned to a one-step-ahead target.
struct FeatureMatrix {
    std::vector<Date> days;
    std::vector<FeatureColumn> columns;
    std::string target_name;
    std::vector<double> target;
    std::vector<uint8_t> usable;  // row mask: 1 = enters fits/evaluation

    size_t n_rows() const { return days.size(); }
    int col_index(const std::string& name) const;
    const FeatureColumn& col(const std::string& name) const;
    std::vector<std::string> column_names() const;

    /// Dense matrix over the given rows in column order (no mask filtering).
    Eigen::MatrixXd dense(const std::vector<int>& rows) const;
    std::vector<int> usable_rows() const;
};

enum class TargetSpec { Levels, Log, Sqrt };
TargetSpec target_spec_from_string(const std::string& s);
std::string to_string(TargetSpec t);

/// Daily exogenous factors (weather, supply/demand, regional prices, rating).
struct ExogenousTable {
    std::vector<Date> days;
    std::vector<FeatureColumn> columns;  // values aligned to days

    int col_index(const std::string& name) const;
};

ExogenousTable read_exogenous_csv(std::istream& in);
void write_exogenous_csv(std::ostream& out, const ExogenousTable& table);

/// HAR-style lag columns from the realized-measure series: for x in {cv, j, rv},
/// x_d(t) = x_t, x_w(t) = mean(x_{t-4..t}), x_m(t) = mean(x_{t-21..t}).
/// Rows without full monthly history get NaN cells.
std::vector<FeatureColumn> build_har_lags(const std::vector<DailyRealizedMeasures>& measures);

struct AssembleOptions {
    TargetSpec target = TargetSpec::Levels;
    std::set<std::string> disabled_groups;
    /// Daily close-to-close price differences (for the leverage indicator);
    /// aligned by date, may be empty.
    DailySeries daily_returns;
};

/// Inner-joins measure-derived columns with the exogenous table; the target is
/// the next row's RV under the chosen transform. Rows lacking any enabled
/// column, or without a next-day target, are masked.
FeatureMatrix assemble(const std::vector<DailyRealizedMeasures>& measures,
                       const ExogenousTable& exog, const AssembleOptions& opts);

// ---------------------------------------------------------------------------
// Standardization (train-split mean/variance), applied before SFS and KPCA
// ---------------------------------------------------------------------------
struct Standardization {
    std::vector<std::string> names;
    std::vector<double> mean_;
    std::vector<double> stdev;  // 1.0 for constant columns
};

Standardization fit_standardization(const FeatureMatrix& matrix, const std::vector<int>& train_rows);
FeatureMatrix apply_standardization(const FeatureMatrix& matrix, const Standardization& s);

// ---------------------------------------------------------------------------
// Persistence: CSV of days/columns/target/mask plus a JSON sidecar with
// column provenance, masks and standardization constants.
// ---------------------------------------------------------------------------
void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix);
FeatureMatrix read_feature_csv(std::istream& in);
std::string feature_sidecar_json(const FeatureMatrix& matrix, const Standardization* std_constants);

}  // namespace voltcast
