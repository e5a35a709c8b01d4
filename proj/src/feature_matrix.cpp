#include "voltcast/feature_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include <nlohmann/json.hpp>

#include "voltcast/csv.hpp"
#include "voltcast/errors.hpp"
#include "voltcast/stats.hpp"

namespace voltcast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr int kWeeklyWindow = 5;
constexpr int kMonthlyWindow = 22;

// Canonical exogenous CSV columns and their feature groups.
struct ExogSpec {
    const char* name;
    const char* unit;
    const char* group;
};
constexpr ExogSpec kExogSpecs[] = {
    {"air_temp_c", "degC", kGroupWeather},
    {"wind_speed_ms", "m/s", kGroupWeather},
    {"rel_humidity_pct", "%", kGroupWeather},
    {"mslp_hpa", "hPa", kGroupWeather},
    {"supply_mw", "MW", kGroupSupplyDemand},
    {"demand_mw", "MW", kGroupSupplyDemand},
    {"retail_price", "$/MWh", kGroupSupplyDemand},
    {"price_vic", "$/MWh", kGroupRegional},
    {"price_qld", "$/MWh", kGroupRegional},
    {"price_sa", "$/MWh", kGroupRegional},
    {"price_tas", "$/MWh", kGroupRegional},
    {"weather_rating", "score", kGroupRating},
};

const ExogSpec* find_exog_spec(const std::string& name) {
    for (const auto& s : kExogSpecs)
        if (name == s.name) return &s;
    return nullptr;
}

double window_mean(const std::vector<double>& v, size_t t, int window) {
    if (t + 1 < size_t(window)) return kNaN;
    double s = 0.0;
    for (int k = 0; k < window; ++k) s += v[t - k];
    return s / window;
}

}  // namespace

int FeatureMatrix::col_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return int(i);
    return -1;
}

const FeatureColumn& FeatureMatrix::col(const std::string& name) const {
    int i = col_index(name);
    if (i < 0) throw DataError("feature matrix has no column '" + name + "'");
    return columns[i];
}

std::vector<std::string> FeatureMatrix::column_names() const {
    std::vector<std::string> names;
    names.reserve(columns.size());
    for (const auto& c : columns) names.push_back(c.name);
    return names;
}

Eigen::MatrixXd FeatureMatrix::dense(const std::vector<int>& rows) const {
    Eigen::MatrixXd x(rows.size(), columns.size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < columns.size(); ++j) x(i, j) = columns[j].values[rows[i]];
    return x;
}

std::vector<int> FeatureMatrix::usable_rows() const {
    std::vector<int> rows;
    for (size_t i = 0; i < usable.size(); ++i)
        if (usable[i]) rows.push_back(int(i));
    return rows;
}

TargetSpec target_spec_from_string(const std::string& s) {
    if (s == "rv" || s == "levels") return TargetSpec::Levels;
    if (s == "ln_rv" || s == "log") return TargetSpec::Log;
    if (s == "sqrt_rv" || s == "sqrt") return TargetSpec::Sqrt;
    throw ConfigError("unknown forecast target '" + s + "' (expected rv, ln_rv or sqrt_rv)");
}

std::string to_string(TargetSpec t) {
    switch (t) {
        case TargetSpec::Levels: return "rv";
        case TargetSpec::Log: return "ln_rv";
        case TargetSpec::Sqrt: return "sqrt_rv";
    }
    return "rv";
}

int ExogenousTable::col_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return int(i);
    return -1;
}

ExogenousTable read_exogenous_csv(std::istream& in) {
    CsvTable t = read_csv(in);
    const int date_col = t.require_col("date");
    ExogenousTable table;
    for (size_t j = 0; j < t.header.size(); ++j) {
        if (int(j) == date_col) continue;
        FeatureColumn c;
        c.name = t.header[j];
        if (const ExogSpec* spec = find_exog_spec(c.name)) {
            c.unit = spec->unit;
            c.group = spec->group;
        } else {
            c.group = "exogenous";
        }
        table.columns.push_back(std::move(c));
    }
    for (size_t r = 0; r < t.rows.size(); ++r) {
        table.days.push_back(parse_date(t.rows[r][date_col]));
        size_t k = 0;
        for (size_t j = 0; j < t.header.size(); ++j) {
            if (int(j) == date_col) continue;
            table.columns[k++].values.push_back(
                parse_double_cell(t.rows[r][j], r + 1, t.header[j]));
        }
    }
    return table;
}

void write_exogenous_csv(std::ostream& out, const ExogenousTable& table) {
    std::vector<std::string> header = {"date"};
    for (const auto& c : table.columns) header.push_back(c.name);
    write_csv_row(out, header);
    for (size_t r = 0; r < table.days.size(); ++r) {
        std::vector<std::string> row = {format_date(table.days[r])};
        for (const auto& c : table.columns) row.push_back(format_double(c.values[r]));
        write_csv_row(out, row);
    }
}

std::vector<FeatureColumn> build_har_lags(const std::vector<DailyRealizedMeasures>& measures) {
    if (measures.size() < size_t(kMonthlyWindow))
        throw DataError("HAR lags need at least 22 consecutive days of measures");

    const size_t n = measures.size();
    std::vector<double> cv(n), jump(n), rv(n);
    for (size_t t = 0; t < n; ++t) {
        cv[t] = measures[t].cv;
        jump[t] = measures[t].jump;
        rv[t] = measures[t].rv;
    }

    auto make = [&](const std::string& name, const std::vector<double>& base, int window) {
        FeatureColumn c{name, "($/MWh)^2", kGroupPriceFluct, {}};
        c.values.resize(n);
        for (size_t t = 0; t < n; ++t) c.values[t] = window_mean(base, t, window);
        return c;
    };

    std::vector<FeatureColumn> cols;
    cols.push_back(make("cv_d", cv, 1));
    cols.push_back(make("cv_w", cv, kWeeklyWindow));
    cols.push_back(make("cv_m", cv, kMonthlyWindow));
    cols.push_back(make("j_d", jump, 1));
    cols.push_back(make("j_w", jump, kWeeklyWindow));
    cols.push_back(make("j_m", jump, kMonthlyWindow));
    cols.push_back(make("rv_d", rv, 1));
    cols.push_back(make("rv_w", rv, kWeeklyWindow));
    cols.push_back(make("rv_m", rv, kMonthlyWindow));
    return cols;
}

FeatureMatrix assemble(const std::vector<DailyRealizedMeasures>& measures,
                       const ExogenousTable& exog, const AssembleOptions& opts) {
    if (measures.empty()) throw DataError("assemble: no realized measures");

    const auto enabled = [&](const std::string& group) {
        return opts.disabled_groups.find(group) == opts.disabled_groups.end();
    };

    FeatureMatrix out;
    for (const auto& m : measures) out.days.push_back(m.day);
    const size_t n = out.days.size();

    if (enabled(kGroupPriceFluct)) {
        for (auto& c : build_har_lags(measures)) out.columns.push_back(std::move(c));

        FeatureColumn sqrt_rq{"sqrt_rq", "$/MWh", kGroupPriceFluct, {}};
        for (const auto& m : measures) sqrt_rq.values.push_back(std::sqrt(std::max(m.rq, 0.0)));
        out.columns.push_back(std::move(sqrt_rq));

        if (!opts.daily_returns.days.empty()) {
            std::map<int32_t, double> by_day;
            for (size_t i = 0; i < opts.daily_returns.days.size(); ++i)
                by_day[opts.daily_returns.days[i].days] = opts.daily_returns.values[i];
            FeatureColumn ret{"ret_d", "$/MWh", kGroupPriceFluct, {}};
            for (const auto& day : out.days) {
                auto it = by_day.find(day.days);
                ret.values.push_back(it == by_day.end() ? kNaN : it->second);
            }
            out.columns.push_back(std::move(ret));
        }
    } else if (measures.size() < size_t(kMonthlyWindow)) {
        throw DataError("assemble needs at least 22 days of measures");
    }

    // Join exogenous columns by date (missing days become masked rows).
    std::map<int32_t, int> exog_row;
    for (size_t i = 0; i < exog.days.size(); ++i) exog_row[exog.days[i].days] = int(i);
    bool overlap = exog.days.empty();
    for (const auto& day : out.days)
        if (exog_row.count(day.days)) {
            overlap = true;
            break;
        }
    if (!overlap) throw DataError("assemble: exogenous table shares no dates with the measures");

    for (const auto& src : exog.columns) {
        if (!enabled(src.group)) continue;
        FeatureColumn c{src.name, src.unit, src.group, {}};
        c.values.reserve(n);
        for (const auto& day : out.days) {
            auto it = exog_row.find(day.days);
            c.values.push_back(it == exog_row.end() ? kNaN : src.values[it->second]);
        }
        out.columns.push_back(std::move(c));
    }

    {
        std::set<std::string> seen;
        for (const auto& c : out.columns)
            if (!seen.insert(c.name).second)
                throw DataError("duplicate feature column '" + c.name + "'");
    }

    // Target: next row's RV under the chosen transform.
    out.target_name = to_string(opts.target) + "_next";
    out.target.assign(n, kNaN);
    for (size_t t = 0; t + 1 < n; ++t) {
        const double rv_next = measures[t + 1].rv;
        switch (opts.target) {
            case TargetSpec::Levels: out.target[t] = rv_next; break;
            case TargetSpec::Log: out.target[t] = rv_next > 0.0 ? std::log(rv_next) : kNaN; break;
            case TargetSpec::Sqrt: out.target[t] = std::sqrt(std::max(rv_next, 0.0)); break;
        }
    }

    out.usable.assign(n, 1);
    for (size_t t = 0; t < n; ++t) {
        if (std::isnan(out.target[t])) out.usable[t] = 0;
        for (const auto& c : out.columns)
            if (std::isnan(c.values[t])) {
                out.usable[t] = 0;
                break;
            }
    }
    return out;
}

Standardization fit_standardization(const FeatureMatrix& matrix,
                                    const std::vector<int>& train_rows) {
    if (train_rows.empty()) throw DataError("standardization needs a non-empty training split");
    Standardization s;
    for (const auto& c : matrix.columns) {
        std::vector<double> vals;
        vals.reserve(train_rows.size());
        for (int r : train_rows)
            if (!std::isnan(c.values[r])) vals.push_back(c.values[r]);
        if (vals.empty()) throw DataError("column '" + c.name + "' has no finite training values");
        const double m = mean(vals);
        const double sd = std::sqrt(sample_variance(vals));
        s.names.push_back(c.name);
        s.mean_.push_back(m);
        s.stdev.push_back(sd > 0.0 ? sd : 1.0);
    }
    return s;
}

FeatureMatrix apply_standardization(const FeatureMatrix& matrix, const Standardization& s) {
    FeatureMatrix out = matrix;
    for (auto& c : out.columns) {
        auto it = std::find(s.names.begin(), s.names.end(), c.name);
        if (it == s.names.end())
            throw DataError("no standardization constants for column '" + c.name + "'");
        const size_t k = it - s.names.begin();
        for (auto& v : c.values) v = (v - s.mean_[k]) / s.stdev[k];
    }
    return out;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix) {
    std::vector<std::string> header = {"date"};
    for (const auto& c : matrix.columns) header.push_back(c.name);
    header.push_back("target");
    header.push_back("usable");
    write_csv_row(out, header);
    for (size_t r = 0; r < matrix.n_rows(); ++r) {
        std::vector<std::string> row = {format_date(matrix.days[r])};
        for (const auto& c : matrix.columns) row.push_back(format_double(c.values[r]));
        row.push_back(format_double(matrix.target[r]));
        row.push_back(matrix.usable[r] ? "1" : "0");
        write_csv_row(out, row);
    }
}

FeatureMatrix read_feature_csv(std::istream& in) {
    CsvTable t = read_csv(in);
    const int date_col = t.require_col("date");
    const int target_col = t.require_col("target");
    const int usable_col = t.require_col("usable");
    FeatureMatrix m;
    for (size_t j = 0; j < t.header.size(); ++j) {
        if (int(j) == date_col || int(j) == target_col || int(j) == usable_col) continue;
        m.columns.push_back({t.header[j], "", "", {}});
    }
    m.target_name = "target";
    for (size_t r = 0; r < t.rows.size(); ++r) {
        m.days.push_back(parse_date(t.rows[r][date_col]));
        m.target.push_back(parse_double_cell(t.rows[r][target_col], r + 1, "target"));
        m.usable.push_back(t.rows[r][usable_col] == "1" ? 1 : 0);
        size_t k = 0;
        for (size_t j = 0; j < t.header.size(); ++j) {
            if (int(j) == date_col || int(j) == target_col || int(j) == usable_col) continue;
            m.columns[k++].values.push_back(parse_double_cell(t.rows[r][j], r + 1, t.header[j]));
        }
    }
    return m;
}

std::string feature_sidecar_json(const FeatureMatrix& matrix, const Standardization* std_constants) {
    nlohmann::json j;
    j["target"] = matrix.target_name;
    j["n_rows"] = matrix.n_rows();
    j["n_usable"] = matrix.usable_rows().size();
    auto& cols = j["columns"] = nlohmann::json::array();
    for (const auto& c : matrix.columns)
        cols.push_back({{"name", c.name}, {"unit", c.unit}, {"group", c.group}});
    if (std_constants) {
        auto& st = j["standardization"] = nlohmann::json::array();
        for (size_t i = 0; i < std_constants->names.size(); ++i)
            st.push_back({{"name", std_constants->names[i]},
                          {"mean", std_constants->mean_[i]},
                          {"stdev", std_constants->stdev[i]}});
    }
    return j.dump(2) + "\n";
}

}  // namespace voltcast
