#include "voltcast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "voltcast/csv.hpp"
#include "voltcast/errors.hpp"
#include "voltcast/stats.hpp"

namespace voltcast::eval {

MetricReport metrics(const std::vector<ForecastRecord>& records) {
    if (records.empty()) throw DataError("metrics over an empty record set");
    MetricReport report;
    report.model = records.front().model;
    report.n = int(records.size());

    double abs_sum = 0.0, sq_sum = 0.0, ape_sum = 0.0;
    int ape_n = 0;
    for (const auto& r : records) {
        const double e = r.prediction - r.actual;
        abs_sum += std::fabs(e);
        sq_sum += e * e;
        if (r.actual != 0.0) {
            ape_sum += std::fabs(e / r.actual);
            ++ape_n;
        } else {
            ++report.mape_excluded;
        }
    }
    report.mae = abs_sum / report.n;
    report.mse = sq_sum / report.n;
    report.mape = ape_n > 0 ? ape_sum / ape_n : 0.0;
    return report;
}

DmResult dm_test(const std::vector<double>& errors_a, const std::vector<double>& errors_b,
                 const DmOptions& opts) {
    if (errors_a.size() != errors_b.size())
        throw DataError("DM test needs error vectors of equal length");
    const int n = int(errors_a.size());
    if (n < 10) throw DataError("DM test needs at least 10 observations");

    std::vector<double> d(n);
    for (int t = 0; t < n; ++t)
        d[t] = errors_a[t] * errors_a[t] - errors_b[t] * errors_b[t];

    DmResult res;
    res.significance = opts.significance;
    res.n = n;

    const double d_bar = mean(d);
    // Long-run variance with 1/n normalization (Bartlett weights beyond lag 0).
    double v = 0.0;
    for (double x : d) v += (x - d_bar) * (x - d_bar);
    v /= n;
    for (int lag = 1; lag <= opts.newey_west_lags; ++lag) {
        double gamma = 0.0;
        for (int t = lag; t < n; ++t) gamma += (d[t] - d_bar) * (d[t - lag] - d_bar);
        gamma /= n;
        v += 2.0 * (1.0 - double(lag) / double(opts.newey_west_lags + 1)) * gamma;
    }

    if (v <= 0.0) {
        res.indistinguishable = true;
        res.statistic = 0.0;
        res.p_value = 1.0;
        res.reject = false;
        return res;
    }

    double stat = d_bar / std::sqrt(v / n);
    if (opts.small_sample) stat *= std::sqrt(double(n - 1) / double(n));  // HLN factor at h=1
    res.statistic = stat;
    res.p_value = normal_cdf(stat);  // one-sided: A more accurate <=> negative stat
    res.reject = res.p_value < opts.significance;
    return res;
}

RejectionHeatmap rejection_heatmap(const std::map<std::string, std::vector<ForecastRecord>>& records,
                                   int segment_size, double significance) {
    if (records.empty()) throw DataError("rejection heatmap needs at least one model");
    RejectionHeatmap hm;
    hm.segment_size = segment_size;
    hm.significance = significance;
    for (const auto& [model, _] : records) hm.models.push_back(model);

    // Per-model error series aligned by record order; lengths must agree.
    std::map<std::string, std::vector<double>> errors;
    size_t n = 0;
    bool first = true;
    for (const auto& [model, recs] : records) {
        std::vector<double> e;
        e.reserve(recs.size());
        for (const auto& r : recs) e.push_back(r.prediction - r.actual);
        if (first) {
            n = e.size();
            first = false;
        } else if (e.size() != n) {
            throw DataError("models carry different record counts; backtest misaligned");
        }
        errors[model] = std::move(e);
    }

    hm.segments = int(n / size_t(segment_size));  // trailing partial dropped
    if (hm.segments < 1)
        throw DataError("rejection heatmap needs at least one full segment of " +
                        std::to_string(segment_size) + " records");

    const size_t k = hm.models.size();
    hm.counts.assign(k, std::vector<int>(k, 0));
    DmOptions opts;
    opts.significance = significance;

    for (int seg = 0; seg < hm.segments; ++seg) {
        const size_t lo = size_t(seg) * segment_size;
        for (size_t a = 0; a < k; ++a) {
            for (size_t b = 0; b < k; ++b) {
                if (a == b) continue;
                const auto& ea = errors[hm.models[a]];
                const auto& eb = errors[hm.models[b]];
                const std::vector<double> slice_a(ea.begin() + lo, ea.begin() + lo + segment_size);
                const std::vector<double> slice_b(eb.begin() + lo, eb.begin() + lo + segment_size);
                if (dm_test(slice_a, slice_b, opts).reject) ++hm.counts[a][b];
            }
        }
    }
    return hm;
}

bool Forecaster::can_score(const BacktestDataset& data, int row) const {
    return data.raw.usable[row] != 0;
}

std::vector<ForecastRecord> rolling_backtest(
    const std::vector<std::shared_ptr<Forecaster>>& models, const BacktestDataset& data,
    const BacktestScheme& scheme) {
    const int n = int(data.raw.n_rows());
    if (scheme.test_start_row <= 0 || scheme.test_start_row >= n)
        throw DataError("backtest test span must start after the training span");

    // A row enters the record set only if every model can score it, so all
    // models share identical record days.
    std::vector<int> scored_rows;
    for (int t = scheme.test_start_row; t < n; ++t) {
        bool ok = true;
        for (const auto& model : models) ok = ok && model->can_score(data, t);
        if (ok) scored_rows.push_back(t);
    }

    std::vector<ForecastRecord> records;
    int steps_since_fit = -1;
    int fitted_end = -1;
    for (int t : scored_rows) {
        const bool need_fit =
            fitted_end < 0 || (scheme.refit_every > 0 && steps_since_fit >= scheme.refit_every);
        if (need_fit) {
            for (const auto& model : models) model->fit(data, t);
            fitted_end = t;
            steps_since_fit = 0;
        }
        for (const auto& model : models) {
            ForecastRecord rec;
            // The target of row t is realized on the next row's day.
            rec.day = (t + 1 < n) ? data.raw.days[t + 1] : data.raw.days[t].next();
            rec.model = model->name();
            rec.prediction = model->predict_row(data, t);
            rec.actual = data.raw.target[t];
            records.push_back(std::move(rec));
        }
        ++steps_since_fit;
    }
    return records;
}

void write_records_csv(std::ostream& out, const std::vector<ForecastRecord>& records) {
    write_csv_row(out, {"date", "model", "prediction", "actual"});
    for (const auto& r : records)
        write_csv_row(out, {format_date(r.day), r.model, format_double(r.prediction),
                            format_double(r.actual)});
}

std::vector<ForecastRecord> read_records_csv(std::istream& in) {
    CsvTable t = read_csv(in);
    const int date_col = t.require_col("date");
    const int model_col = t.require_col("model");
    const int pred_col = t.require_col("prediction");
    const int actual_col = t.require_col("actual");
    std::vector<ForecastRecord> out;
    for (size_t r = 0; r < t.rows.size(); ++r) {
        ForecastRecord rec;
        rec.day = parse_date(t.rows[r][date_col]);
        rec.model = t.rows[r][model_col];
        rec.prediction = parse_double_cell(t.rows[r][pred_col], r + 1, "prediction");
        rec.actual = parse_double_cell(t.rows[r][actual_col], r + 1, "actual");
        out.push_back(std::move(rec));
    }
    return out;
}

std::map<std::string, std::vector<ForecastRecord>> records_by_model(
    const std::vector<ForecastRecord>& records) {
    std::map<std::string, std::vector<ForecastRecord>> out;
    for (const auto& r : records) out[r.model].push_back(r);
    return out;
}

std::string metrics_json(const std::vector<MetricReport>& reports) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reports)
        j.push_back({{"model", r.model},
                     {"mae", r.mae},
                     {"mse", r.mse},
                     {"mape", r.mape},
                     {"n", r.n},
                     {"mape_excluded", r.mape_excluded}});
    return j.dump(2) + "\n";
}

std::string metrics_table(const std::vector<MetricReport>& reports) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %12s %12s %12s %8s\n", "model", "MAE", "MSE",
                  "MAPE", "n");
    out << line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof(line), "%-16s %12.6f %12.6f %12.6f %8d\n", r.model.c_str(),
                      r.mae, r.mse, r.mape, r.n);
        out << line;
    }
    return out.str();
}

std::string dm_results_json(const std::vector<DmResult>& results) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : results)
        j.push_back({{"model_a", r.model_a},
                     {"model_b", r.model_b},
                     {"statistic", r.statistic},
                     {"p_value", r.p_value},
                     {"indistinguishable", r.indistinguishable},
                     {"reject", r.reject},
                     {"significance", r.significance},
                     {"loss", r.loss},
                     {"n", r.n}});
    return j.dump(2) + "\n";
}

void write_heatmap_csv(std::ostream& out, const RejectionHeatmap& hm) {
    std::vector<std::string> header = {"model"};
    header.insert(header.end(), hm.models.begin(), hm.models.end());
    header.push_back("segments");
    write_csv_row(out, header);
    for (size_t a = 0; a < hm.models.size(); ++a) {
        std::vector<std::string> row = {hm.models[a]};
        for (size_t b = 0; b < hm.models.size(); ++b)
            row.push_back(std::to_string(hm.counts[a][b]));
        row.push_back(std::to_string(hm.segments));
        write_csv_row(out, row);
    }
}

}  // namespace voltcast::eval
