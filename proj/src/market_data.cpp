#include "voltcast/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "voltcast/csv.hpp"
#include "voltcast/errors.hpp"
#include "voltcast/stats.hpp"

namespace voltcast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

IntradayPriceSeries ingest_csv(std::istream& source, const CsvSchema& schema) {
    if (schema.slots_per_day < 1 || 1440 % schema.slots_per_day != 0)
        throw ConfigError("slots_per_day must divide 1440");
    const int slot_minutes = 1440 / schema.slots_per_day;

    CsvTable table = read_csv(source);
    const int ts_col = table.require_col(schema.timestamp_col);
    const int price_col = table.require_col(schema.price_col);
    const int region_col = table.col(schema.region_col);

    std::vector<std::pair<std::string, int>> pass_cols;
    for (const auto& name : schema.passthrough_cols) {
        int c = table.col(name);
        if (c >= 0) pass_cols.emplace_back(name, c);
    }

    IntradayPriceSeries series;
    series.slots_per_day = schema.slots_per_day;

    // day -> slot grid; map keeps days sorted and unique.
    std::map<Date, std::vector<double>> grid;
    std::map<Date, std::map<std::string, std::vector<double>>> pass_grid;

    for (size_t r = 0; r < table.rows.size(); ++r) {
        const size_t row_number = r + 1;
        const auto& row = table.rows[r];
        if (row.size() < table.header.size()) {
            std::ostringstream msg;
            msg << "row " << row_number << ": expected " << table.header.size()
                << " cells, found " << row.size();
            throw DataError(msg.str());
        }
        Timestamp ts;
        try {
            ts = parse_timestamp(row[ts_col]);
        } catch (const DataError& e) {
            std::ostringstream msg;
            msg << "row " << row_number << ": " << e.what();
            throw DataError(msg.str());
        }
        if (ts.minute_of_day % slot_minutes != 0) {
            std::ostringstream msg;
            msg << "row " << row_number << ": timestamp '" << row[ts_col]
                << "' is not aligned to the " << slot_minutes << "-minute grid";
            throw DataError(msg.str());
        }
        const int slot = ts.minute_of_day / slot_minutes;
        const double price = parse_double_cell(row[price_col], row_number, schema.price_col);
        if (std::isnan(price)) {
            std::ostringstream msg;
            msg << "row " << row_number << ": empty price cell";
            throw DataError(msg.str());
        }

        if (region_col >= 0) {
            if (series.region.empty())
                series.region = row[region_col];
            else if (series.region != row[region_col]) {
                std::ostringstream msg;
                msg << "row " << row_number << ": region '" << row[region_col]
                    << "' differs from '" << series.region << "' (single-region input expected)";
                throw DataError(msg.str());
            }
        }

        auto& day_prices = grid[ts.date];
        if (day_prices.empty()) day_prices.assign(schema.slots_per_day, kNaN);
        if (!std::isnan(day_prices[slot])) {
            std::ostringstream msg;
            msg << "row " << row_number << ": duplicate observation for " << format_date(ts.date)
                << " slot " << slot;
            throw DataError(msg.str());
        }
        day_prices[slot] = price;

        for (const auto& [name, c] : pass_cols) {
            auto& vec = pass_grid[ts.date][name];
            if (vec.empty()) vec.assign(schema.slots_per_day, kNaN);
            vec[slot] = parse_double_cell(row[c], row_number, name);
        }
        ++series.summary.rows;
    }

    if (grid.empty()) throw DataError("no data rows in price CSV");

    const Date last_day = grid.rbegin()->first;
    for (auto it = grid.begin(); it != grid.end();) {
        auto& [day, day_prices] = *it;
        std::vector<int> missing;
        for (int j = 0; j < schema.slots_per_day; ++j)
            if (std::isnan(day_prices[j])) missing.push_back(j);
        if (missing.empty()) {
            ++it;
            continue;
        }
        if (schema.pad_incomplete_days) {
            for (int j : missing) {
                // nearest in-day observed slot, earlier on ties
                double filled = kNaN;
                for (int d = 1; d < schema.slots_per_day && std::isnan(filled); ++d) {
                    if (j - d >= 0 && !std::isnan(day_prices[j - d])) filled = day_prices[j - d];
                    else if (j + d < schema.slots_per_day && !std::isnan(day_prices[j + d]))
                        filled = day_prices[j + d];
                }
                day_prices[j] = filled;
                series.summary.padded.push_back({day, j});
            }
            ++it;
        } else if (day == last_day && schema.allow_partial_final_day) {
            pass_grid.erase(day);
            it = grid.erase(it);
        } else {
            std::ostringstream msg;
            msg << (day == last_day ? "incomplete final day " : "day ") << format_date(day)
                << " has " << schema.slots_per_day - missing.size() << " of "
                << schema.slots_per_day << " slots (first missing slot " << missing.front() << ")";
            throw DataError(msg.str());
        }
    }
    if (grid.empty()) throw DataError("no complete days after truncation");

    for (auto& [day, day_prices] : grid) {
        for (int j = 0; j < schema.slots_per_day; ++j)
            if (day_prices[j] <= 0.0) series.summary.nonpositive.push_back({day, j});
        series.days.push_back(day);
        series.prices.push_back(std::move(day_prices));
    }
    for (const auto& [name, c] : pass_cols) {
        auto& grid_out = series.passthrough[name];
        for (const Date& day : series.days) {
            auto it = pass_grid.find(day);
            if (it != pass_grid.end() && it->second.count(name))
                grid_out.push_back(it->second.at(name));
            else
                grid_out.emplace_back(series.slots_per_day, kNaN);
        }
    }
    return series;
}

std::pair<IntradayPriceSeries, CleaningReport> clean_nonpositive(const IntradayPriceSeries& series) {
    const int m = series.slots_per_day;
    const size_t n = series.n_days() * size_t(m);
    auto at = [&](size_t flat) { return series.prices[flat / m][flat % m]; };

    // prev_pos[i] = latest positive index <= i; next_pos[i] = earliest >= i.
    std::vector<ptrdiff_t> prev_pos(n, -1), next_pos(n, -1);
    ptrdiff_t last = -1;
    for (size_t i = 0; i < n; ++i) {
        if (at(i) > 0.0) last = ptrdiff_t(i);
        prev_pos[i] = last;
    }
    last = -1;
    for (size_t i = n; i-- > 0;) {
        if (at(i) > 0.0) last = ptrdiff_t(i);
        next_pos[i] = last;
    }

    IntradayPriceSeries cleaned = series;
    CleaningReport report;
    for (size_t i = 0; i < n; ++i) {
        if (at(i) > 0.0) continue;
        const ptrdiff_t p = prev_pos[i], q = next_pos[i];
        double replacement;
        if (p < 0 && q < 0) throw DataError("all prices non-positive; series is unrecoverable");
        if (p < 0) replacement = at(size_t(q));
        else if (q < 0) replacement = at(size_t(p));
        else {
            const ptrdiff_t dl = ptrdiff_t(i) - p, dr = q - ptrdiff_t(i);
            replacement = (dl <= dr) ? at(size_t(p)) : at(size_t(q));  // earlier wins ties
        }
        cleaned.prices[i / m][i % m] = replacement;
        report.replaced_positions.push_back({series.days[i / m], int(i % m)});
    }
    report.replaced_count = int(report.replaced_positions.size());
    cleaned.summary.nonpositive.clear();
    return {std::move(cleaned), std::move(report)};
}

ReturnPanel intraday_returns(const IntradayPriceSeries& series) {
    const int m = series.slots_per_day;
    if (m < 2) throw DataError("cannot compute returns with a single slot per day");
    for (size_t d = 0; d < series.n_days(); ++d)
        for (int j = 0; j < m; ++j)
            if (!(series.prices[d][j] > 0.0))
                throw DataError("intraday_returns requires a cleaned (strictly positive) series; "
                                "offending day " + format_date(series.days[d]));

    ReturnPanel panel;
    panel.days = series.days;
    panel.slots_per_day = m;
    panel.returns.resize(series.n_days());
    for (size_t d = 0; d < series.n_days(); ++d) {
        auto& out = panel.returns[d];
        if (d == 0) {
            out.resize(m - 1);
            for (int j = 1; j < m; ++j) out[j - 1] = series.prices[0][j] - series.prices[0][j - 1];
        } else {
            out.resize(m);
            out[0] = series.prices[d][0] - series.prices[d - 1][m - 1];
            for (int j = 1; j < m; ++j) out[j] = series.prices[d][j] - series.prices[d][j - 1];
        }
    }
    return panel;
}

SeasonalProfile seasonal_profile(const ReturnPanel& panel, Date window_begin, Date window_end) {
    if (window_end < window_begin) throw DataError("seasonal profile window is empty");
    SeasonalProfile profile;
    profile.slots_per_day = panel.slots_per_day;
    profile.window_begin = window_begin;
    profile.window_end = window_end;

    std::map<std::tuple<int, int, int>, std::vector<double>> cells;
    bool any = false;
    for (size_t d = 0; d < panel.days.size(); ++d) {
        const Date day = panel.days[d];
        if (day < window_begin || window_end < day) continue;
        any = true;
        for (size_t k = 0; k < panel.returns[d].size(); ++k)
            cells[{day.month(), day.day_of_week(), panel.slot_of(d, k)}].push_back(
                panel.returns[d][k]);
    }
    if (!any) throw DataError("seasonal profile window contains no panel days");
    for (auto& [key, values] : cells) profile.medians[key] = median(std::move(values));
    return profile;
}

ReturnPanel demean(const ReturnPanel& panel, const SeasonalProfile& profile, DemeanLog* log) {
    if (panel.demeaned) throw DataError("panel is already demeaned");
    if (panel.slots_per_day != profile.slots_per_day)
        throw DataError("slot count mismatch between panel and seasonal profile");

    ReturnPanel out = panel;
    out.demeaned = true;
    int missing = 0;
    for (size_t d = 0; d < panel.days.size(); ++d) {
        const Date day = panel.days[d];
        for (size_t k = 0; k < panel.returns[d].size(); ++k) {
            auto it = profile.medians.find({day.month(), day.day_of_week(), panel.slot_of(d, k)});
            if (it == profile.medians.end()) {
                ++missing;  // absent cell subtracts 0
                continue;
            }
            out.returns[d][k] -= it->second;
        }
    }
    if (log) log->missing_cells = missing;
    return out;
}

std::string CleaningReport::to_json() const {
    nlohmann::json j;
    j["method"] = method;
    j["replaced_count"] = replaced_count;
    auto& arr = j["replaced_positions"] = nlohmann::json::array();
    for (const auto& pos : replaced_positions)
        arr.push_back({{"date", format_date(pos.day)}, {"slot", pos.slot}});
    return j.dump(2) + "\n";
}

void write_cleaned_csv(std::ostream& out, const IntradayPriceSeries& series,
                       const CleaningReport& report, const CsvSchema& schema) {
    const int slot_minutes = 1440 / series.slots_per_day;
    std::vector<std::string> header = {schema.timestamp_col, schema.region_col, schema.price_col};
    std::vector<std::string> pass_names;
    for (const auto& [name, _] : series.passthrough) pass_names.push_back(name);
    header.insert(header.end(), pass_names.begin(), pass_names.end());
    header.push_back("was_interpolated");
    write_csv_row(out, header);

    std::map<std::pair<int32_t, int>, bool> interpolated;
    for (const auto& pos : report.replaced_positions) interpolated[{pos.day.days, pos.slot}] = true;
    for (const auto& pos : series.summary.padded) interpolated[{pos.day.days, pos.slot}] = true;

    for (size_t d = 0; d < series.n_days(); ++d) {
        for (int j = 0; j < series.slots_per_day; ++j) {
            std::vector<std::string> row;
            row.push_back(format_timestamp({series.days[d], j * slot_minutes}));
            row.push_back(series.region);
            row.push_back(format_double(series.prices[d][j]));
            for (const auto& name : pass_names)
                row.push_back(format_double(series.passthrough.at(name)[d][j]));
            row.push_back(interpolated.count({series.days[d].days, j}) ? "1" : "0");
            write_csv_row(out, row);
        }
    }
}

DailySeries daily_closes(const IntradayPriceSeries& series) {
    DailySeries out;
    out.days = series.days;
    for (const auto& day_prices : series.prices) out.values.push_back(day_prices.back());
    return out;
}

DailySeries daily_close_returns(const IntradayPriceSeries& series) {
    DailySeries closes = daily_closes(series);
    DailySeries out;
    out.days = closes.days;
    out.values.assign(closes.values.size(), kNaN);
    for (size_t d = 1; d < closes.values.size(); ++d)
        out.values[d] = closes.values[d] - closes.values[d - 1];
    return out;
}

DailySeries daily_mean_passthrough(const IntradayPriceSeries& series, const std::string& col) {
    DailySeries out;
    auto it = series.passthrough.find(col);
    if (it == series.passthrough.end()) return out;
    out.days = series.days;
    for (const auto& day_vals : it->second) {
        double sum = 0.0;
        int n = 0;
        for (double v : day_vals)
            if (!std::isnan(v)) {
                sum += v;
                ++n;
            }
        out.values.push_back(n ? sum / n : kNaN);
    }
    return out;
}

}  // namespace voltcast
