#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "voltcast/calendar.hpp"

namespace voltcast {

/// Column mapping and grid conventions for half-hourly price CSVs.
struct CsvSchema {
    std::string timestamp_col = "timestamp";
    std::string region_col = "region";
    std::string price_col = "price";
    /// Optional columns carried through to the feature stage when present.
    std::vector<std::string> passthrough_cols = {"demand", "supply"};
    int slots_per_day = 48;
    /// Truncate (drop) an incomplete final day instead of erroring.
    bool allow_partial_final_day = false;
    /// Pad days with missing slots from the nearest in-day observation
    /// instead of erroring. Padded cells are reported and marked interpolated.
    bool pad_incomplete_days = false;
};

struct GridPos {
    Date day;
    int slot = 0;
};

struct IngestSummary {
    std::vector<GridPos> nonpositive;  // flagged here, replaced by clean_nonpositive
    std::vector<GridPos> padded;
    size_t rows = 0;
};

/// Calendar-aligned day-by-slot grid of spot prices ($/MWh).
struct IntradayPriceSeries {
    std::vector<Date> days;  // strictly increasing
    int slots_per_day = 48;
    std::vector<std::vector<double>> prices;  // [day][slot], fully populated
    std::string region;
    std::map<std::string, std::vector<std::vector<double>>> passthrough;
    IngestSummary summary;

    size_t n_days() const { return days.size(); }
};

struct CleaningReport {
    int replaced_count = 0;
    std::vector<GridPos> replaced_positions;
    std::string method = "nearest-positive";

    std::string to_json() const;
};

/// Day-by-slot grid of price differences ($/MWh). The first day carries M-1
/// returns (slots 1..M-1); every later day carries M returns whose slot-0
/// entry is the overnight difference against the previous day's close.
struct ReturnPanel {
    std::vector<Date> days;
    int slots_per_day = 48;
    std::vector<std::vector<double>> returns;
    bool demeaned = false;

    int slot_of(size_t day_index, size_t k) const {
        return day_index == 0 ? int(k) + 1 : int(k);
    }
};

/// Half-hourly median return per (month-of-year, day-of-week, slot) cell.
struct SeasonalProfile {
    int slots_per_day = 48;
    std::map<std::tuple<int, int, int>, double> medians;
    Date window_begin, window_end;
};

struct DemeanLog {
    int missing_cells = 0;
};

IntradayPriceSeries ingest_csv(std::istream& source, const CsvSchema& schema);

std::pair<IntradayPriceSeries, CleaningReport> clean_nonpositive(const IntradayPriceSeries& series);

ReturnPanel intraday_returns(const IntradayPriceSeries& series);

SeasonalProfile seasonal_profile(const ReturnPanel& panel, Date window_begin, Date window_end);

ReturnPanel demean(const ReturnPanel& panel, const SeasonalProfile& profile,
                   DemeanLog* log = nullptr);

/// Cleaned panel in the ingest schema plus a `was_interpolated` 0/1 column.
void write_cleaned_csv(std::ostream& out, const IntradayPriceSeries& series,
                       const CleaningReport& report, const CsvSchema& schema);

// ---------------------------------------------------------------------------
// Daily aggregates consumed by downstream stages
// ---------------------------------------------------------------------------
struct DailySeries {
    std::vector<Date> days;
    std::vector<double> values;
};

DailySeries daily_closes(const IntradayPriceSeries& series);
/// Close-to-close price differences; the first day is NaN.
DailySeries daily_close_returns(const IntradayPriceSeries& series);
/// Per-day mean of a passthrough column (NaN cells skipped).
DailySeries daily_mean_passthrough(const IntradayPriceSeries& series, const std::string& col);

}  // namespace voltcast
