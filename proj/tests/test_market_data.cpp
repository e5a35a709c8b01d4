#include <doctest.h>

#include <cmath>
#include <sstream>

#include "voltcast/csv.hpp"
#include "voltcast/errors.hpp"
#include "voltcast/market_data.hpp"
#include "voltcast/stats.hpp"

using namespace voltcast;

namespace {

// CSV builder for a day grid (M slots per listed day).
std::string price_csv(const std::vector<std::pair<std::string, std::vector<double>>>& days,
                      int slots = 48) {
    std::ostringstream out;
    out << "timestamp,region,price\n";
    const int slot_minutes = 1440 / slots;
    for (const auto& [date, prices] : days) {
        for (size_t j = 0; j < prices.size(); ++j) {
            char ts[32];
            std::snprintf(ts, sizeof(ts), "%s %02zu:%02zu", date.c_str(),
                          j * slot_minutes / 60, j * slot_minutes % 60);
            out << ts << ",NSW," << format_double(prices[j]) << "\n";
        }
    }
    return out.str();
}

IntradayPriceSeries make_series(const std::vector<std::vector<double>>& grid,
                                const std::string& first_day = "2010-01-04") {
    IntradayPriceSeries s;
    s.slots_per_day = int(grid[0].size());
    Date d = parse_date(first_day);
    for (const auto& day_prices : grid) {
        s.days.push_back(d);
        s.prices.push_back(day_prices);
        d = d.next();
    }
    return s;
}

std::vector<double> constant_row(int n, double v) { return std::vector<double>(n, v); }

}  // namespace

TEST_CASE("ingest_csv builds a full grid") {
    std::vector<double> day(48, 30.0);
    const std::string csv = price_csv({{"2010-01-04", day}, {"2010-01-05", day}});
    std::istringstream in(csv);
    const auto series = ingest_csv(in, CsvSchema{});
    CHECK(series.n_days() == 2);
    CHECK(series.slots_per_day == 48);
    CHECK(series.prices[0].size() == 48);
    CHECK(series.prices[1].size() == 48);
    CHECK(series.region == "NSW");
    CHECK(series.summary.rows == 96);
    CHECK(series.summary.nonpositive.empty());
}

TEST_CASE("non-positive prices are ingested but flagged") {
    std::vector<double> day(48, 30.0);
    day[5] = -1.0;
    std::istringstream in(price_csv({{"2010-01-04", day}}));
    const auto series = ingest_csv(in, CsvSchema{});
    CHECK(series.prices[0][5] == -1.0);
    REQUIRE(series.summary.nonpositive.size() == 1);
    CHECK(series.summary.nonpositive[0].slot == 5);
}

TEST_CASE("malformed rows are reported with their row number") {
    std::istringstream in("timestamp,region,price\n2010-01-01 00:00,NSW,abc\n");
    CHECK_THROWS_WITH_AS(ingest_csv(in, CsvSchema{}), doctest::Contains("row 1"), DataError);

    std::istringstream in2("timestamp,region,price\nnot-a-time,NSW,1.0\n");
    CHECK_THROWS_AS(ingest_csv(in2, CsvSchema{}), DataError);
}

TEST_CASE("duplicate day/slot observations conflict") {
    std::ostringstream csv;
    csv << "timestamp,region,price\n"
        << "2010-01-04 00:00,NSW,30\n"
        << "2010-01-04 00:00,NSW,31\n";
    std::istringstream in(csv.str());
    CHECK_THROWS_WITH_AS(ingest_csv(in, CsvSchema{}), doctest::Contains("duplicate"), DataError);
}

TEST_CASE("incomplete final day errors unless truncation is allowed") {
    std::vector<double> full(48, 30.0), partial(10, 30.0);
    const std::string csv = price_csv({{"2010-01-04", full}, {"2010-01-05", partial}});

    {
        std::istringstream in(csv);
        CHECK_THROWS_WITH_AS(ingest_csv(in, CsvSchema{}), doctest::Contains("final day"),
                             DataError);
    }
    {
        CsvSchema schema;
        schema.allow_partial_final_day = true;
        std::istringstream in(csv);
        const auto series = ingest_csv(in, schema);
        CHECK(series.n_days() == 1);
    }
}

TEST_CASE("padding fills missing slots from the nearest in-day value") {
    std::vector<double> holey(48, 25.0);
    std::ostringstream csv;
    csv << "timestamp,region,price\n";
    for (int j = 0; j < 48; ++j) {
        if (j == 7) continue;  // missing slot
        char ts[32];
        std::snprintf(ts, sizeof(ts), "2010-01-04 %02d:%02d", j / 2, (j % 2) * 30);
        csv << ts << ",NSW," << format_double(holey[j] + j) << "\n";
    }
    CsvSchema schema;
    schema.pad_incomplete_days = true;
    std::istringstream in(csv.str());
    const auto series = ingest_csv(in, schema);
    CHECK(series.prices[0][7] == series.prices[0][6]);  // earlier neighbor wins
    REQUIRE(series.summary.padded.size() == 1);
    CHECK(series.summary.padded[0].slot == 7);
}

TEST_CASE("clean_nonpositive nearest rules") {
    SUBCASE("tie resolves to the earlier neighbor") {
        auto series = make_series({{10.0, -1.0, 20.0}});
        auto [cleaned, report] = clean_nonpositive(series);
        CHECK(cleaned.prices[0] == std::vector<double>{10.0, 10.0, 20.0});
        CHECK(report.replaced_count == 1);
    }
    SUBCASE("runs split toward the closest side") {
        auto series = make_series({{5.0, 0.0, 0.0, 8.0}});
        auto [cleaned, report] = clean_nonpositive(series);
        CHECK(cleaned.prices[0] == std::vector<double>{5.0, 5.0, 8.0, 8.0});
        CHECK(report.replaced_count == 2);
    }
    SUBCASE("all-positive input is untouched") {
        auto series = make_series({{1.0, 2.0, 3.0}});
        auto [cleaned, report] = clean_nonpositive(series);
        CHECK(cleaned.prices == series.prices);
        CHECK(report.replaced_count == 0);
        CHECK(report.replaced_positions.empty());
    }
    SUBCASE("all non-positive input is unrecoverable") {
        auto series = make_series({{0.0, -1.0, 0.0}});
        CHECK_THROWS_AS(clean_nonpositive(series), DataError);
    }
}

TEST_CASE("clean_nonpositive matches a brute-force nearest scan and is idempotent") {
    Rng rng(321);
    for (int trial = 0; trial < 40; ++trial) {
        const int n_days = 1 + int(rng.below(3));
        const int m = 6;
        std::vector<std::vector<double>> grid(n_days, std::vector<double>(m));
        bool any_positive = false;
        for (auto& day : grid)
            for (auto& p : day) {
                p = rng.uniform() < 0.35 ? -rng.uniform() : rng.uniform(1.0, 50.0);
                any_positive = any_positive || p > 0.0;
            }
        if (!any_positive) grid[0][0] = 1.0;
        auto series = make_series(grid);
        auto [cleaned, report] = clean_nonpositive(series);

        // oracle: scan every position for the nearest positive, earlier on ties
        std::vector<double> flat;
        for (const auto& day : grid) flat.insert(flat.end(), day.begin(), day.end());
        for (size_t i = 0; i < flat.size(); ++i) {
            double expected = flat[i];
            if (expected <= 0.0) {
                for (size_t d = 1; d < flat.size(); ++d) {
                    if (i >= d && flat[i - d] > 0.0) {
                        expected = flat[i - d];
                        break;
                    }
                    if (i + d < flat.size() && flat[i + d] > 0.0) {
                        expected = flat[i + d];
                        break;
                    }
                }
            }
            CHECK(cleaned.prices[i / m][i % m] == expected);
        }

        auto [twice, report2] = clean_nonpositive(cleaned);
        CHECK(twice.prices == cleaned.prices);
        CHECK(report2.replaced_count == 0);
    }
}

TEST_CASE("intraday returns follow the overnight-boundary convention") {
    SUBCASE("constant prices produce zero returns") {
        auto panel = intraday_returns(make_series({constant_row(48, 30.0), constant_row(48, 30.0)}));
        CHECK(panel.returns[0].size() == 47);
        CHECK(panel.returns[1].size() == 48);
        for (const auto& day : panel.returns)
            for (double r : day) CHECK(r == 0.0);
    }
    SUBCASE("first day yields M-1 direct differences") {
        auto panel = intraday_returns(make_series({{10.0, 10.1, 9.9, 10.2}}));
        REQUIRE(panel.returns[0].size() == 3);
        CHECK(panel.returns[0][0] == doctest::Approx(0.1));
        CHECK(panel.returns[0][1] == doctest::Approx(-0.2));
        CHECK(panel.returns[0][2] == doctest::Approx(0.3));
    }
    SUBCASE("day two opens against the previous close") {
        auto panel = intraday_returns(make_series({{19.0, 20.0}, {21.0, 22.0}}));
        CHECK(panel.returns[1][0] == doctest::Approx(1.0));
    }
    SUBCASE("single-slot days cannot produce returns") {
        CHECK_THROWS_AS(intraday_returns(make_series({{30.0}})), DataError);
    }
    SUBCASE("uncleaned series is rejected") {
        CHECK_THROWS_AS(intraday_returns(make_series({{30.0, -1.0}})), DataError);
    }
}

TEST_CASE("per-day returns telescope to the close-to-close difference") {
    // Prices on a 1/64 grid make the float arithmetic exact.
    Rng rng(99);
    std::vector<std::vector<double>> grid(3, std::vector<double>(48));
    for (auto& day : grid)
        for (auto& p : day) p = 40.0 + double(rng.below(128)) / 64.0;
    const auto series = make_series(grid);
    const auto panel = intraday_returns(series);
    for (size_t d = 1; d < 3; ++d) {
        CHECK(panel.returns[d].size() == 48);
        double sum = 0.0;
        for (double r : panel.returns[d]) sum += r;
        CHECK(sum == grid[d][47] - grid[d - 1][47]);
    }
}

TEST_CASE("seasonal profile medians by (month, weekday, slot)") {
    // Three Mondays in the same month, 2 slots per day.
    IntradayPriceSeries s;
    s.slots_per_day = 2;
    s.days = {parse_date("2010-03-01"), parse_date("2010-03-08"), parse_date("2010-03-15")};
    s.prices = {{10, 11}, {10, 12}, {10, 110}};
    const auto panel = intraday_returns(s);
    // slot-1 returns on the three Mondays: 1, 2, 100
    const auto profile = seasonal_profile(panel, s.days.front(), s.days.back());
    CHECK(profile.medians.at({3, 1, 1}) == 2.0);

    SUBCASE("window excludes later days") {
        const auto early = seasonal_profile(panel, s.days.front(), s.days[1]);
        CHECK(early.medians.at({3, 1, 1}) == doctest::Approx(1.5));  // median of {1,2}
    }
    SUBCASE("empty window errors") {
        CHECK_THROWS_AS(seasonal_profile(panel, parse_date("2011-01-01"),
                                         parse_date("2011-02-01")),
                        DataError);
    }
    SUBCASE("constant cells return the constant") {
        IntradayPriceSeries c;
        c.slots_per_day = 2;
        c.days = {parse_date("2010-03-01"), parse_date("2010-03-08")};
        c.prices = {{10, 13}, {10, 13}};
        const auto p2 = intraday_returns(c);
        const auto prof = seasonal_profile(p2, c.days.front(), c.days.back());
        CHECK(prof.medians.at({3, 1, 1}) == 3.0);
    }
}

TEST_CASE("seasonal profile is invariant to day order within the window") {
    Rng rng(17);
    std::vector<std::vector<double>> grid(10, std::vector<double>(4));
    for (auto& day : grid)
        for (auto& p : day) p = rng.uniform(20.0, 60.0);
    const auto series = make_series(grid);
    const auto panel = intraday_returns(series);
    const auto profile = seasonal_profile(panel, series.days.front(), series.days.back());

    // oracle: recollect cells walking the days in reverse
    std::map<std::tuple<int, int, int>, std::vector<double>> cells;
    for (size_t d = panel.days.size(); d-- > 0;) {
        for (size_t k = 0; k < panel.returns[d].size(); ++k)
            cells[{panel.days[d].month(), panel.days[d].day_of_week(), panel.slot_of(d, k)}]
                .push_back(panel.returns[d][k]);
    }
    for (const auto& [key, values] : cells)
        CHECK(profile.medians.at(key) == median(values));
}

TEST_CASE("demean subtracts profile cells and the inverse restores the panel") {
    Rng rng(55);
    std::vector<std::vector<double>> grid(14, std::vector<double>(6));
    for (auto& day : grid)
        for (auto& p : day) p = rng.uniform(20.0, 60.0);
    const auto series = make_series(grid);
    const auto panel = intraday_returns(series);
    const auto profile = seasonal_profile(panel, series.days.front(), series.days.back());

    DemeanLog log;
    const auto demeaned = demean(panel, profile, &log);
    CHECK(demeaned.demeaned);
    CHECK(log.missing_cells == 0);

    for (size_t d = 0; d < panel.days.size(); ++d)
        for (size_t k = 0; k < panel.returns[d].size(); ++k) {
            const auto key = std::tuple{panel.days[d].month(), panel.days[d].day_of_week(),
                                        panel.slot_of(d, k)};
            const double restored = demeaned.returns[d][k] + profile.medians.at(key);
            CHECK(restored == doctest::Approx(panel.returns[d][k]).epsilon(1e-12));
        }

    SUBCASE("re-demeaning is rejected") { CHECK_THROWS_AS(demean(demeaned, profile), DataError); }
    SUBCASE("slot mismatch is rejected") {
        SeasonalProfile other;
        other.slots_per_day = 12;
        CHECK_THROWS_AS(demean(panel, other), DataError);
    }
}

TEST_CASE("demean with an all-zero or missing profile") {
    auto series = make_series({constant_row(4, 30.0), {30, 30.5, 29.5, 31.0}});
    const auto panel = intraday_returns(series);

    SUBCASE("zero profile is the identity") {
        auto profile = seasonal_profile(panel, series.days.front(), series.days.back());
        for (auto& [k, v] : profile.medians) v = 0.0;
        const auto out = demean(panel, profile);
        CHECK(out.returns == panel.returns);
    }
    SUBCASE("absent cells subtract zero and are logged") {
        SeasonalProfile empty;
        empty.slots_per_day = panel.slots_per_day;
        DemeanLog log;
        const auto out = demean(panel, empty, &log);
        CHECK(out.returns == panel.returns);
        CHECK(log.missing_cells == 3 + 4);
    }
    SUBCASE("plain subtraction") {
        SeasonalProfile p;
        p.slots_per_day = panel.slots_per_day;
        for (size_t d = 0; d < panel.days.size(); ++d)
            for (size_t k = 0; k < panel.returns[d].size(); ++k)
                p.medians[{panel.days[d].month(), panel.days[d].day_of_week(),
                           panel.slot_of(d, k)}] = 0.2;
        IntradayPriceSeries s2 = series;
        auto panel2 = panel;
        panel2.returns[1][1] = 0.5;
        const auto out = demean(panel2, p);
        CHECK(out.returns[1][1] == doctest::Approx(0.3));
    }
}

TEST_CASE("cleaned CSV round-trips through ingest with the interpolation flag") {
    auto series = make_series({{10.0, -1.0, 20.0, 21.0}});
    auto [cleaned, report] = clean_nonpositive(series);
    CsvSchema schema;
    schema.slots_per_day = 4;
    std::ostringstream out;
    write_cleaned_csv(out, cleaned, report, schema);
    const std::string text = out.str();
    CHECK(text.find("was_interpolated") != std::string::npos);

    std::istringstream in(text);
    const auto reread = ingest_csv(in, schema);
    CHECK(reread.prices == cleaned.prices);
}

TEST_CASE("daily aggregates") {
    auto series = make_series({{10.0, 12.0}, {13.0, 15.0}, {15.0, 14.0}});
    const auto closes = daily_closes(series);
    CHECK(closes.values == std::vector<double>{12.0, 15.0, 14.0});
    const auto rets = daily_close_returns(series);
    CHECK(std::isnan(rets.values[0]));
    CHECK(rets.values[1] == 3.0);
    CHECK(rets.values[2] == -1.0);
}
