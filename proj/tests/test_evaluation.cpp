#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "voltcast/errors.hpp"
#include "voltcast/evaluation.hpp"
#include "voltcast/stats.hpp"

using namespace voltcast;
using namespace voltcast::eval;

namespace {

std::vector<ForecastRecord> make_records(const std::string& model,
                                         const std::vector<double>& predictions,
                                         const std::vector<double>& actuals) {
    std::vector<ForecastRecord> out;
    Date d = parse_date("2017-07-03");
    for (size_t i = 0; i < predictions.size(); ++i) {
        out.push_back({d, model, predictions[i], actuals[i]});
        d = d.next();
    }
    return out;
}

}  // namespace

TEST_CASE("metrics arithmetic") {
    SUBCASE("single record") {
        const auto report = metrics(make_records("m", {110.0}, {100.0}));
        CHECK(report.mae == doctest::Approx(10.0));
        CHECK(report.mse == doctest::Approx(100.0));
        CHECK(report.mape == doctest::Approx(0.10));
        CHECK(report.n == 1);
    }
    SUBCASE("perfect predictions") {
        const auto report = metrics(make_records("m", {1.0, 2.0}, {1.0, 2.0}));
        CHECK(report.mae == 0.0);
        CHECK(report.mse == 0.0);
        CHECK(report.mape == 0.0);
    }
    SUBCASE("zero actuals are excluded from MAPE only") {
        const auto report = metrics(make_records("m", {1.0, 3.0}, {0.0, 2.0}));
        CHECK(report.mape_excluded == 1);
        CHECK(report.mae == doctest::Approx(1.0));       // both rows
        CHECK(report.mape == doctest::Approx(0.5));      // only the second row
    }
    SUBCASE("order invariance") {
        auto recs = make_records("m", {1.0, 5.0, 2.0}, {2.0, 4.0, 2.5});
        const auto a = metrics(recs);
        std::reverse(recs.begin(), recs.end());
        const auto b = metrics(recs);
        CHECK(a.mae == b.mae);
        CHECK(a.mse == b.mse);
        CHECK(a.mape == b.mape);
    }
    SUBCASE("empty set errors") { CHECK_THROWS_AS(metrics({}), DataError); }
}

TEST_CASE("dm test basics") {
    SUBCASE("identical errors are indistinguishable") {
        const std::vector<double> e(50, 0.5);
        const auto res = dm_test(e, e, {});
        CHECK(res.indistinguishable);
        CHECK_FALSE(res.reject);
    }
    SUBCASE("a dominating model rejects decisively") {
        Rng rng(1);
        std::vector<double> ea(200, 0.0), eb(200);
        for (auto& e : eb) e = rng.normal(0.0, 1.0);
        const auto res = dm_test(ea, eb, {});
        CHECK(res.statistic < 0.0);
        CHECK(res.p_value < 1e-6);
        CHECK(res.reject);
    }
    SUBCASE("antisymmetry: swapping the models negates the statistic") {
        Rng rng(2);
        std::vector<double> ea(80), eb(80);
        for (int i = 0; i < 80; ++i) {
            ea[i] = rng.normal(0.0, 1.0);
            eb[i] = rng.normal(0.0, 1.1);
        }
        const auto ab = dm_test(ea, eb, {});
        const auto ba = dm_test(eb, ea, {});
        CHECK(ab.statistic == doctest::Approx(-ba.statistic).epsilon(1e-12));
        CHECK(ab.p_value == doctest::Approx(1.0 - ba.p_value).epsilon(1e-9));
    }
    SUBCASE("length and size guards") {
        CHECK_THROWS_AS(dm_test(std::vector<double>(5, 1.0), std::vector<double>(5, 1.0), {}),
                        DataError);
        CHECK_THROWS_AS(dm_test(std::vector<double>(20, 1.0), std::vector<double>(10, 1.0), {}),
                        DataError);
    }
    SUBCASE("newey-west lags and the small-sample factor stay finite") {
        Rng rng(3);
        std::vector<double> ea(60), eb(60);
        for (int i = 0; i < 60; ++i) {
            ea[i] = rng.normal();
            eb[i] = rng.normal();
        }
        DmOptions opts;
        opts.newey_west_lags = 4;
        opts.small_sample = true;
        const auto res = dm_test(ea, eb, opts);
        CHECK(std::isfinite(res.statistic));
        CHECK(res.p_value >= 0.0);
        CHECK(res.p_value <= 1.0);
    }
}

TEST_CASE("dm test size is close to nominal (small Monte Carlo)") {
    Rng rng(17);
    const int trials = 400, n = 150;
    int rejections = 0;
    DmOptions opts;
    opts.significance = 0.10;
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<double> ea(n), eb(n);
        for (int i = 0; i < n; ++i) {
            ea[i] = rng.normal();
            eb[i] = rng.normal();
        }
        if (dm_test(ea, eb, opts).reject) ++rejections;
    }
    const double rate = double(rejections) / trials;
    CHECK(rate >= 0.05);
    CHECK(rate <= 0.15);
}

TEST_CASE("rejection heatmap") {
    Rng rng(23);
    const int n = 100;  // two segments of 50
    std::vector<double> actual(n);
    for (auto& a : actual) a = rng.normal(10.0, 1.0);

    std::map<std::string, std::vector<ForecastRecord>> records;
    std::vector<double> good(n), bad(n);
    for (int i = 0; i < n; ++i) {
        good[i] = actual[i] + 0.01 * rng.normal();
        bad[i] = actual[i] + 2.0 * rng.normal();
    }
    records["good"] = make_records("good", good, actual);
    records["bad"] = make_records("bad", bad, actual);

    const auto hm = rejection_heatmap(records, 50, 0.10);
    CHECK(hm.segments == 2);
    REQUIRE(hm.models.size() == 2);
    for (size_t a = 0; a < 2; ++a) {
        CHECK(hm.counts[a][a] == 0);  // diagonal
        for (size_t b = 0; b < 2; ++b) {
            CHECK(hm.counts[a][b] >= 0);
            CHECK(hm.counts[a][b] <= hm.segments);
        }
    }
    // "good" dominates "bad" in every segment
    const size_t good_idx = hm.models[0] == "good" ? 0 : 1;
    CHECK(hm.counts[good_idx][1 - good_idx] == hm.segments);

    SUBCASE("trailing partial segments are dropped") {
        std::map<std::string, std::vector<ForecastRecord>> longer;
        longer["good"] = make_records("good", std::vector<double>(130, 1.0),
                                      std::vector<double>(130, 1.0));
        longer["bad"] = make_records("bad", std::vector<double>(130, 2.0),
                                     std::vector<double>(130, 1.0));
        const auto hm2 = rejection_heatmap(longer, 50, 0.10);
        CHECK(hm2.segments == 2);
    }
    SUBCASE("fewer than one segment errors") {
        std::map<std::string, std::vector<ForecastRecord>> tiny;
        tiny["m"] = make_records("m", std::vector<double>(10, 1.0), std::vector<double>(10, 1.0));
        CHECK_THROWS_AS(rejection_heatmap(tiny, 50, 0.10), DataError);
    }
    SUBCASE("misaligned models error") {
        std::map<std::string, std::vector<ForecastRecord>> bad_map;
        bad_map["a"] = make_records("a", std::vector<double>(100, 1.0),
                                    std::vector<double>(100, 1.0));
        bad_map["b"] = make_records("b", std::vector<double>(90, 1.0),
                                    std::vector<double>(90, 1.0));
        CHECK_THROWS_AS(rejection_heatmap(bad_map, 50, 0.10), DataError);
    }
}

namespace {

// Forecaster test double: predicts the mean target over its fit window and
// records every (fit, predict) call for leakage checks.
class MeanForecaster final : public Forecaster {
public:
    explicit MeanForecaster(std::string name) : name_(std::move(name)) {}
    std::string name() const override { return name_; }

    void fit(const BacktestDataset& data, int end_row) override {
        ++fit_calls;
        last_fit_end = end_row;
        double sum = 0.0;
        int count = 0;
        for (int r = 0; r < end_row; ++r)
            if (data.raw.usable[r]) {
                sum += data.raw.target[r];
                ++count;
            }
        mean_ = count ? sum / count : 0.0;
    }

    double predict_row(const BacktestDataset& data, int row) override {
        CHECK(row >= last_fit_end);  // no target leakage into the fit window
        (void)data;
        return mean_;
    }

    int fit_calls = 0;
    int last_fit_end = -1;

private:
    std::string name_;
    double mean_ = 0.0;
};

BacktestDataset mean_dataset(int n) {
    BacktestDataset data;
    Date d = parse_date("2017-01-02");
    Rng rng(31);
    FeatureColumn c{"x", "", "g", {}};
    for (int i = 0; i < n; ++i) {
        data.raw.days.push_back(d);
        d = d.next();
        c.values.push_back(rng.normal());
        data.raw.target.push_back(rng.normal(5.0, 1.0));
        data.raw.usable.push_back(1);
    }
    data.raw.columns = {c};
    data.reduced = data.raw;
    return data;
}

}  // namespace

TEST_CASE("rolling backtest walk-forward mechanics") {
    auto data = mean_dataset(120);

    SUBCASE("zero cadence fits once and forecasts statically") {
        auto m = std::make_shared<MeanForecaster>("m");
        BacktestScheme scheme;
        scheme.test_start_row = 100;
        scheme.refit_every = 0;
        const auto records = rolling_backtest({m}, data, scheme);
        CHECK(records.size() == 20);
        CHECK(m->fit_calls == 1);
    }
    SUBCASE("refit cadence drives the fit count") {
        auto m = std::make_shared<MeanForecaster>("m");
        BacktestScheme scheme;
        scheme.test_start_row = 100;
        scheme.refit_every = 5;
        const auto records = rolling_backtest({m}, data, scheme);
        CHECK(records.size() == 20);
        CHECK(m->fit_calls == 4);
    }
    SUBCASE("two models share identical record days") {
        auto a = std::make_shared<MeanForecaster>("a");
        auto b = std::make_shared<MeanForecaster>("b");
        BacktestScheme scheme;
        scheme.test_start_row = 100;
        scheme.refit_every = 10;
        const auto records = rolling_backtest({a, b}, data, scheme);
        const auto by_model = records_by_model(records);
        REQUIRE(by_model.at("a").size() == by_model.at("b").size());
        for (size_t i = 0; i < by_model.at("a").size(); ++i)
            CHECK(by_model.at("a")[i].day.days == by_model.at("b")[i].day.days);
    }
    SUBCASE("masked rows are skipped for every model") {
        data.raw.usable[105] = 0;
        auto m = std::make_shared<MeanForecaster>("m");
        BacktestScheme scheme;
        scheme.test_start_row = 100;
        scheme.refit_every = 0;
        const auto records = rolling_backtest({m}, data, scheme);
        CHECK(records.size() == 19);
    }
    SUBCASE("test span must start after the training span") {
        auto m = std::make_shared<MeanForecaster>("m");
        BacktestScheme scheme;
        scheme.test_start_row = 0;
        CHECK_THROWS_AS(rolling_backtest({m}, data, scheme), DataError);
    }
}

TEST_CASE("records CSV round-trip and reports") {
    const auto records = make_records("m", {1.5, 2.5}, {1.0, 3.0});
    std::ostringstream out;
    write_records_csv(out, records);
    std::istringstream in(out.str());
    const auto reread = read_records_csv(in);
    REQUIRE(reread.size() == 2);
    CHECK(reread[0].prediction == 1.5);
    CHECK(reread[1].actual == 3.0);
    CHECK(reread[0].model == "m");

    const auto report = metrics(reread);
    const std::string json = metrics_json({report});
    CHECK(json.find("\"model\": \"m\"") != std::string::npos);
    const std::string table = metrics_table({report});
    CHECK(table.find("MAE") != std::string::npos);

    RejectionHeatmap hm;
    hm.models = {"a", "b"};
    hm.counts = {{0, 32}, {1, 0}};
    hm.segments = 50;
    std::ostringstream hm_csv;
    write_heatmap_csv(hm_csv, hm);
    CHECK(hm_csv.str().find("a,0,32,50") != std::string::npos);
}
