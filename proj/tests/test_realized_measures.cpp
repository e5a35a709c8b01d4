#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "voltcast/errors.hpp"
#include "voltcast/realized_measures.hpp"
#include "voltcast/stats.hpp"

using namespace voltcast;

namespace {

// Independent hand-arithmetic constants used as oracles.
const double kPi = M_PI;
const double kMu43 = std::pow(2.0, 2.0 / 3.0) * std::tgamma(7.0 / 6.0) / std::sqrt(kPi);
const double kTheta = (kPi / 2.0) * (kPi / 2.0) + kPi - 5.0;

std::vector<double> simulate_brownian_day(Rng& rng, int m, double daily_var) {
    std::vector<double> r(m);
    for (auto& x : r) x = rng.normal(0.0, std::sqrt(daily_var / m));
    return r;
}

}  // namespace

TEST_CASE("realized variance") {
    CHECK(realized_variance(std::vector<double>{0.1, -0.2, 0.3}) ==
          doctest::Approx(0.14).epsilon(1e-14));
    CHECK(realized_variance(std::vector<double>{0, 0, 0}) == 0.0);
    CHECK(realized_variance(std::vector<double>{1.7}) == doctest::Approx(1.7 * 1.7));
    CHECK_THROWS_AS(realized_variance({}), DataError);
}

TEST_CASE("bipower variation") {
    // (pi/2) * (3/2) * (|0.1||-0.2| + |-0.2||0.3|)
    const double expected = (kPi / 2.0) * 1.5 * (0.02 + 0.06);
    CHECK(bipower_variation(std::vector<double>{0.1, -0.2, 0.3}) ==
          doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(0.18850).epsilon(1e-4));
    CHECK(bipower_variation(std::vector<double>{0, 0, 0, 0}) == 0.0);
    // an isolated spike contributes no adjacent product
    CHECK(bipower_variation(std::vector<double>{0, 0, 5, 0, 0}) == 0.0);
    CHECK_THROWS_AS(bipower_variation(std::vector<double>{1.0}), DataError);
}

TEST_CASE("tripower quarticity") {
    CHECK(tripower_quarticity(std::vector<double>{0, 0, 0}) == 0.0);
    CHECK(kMu43 == doctest::Approx(0.8309).epsilon(2e-4));
    const double expected = 3.0 * std::pow(kMu43, -3.0) * 3.0;  // [1,1,1]
    CHECK(tripower_quarticity(std::vector<double>{1, 1, 1}) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK_THROWS_AS(tripower_quarticity(std::vector<double>{1, 1}), DataError);

    SUBCASE("degree-4 homogeneity") {
        Rng rng(5);
        std::vector<double> r(24), scaled(24);
        for (size_t i = 0; i < r.size(); ++i) {
            r[i] = rng.normal();
            scaled[i] = 3.0 * r[i];
        }
        CHECK(tripower_quarticity(scaled) ==
              doctest::Approx(81.0 * tripower_quarticity(r)).epsilon(1e-12));
        CHECK(realized_quarticity(scaled) ==
              doctest::Approx(81.0 * realized_quarticity(r)).epsilon(1e-12));
    }
}

TEST_CASE("realized quarticity") {
    CHECK(realized_quarticity(std::vector<double>{0.1, -0.2, 0.3}) ==
          doctest::Approx(0.0098).epsilon(1e-12));
    CHECK(realized_quarticity(std::vector<double>{0, 0}) == 0.0);
    CHECK_THROWS_AS(realized_quarticity({}), DataError);
}

TEST_CASE("jump statistic") {
    SUBCASE("zero numerator when RV equals BPV") {
        CHECK(jump_statistic(1.5, 1.5, 2.0, 48) == 0.0);
    }
    SUBCASE("reference point computed by the oracle") {
        // RV=2, BPV=1, TPQ=1, M=48: Z = 0.5 / sqrt(theta * max(1, 1) / 48)
        const double expected = 0.5 / std::sqrt(kTheta / 48.0);
        CHECK(jump_statistic(2.0, 1.0, 1.0, 48) == doctest::Approx(expected).epsilon(1e-14));
        CHECK(expected == doctest::Approx(4.439).epsilon(1e-3));
    }
    SUBCASE("ratio clamp floors TPQ/BPV^2 at one") {
        // tiny TPQ and TPQ = BPV^2 must give the same denominator
        CHECK(jump_statistic(2.0, 1.0, 1e-12, 48) ==
              doctest::Approx(jump_statistic(2.0, 1.0, 1.0, 48)).epsilon(1e-14));
    }
    SUBCASE("undefined when RV or BPV vanish") {
        CHECK(std::isnan(jump_statistic(0.0, 1.0, 1.0, 48)));
        CHECK(std::isnan(jump_statistic(1.0, 0.0, 1.0, 48)));
    }
}

TEST_CASE("jump test config") {
    const auto cfg = JumpTestConfig::from_alpha(0.01);
    CHECK(cfg.threshold == doctest::Approx(2.3263478740408408).epsilon(1e-10));
    CHECK_THROWS_AS(JumpTestConfig::from_alpha(0.0), ConfigError);
    CHECK_THROWS_AS(JumpTestConfig::from_alpha(1.0), ConfigError);
}

TEST_CASE("jump decomposition") {
    const auto cfg = JumpTestConfig::from_alpha(0.01);
    SUBCASE("below threshold: everything is continuous") {
        const auto d = decompose(3.0, 1.0, 1.0, cfg);
        CHECK(d.jump == 0.0);
        CHECK(d.cv == 3.0);
    }
    SUBCASE("above threshold: excess over BPV is the jump") {
        const auto d = decompose(2.0, 1.2, 3.5, cfg);
        CHECK(d.jump == doctest::Approx(0.8).epsilon(1e-14));
        CHECK(d.cv == doctest::Approx(1.2).epsilon(1e-14));
    }
    SUBCASE("RV below BPV clamps the jump at zero") {
        const auto d = decompose(1.0, 1.4, 5.0, cfg);
        CHECK(d.jump == 0.0);
        CHECK(d.cv == 1.0);
    }
    SUBCASE("undefined statistic means no jump") {
        const auto d = decompose(2.0, 0.0, std::nan(""), cfg);
        CHECK(d.jump == 0.0);
        CHECK(d.cv == 2.0);
    }
    SUBCASE("negative RV rejected") { CHECK_THROWS_AS(decompose(-1.0, 0.5, 0.0, cfg), DataError); }
}

TEST_CASE("transforms") {
    DailyRealizedMeasures m;
    m.rv = 1.0;
    m.jump = 0.0;
    m.cv = 1.0;
    fill_transforms(m);
    CHECK(m.ln_rv == 0.0);
    CHECK(m.sqrt_rv == 1.0);
    CHECK(m.ln_j1p == 0.0);
    CHECK(m.sqrt_j == 0.0);

    m.rv = 4.0;
    m.cv = 0.0;
    m.jump = 4.0;
    fill_transforms(m);
    CHECK(m.sqrt_rv == 2.0);
    CHECK(std::isnan(m.ln_cv));  // unavailable, day excluded from ln-target fits
    CHECK(m.ln_j1p == doctest::Approx(std::log(5.0)));
}

TEST_CASE("decomposition identities hold on random days") {
    Rng rng(42);
    const auto cfg = JumpTestConfig::from_alpha(0.01);
    for (int day = 0; day < 300; ++day) {
        std::vector<double> r(48);
        for (auto& x : r) x = rng.normal(0.0, 0.3);
        if (day % 3 == 0) r[rng.below(48)] += rng.normal(0.0, 3.0);  // jump days

        const double rv = realized_variance(r);
        const double bpv = bipower_variation(r);
        const double tpq = tripower_quarticity(r);
        const double z = jump_statistic(rv, bpv, tpq, int(r.size()));
        const auto d = decompose(rv, bpv, z, cfg);

        CHECK(d.jump >= 0.0);
        CHECK(d.cv >= 0.0);
        CHECK(d.jump + d.cv == doctest::Approx(rv).epsilon(1e-12));
    }
}

TEST_CASE("degree-2 homogeneity and Z scale invariance") {
    Rng rng(43);
    std::vector<double> r(48);
    for (auto& x : r) x = rng.normal(0.0, 0.5);
    const double rv = realized_variance(r), bpv = bipower_variation(r),
                 tpq = tripower_quarticity(r);
    const double z = jump_statistic(rv, bpv, tpq, 48);

    for (double c : {0.1, 10.0}) {
        std::vector<double> scaled(r);
        for (auto& x : scaled) x *= c;
        const double rv_c = realized_variance(scaled);
        const double bpv_c = bipower_variation(scaled);
        const double tpq_c = tripower_quarticity(scaled);
        CHECK(rv_c == doctest::Approx(c * c * rv).epsilon(1e-12));
        CHECK(bpv_c == doctest::Approx(c * c * bpv).epsilon(1e-12));
        CHECK(jump_statistic(rv_c, bpv_c, tpq_c, 48) == doctest::Approx(z).epsilon(1e-10));
    }
}

TEST_CASE("estimator consistency smoke test (small Monte Carlo)") {
    Rng rng(7);
    double rv_sum = 0.0, bpv_sum = 0.0;
    int rejections = 0;
    const int days = 600;
    const auto cfg = JumpTestConfig::from_alpha(0.01);
    for (int day = 0; day < days; ++day) {
        const auto r = simulate_brownian_day(rng, 48, 1.0);
        const double rv = realized_variance(r);
        const double bpv = bipower_variation(r);
        const double tpq = tripower_quarticity(r);
        rv_sum += rv;
        bpv_sum += bpv;
        if (jump_statistic(rv, bpv, tpq, 48) > cfg.threshold) ++rejections;
    }
    CHECK(rv_sum / days == doctest::Approx(1.0).epsilon(0.07));
    CHECK(bpv_sum / days == doctest::Approx(1.0).epsilon(0.12));
    CHECK(double(rejections) / days <= 0.04);
}

TEST_CASE("per-day measures and CSV round-trip") {
    IntradayPriceSeries s;
    s.slots_per_day = 4;
    s.days = {parse_date("2010-01-04"), parse_date("2010-01-05")};
    s.prices = {{10.0, 10.5, 9.5, 10.0}, {10.2, 10.0, 10.4, 10.1}};
    const auto panel = intraday_returns(s);
    const auto measures = compute_daily_measures(panel, JumpTestConfig::from_alpha(0.01));
    REQUIRE(measures.size() == 2);
    CHECK(measures[0].m == 3);
    CHECK(measures[1].m == 4);
    CHECK(measures[0].jump + measures[0].cv == doctest::Approx(measures[0].rv).epsilon(1e-12));

    std::ostringstream out;
    write_measures_csv(out, measures);
    std::istringstream in(out.str());
    const auto reread = read_measures_csv(in);
    REQUIRE(reread.size() == 2);
    CHECK(reread[0].rv == measures[0].rv);
    CHECK(reread[1].bpv == measures[1].bpv);
    CHECK(reread[1].z == measures[1].z);
}
