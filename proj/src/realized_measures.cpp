#include "voltcast/realized_measures.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "voltcast/csv.hpp"
#include "voltcast/errors.hpp"
#include "voltcast/stats.hpp"

namespace voltcast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// mu_{4/3} = 2^{2/3} Gamma(7/6) / Gamma(1/2), the 4/3 absolute moment of a
// standard normal.
double mu_four_thirds() {
    static const double mu = std::pow(2.0, 2.0 / 3.0) * std::tgamma(7.0 / 6.0) /
                             std::tgamma(0.5);
    return mu;
}

}  // namespace

JumpTestConfig JumpTestConfig::from_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("jump-test alpha must lie in (0,1)");
    return JumpTestConfig{alpha, normal_quantile(1.0 - alpha)};
}

double realized_variance(std::span<const double> returns) {
    if (returns.empty()) throw DataError("realized_variance over an empty return vector");
    double s = 0.0;
    for (double r : returns) s += r * r;
    return s;
}

double bipower_variation(std::span<const double> returns) {
    const size_t m = returns.size();
    if (m < 2) throw DataError("bipower_variation needs at least 2 returns");
    double s = 0.0;
    for (size_t j = 1; j < m; ++j) s += std::fabs(returns[j]) * std::fabs(returns[j - 1]);
    return (M_PI / 2.0) * (double(m) / double(m - 1)) * s;
}

double tripower_quarticity(std::span<const double> returns) {
    const size_t m = returns.size();
    if (m < 3) throw DataError("tripower_quarticity needs at least 3 returns");
    const double p = 4.0 / 3.0;
    double s = 0.0;
    for (size_t j = 2; j < m; ++j)
        s += std::pow(std::fabs(returns[j]), p) * std::pow(std::fabs(returns[j - 1]), p) *
             std::pow(std::fabs(returns[j - 2]), p);
    const double mu = mu_four_thirds();
    return double(m) * std::pow(mu, -3.0) * (double(m) / double(m - 2)) * s;
}

double realized_quarticity(std::span<const double> returns) {
    const size_t m = returns.size();
    if (m == 0) throw DataError("realized_quarticity over an empty return vector");
    double s = 0.0;
    for (double r : returns) s += r * r * r * r;
    return (double(m) / 3.0) * s;
}

double jump_statistic(double rv, double bpv, double tpq, int m) {
    if (m < 3) throw DataError("jump_statistic needs m >= 3");
    if (rv <= 0.0 || bpv <= 0.0) return kNaN;
    const double theta = (M_PI / 2.0) * (M_PI / 2.0) + M_PI - 5.0;
    const double ratio = std::max(1.0, tpq / (bpv * bpv));
    return ((rv - bpv) / rv) / std::sqrt(theta * ratio / double(m));
}

JumpDecomposition decompose(double rv, double bpv, double z, const JumpTestConfig& cfg) {
    if (rv < 0.0) throw DataError("decompose requires rv >= 0");
    JumpDecomposition d;
    // NaN z compares false: undefined-statistic days carry no jump.
    if (z > cfg.threshold) d.jump = std::max(rv - bpv, 0.0);
    d.cv = rv - d.jump;
    return d;
}

void fill_transforms(DailyRealizedMeasures& m) {
    m.ln_rv = m.rv > 0.0 ? std::log(m.rv) : kNaN;
    m.ln_j1p = std::log1p(m.jump);
    m.ln_cv = m.cv > 0.0 ? std::log(m.cv) : kNaN;
    m.sqrt_rv = std::sqrt(m.rv);
    m.sqrt_j = std::sqrt(m.jump);
    m.sqrt_cv = std::sqrt(m.cv);
}

std::vector<DailyRealizedMeasures> compute_daily_measures(const ReturnPanel& panel,
                                                          const JumpTestConfig& cfg) {
    std::vector<DailyRealizedMeasures> out;
    out.reserve(panel.days.size());
    for (size_t d = 0; d < panel.days.size(); ++d) {
        const auto& r = panel.returns[d];
        DailyRealizedMeasures m;
        m.day = panel.days[d];
        m.m = int(r.size());
        m.rv = realized_variance(r);
        m.bpv = r.size() >= 2 ? bipower_variation(r) : 0.0;
        m.tpq = r.size() >= 3 ? tripower_quarticity(r) : 0.0;
        m.rq = realized_quarticity(r);
        m.z = (r.size() >= 3) ? jump_statistic(m.rv, m.bpv, m.tpq, m.m) : kNaN;
        const JumpDecomposition jd = decompose(m.rv, m.bpv, m.z, cfg);
        m.jump = jd.jump;
        m.cv = jd.cv;
        fill_transforms(m);
        out.push_back(m);
    }
    return out;
}

namespace {

const char* kMeasureCols[] = {"date",  "m",      "rv",      "bpv",   "tpq",
                              "rq",    "z",      "jump",    "cv",    "ln_rv",
                              "ln_j1p", "ln_cv", "sqrt_rv", "sqrt_j", "sqrt_cv"};

}  // namespace

void write_measures_csv(std::ostream& out, const std::vector<DailyRealizedMeasures>& rows) {
    write_csv_row(out, {std::begin(kMeasureCols), std::end(kMeasureCols)});
    for (const auto& m : rows) {
        write_csv_row(out, {format_date(m.day), std::to_string(m.m), format_double(m.rv),
                            format_double(m.bpv), format_double(m.tpq), format_double(m.rq),
                            format_double(m.z), format_double(m.jump), format_double(m.cv),
                            format_double(m.ln_rv), format_double(m.ln_j1p),
                            format_double(m.ln_cv), format_double(m.sqrt_rv),
                            format_double(m.sqrt_j), format_double(m.sqrt_cv)});
    }
}

std::vector<DailyRealizedMeasures> read_measures_csv(std::istream& in) {
    CsvTable t = read_csv(in);
    for (const char* name : kMeasureCols) t.require_col(name);
    std::vector<DailyRealizedMeasures> out;
    for (size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        auto num = [&](const char* name) {
            return parse_double_cell(row[t.col(name)], r + 1, name);
        };
        DailyRealizedMeasures m;
        m.day = parse_date(row[t.col("date")]);
        m.m = int(num("m"));
        m.rv = num("rv");
        m.bpv = num("bpv");
        m.tpq = num("tpq");
        m.rq = num("rq");
        m.z = num("z");
        m.jump = num("jump");
        m.cv = num("cv");
        m.ln_rv = num("ln_rv");
        m.ln_j1p = num("ln_j1p");
        m.ln_cv = num("ln_cv");
        m.sqrt_rv = num("sqrt_rv");
        m.sqrt_j = num("sqrt_j");
        m.sqrt_cv = num("sqrt_cv");
        out.push_back(m);
    }
    return out;
}

}  // namespace voltcast
