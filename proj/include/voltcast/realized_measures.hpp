#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "voltcast/calendar.hpp"
#include "voltcast/market_data.hpp"

namespace voltcast {

/// Jump-test significance and the implied normal-quantile threshold.
struct JumpTestConfig {
    double alpha = 0.01;
    double threshold = 2.3263478740408408;  // Phi^-1(0.99)

    static JumpTestConfig from_alpha(double alpha);
};

/// Per-day realized estimators and their transforms. Unavailable transforms
/// (log of a non-positive argument) are NaN.
struct DailyRealizedMeasures {
    Date day;
    int m = 0;  // return count used
    double rv = 0, bpv = 0, tpq = 0, rq = 0;
    double z = 0;  // NaN when the statistic is undefined (rv or bpv zero)
    double jump = 0, cv = 0;
    double ln_rv = 0, ln_j1p = 0, ln_cv = 0;
    double sqrt_rv = 0, sqrt_j = 0, sqrt_cv = 0;
};

/// RV = sum of squared returns.
double realized_variance(std::span<const double> returns);

/// BPV = (pi/2) * (M/(M-1)) * sum |r_j||r_{j-1}|.
double bipower_variation(std::span<const double> returns);

/// TPQ = M * mu_{4/3}^-3 * (M/(M-2)) * sum (|r_j||r_{j-1}||r_{j-2}|)^{4/3},
/// mu_{4/3} = 2^{2/3} Gamma(7/6) / Gamma(1/2).
double tripower_quarticity(std::span<const double> returns);

/// RQ = (M/3) * sum r^4.
double realized_quarticity(std::span<const double> returns);

/// Ratio-form jump statistic
///   Z = ((RV - BPV)/RV) / sqrt(((pi/2)^2 + pi - 5) * (1/M) * max(1, TPQ/BPV^2)).
/// Returns NaN when rv or bpv is zero (day excluded from jump testing).
double jump_statistic(double rv, double bpv, double tpq, int m);

/// J = 1{Z > threshold} * max(RV - BPV, 0); CV = RV - J.
struct JumpDecomposition {
    double jump = 0, cv = 0;
};
JumpDecomposition decompose(double rv, double bpv, double z, const JumpTestConfig& cfg);

/// Fills the six transform fields from rv/jump/cv.
void fill_transforms(DailyRealizedMeasures& m);

std::vector<DailyRealizedMeasures> compute_daily_measures(const ReturnPanel& panel,
                                                          const JumpTestConfig& cfg);

void write_measures_csv(std::ostream& out, const std::vector<DailyRealizedMeasures>& rows);
std::vector<DailyRealizedMeasures> read_measures_csv(std::istream& in);

}  // namespace voltcast
