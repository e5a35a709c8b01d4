#pragma once

#include <string>
#include <vector>

#include "voltcast/errors.hpp"

namespace voltcast::models {

/// GARCH(1,1) with Gaussian innovations:
///   sigma2_t = omega + alpha * eps^2_{t-1} + beta * sigma2_{t-1}.
struct GarchModel {
    double omega = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double mean = 0.0;        // sample mean removed before fitting
    double last_sigma2 = 0.0; // filtered variance at the final observation
    double last_eps2 = 0.0;
    double nll = 0.0;
    int fevals = 0;
    bool converged = false;

    /// One-step variance forecast sigma2_{T+1}.
    double forecast_one() const { return omega + alpha * last_eps2 + beta * last_sigma2; }

    std::string to_json() const;
    static GarchModel from_json(const std::string& text);
};

struct GarchFitOptions {
    int max_fevals = 20000;
    double tol = 1e-10;
};

struct GarchConvergenceError : ModelError {
    GarchModel best;
    explicit GarchConvergenceError(GarchModel m)
        : ModelError("GARCH MLE did not converge within the iteration budget"),
          best(std::move(m)) {}
};

/// Maximum likelihood via Nelder-Mead on an unconstrained reparameterization
/// (stationarity alpha + beta < 1 enforced by construction); sigma2_0 is the
/// sample variance. Throws GarchConvergenceError carrying the best-so-far
/// parameters if no restart reaches the tolerance.
GarchModel fit_garch(const std::vector<double>& daily_returns, const GarchFitOptions& opts = {});

/// Negative log-likelihood used by the fit; exposed for tests.
double garch_negative_log_likelihood(const std::vector<double>& demeaned, double omega,
                                     double alpha, double beta);

}  // namespace voltcast::models
