#include "voltcast/models/garch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include <nlohmann/json.hpp>

#include "voltcast/stats.hpp"

namespace voltcast::models {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// theta = (log omega, logit persistence, logit alpha-share); keeps omega > 0,
// alpha, beta >= 0 and alpha + beta < 1 for any finite theta.
struct Params {
    double omega, alpha, beta;
};

Params decode(const double* theta) {
    const double omega = std::exp(theta[0]);
    const double persistence = sigmoid(theta[1]) * 0.999999;
    const double share = sigmoid(theta[2]);
    return {omega, persistence * share, persistence * (1.0 - share)};
}

std::array<double, 3> encode(double omega, double alpha, double beta) {
    const double persistence = std::clamp(alpha + beta, 1e-6, 0.999);
    const double share = std::clamp(alpha / persistence, 1e-6, 1.0 - 1e-6);
    return {std::log(omega), logit(persistence), logit(share)};
}

// Nelder-Mead with standard coefficients; deterministic, derivative-free.
struct SimplexResult {
    std::array<double, 3> x;
    double f = std::numeric_limits<double>::infinity();
    int fevals = 0;
    bool converged = false;
};

SimplexResult nelder_mead(const std::function<double(const double*)>& f,
                          std::array<double, 3> x0, int max_fevals, double tol) {
    constexpr int n = 3;
    std::array<std::array<double, n>, n + 1> pts;
    std::array<double, n + 1> vals;
    SimplexResult res;

    pts[0] = x0;
    vals[0] = f(x0.data());
    ++res.fevals;
    for (int i = 0; i < n; ++i) {
        pts[i + 1] = x0;
        pts[i + 1][i] += 0.25;
        vals[i + 1] = f(pts[i + 1].data());
        ++res.fevals;
    }

    auto order = [&] {
        for (int i = 0; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j)
                if (vals[j] < vals[i]) {
                    std::swap(vals[i], vals[j]);
                    std::swap(pts[i], pts[j]);
                }
    };

    while (res.fevals < max_fevals) {
        order();
        if (std::fabs(vals[n] - vals[0]) < tol * (std::fabs(vals[0]) + tol)) {
            res.converged = true;
            break;
        }
        std::array<double, n> centroid{};
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) centroid[j] += pts[i][j] / n;

        auto blend = [&](double coef) {
            std::array<double, n> p;
            for (int j = 0; j < n; ++j) p[j] = centroid[j] + coef * (pts[n][j] - centroid[j]);
            return p;
        };

        const auto reflected = blend(-1.0);
        const double fr = f(reflected.data());
        ++res.fevals;
        if (fr < vals[0]) {
            const auto expanded = blend(-2.0);
            const double fe = f(expanded.data());
            ++res.fevals;
            if (fe < fr) {
                pts[n] = expanded;
                vals[n] = fe;
            } else {
                pts[n] = reflected;
                vals[n] = fr;
            }
        } else if (fr < vals[n - 1]) {
            pts[n] = reflected;
            vals[n] = fr;
        } else {
            const auto contracted = blend(fr < vals[n] ? -0.5 : 0.5);
            const double fc = f(contracted.data());
            ++res.fevals;
            if (fc < std::min(fr, vals[n])) {
                pts[n] = contracted;
                vals[n] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    for (int j = 0; j < n; ++j) pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
                    vals[i] = f(pts[i].data());
                    ++res.fevals;
                }
            }
        }
    }
    order();
    res.x = pts[0];
    res.f = vals[0];
    return res;
}

}  // namespace

double garch_negative_log_likelihood(const std::vector<double>& demeaned, double omega,
                                     double alpha, double beta) {
    const double v0 = std::max(sample_variance(demeaned), 1e-12);
    double sigma2 = v0;
    double nll = 0.0;
    constexpr double half_log_2pi = 0.9189385332046727;
    for (size_t t = 0; t < demeaned.size(); ++t) {
        if (t > 0) sigma2 = omega + alpha * demeaned[t - 1] * demeaned[t - 1] + beta * sigma2;
        sigma2 = std::max(sigma2, 1e-300);
        nll += half_log_2pi + 0.5 * std::log(sigma2) + 0.5 * demeaned[t] * demeaned[t] / sigma2;
    }
    return nll;
}

GarchModel fit_garch(const std::vector<double>& daily_returns, const GarchFitOptions& opts) {
    std::vector<double> r;
    r.reserve(daily_returns.size());
    for (double v : daily_returns)
        if (!std::isnan(v)) r.push_back(v);
    if (r.size() < 300) throw DataError("GARCH fit needs at least 300 daily returns");

    const double mu = mean(r);
    for (auto& v : r) v -= mu;
    const double v = std::max(sample_variance(r), 1e-12);

    auto objective = [&](const double* theta) {
        const Params p = decode(theta);
        return garch_negative_log_likelihood(r, p.omega, p.alpha, p.beta);
    };

    const std::array<std::array<double, 3>, 3> starts = {
        encode(0.05 * v, 0.05, 0.90),
        encode(0.20 * v, 0.10, 0.70),
        encode(0.50 * v, 0.30, 0.40),
    };

    SimplexResult best;
    int total_fevals = 0;
    bool any_converged = false;
    for (const auto& s : starts) {
        SimplexResult res = nelder_mead(objective, s, opts.max_fevals / int(starts.size()), opts.tol);
        total_fevals += res.fevals;
        any_converged = any_converged || res.converged;
        if (res.f < best.f) {
            const bool keep_converged = res.converged;
            best = res;
            best.converged = keep_converged;
        }
    }

    const Params p = decode(best.x.data());
    GarchModel model;
    model.omega = p.omega;
    model.alpha = p.alpha;
    model.beta = p.beta;
    model.mean = mu;
    model.nll = best.f;
    model.fevals = total_fevals;
    model.converged = best.converged;

    // Filter once more to capture the terminal state for forecasting.
    double sigma2 = std::max(sample_variance(r), 1e-12);
    for (size_t t = 1; t < r.size(); ++t)
        sigma2 = p.omega + p.alpha * r[t - 1] * r[t - 1] + p.beta * sigma2;
    model.last_sigma2 = sigma2;
    model.last_eps2 = r.back() * r.back();

    if (!any_converged) throw GarchConvergenceError(model);
    return model;
}

std::string GarchModel::to_json() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "garch";
    j["omega"] = omega;
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["mean"] = mean;
    j["last_sigma2"] = last_sigma2;
    j["last_eps2"] = last_eps2;
    j["nll"] = nll;
    j["fevals"] = fevals;
    j["converged"] = converged;
    return j.dump(2) + "\n";
}

GarchModel GarchModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("kind") != "garch") throw DataError("not a GARCH model document");
    GarchModel m;
    m.omega = j.at("omega");
    m.alpha = j.at("alpha");
    m.beta = j.at("beta");
    m.mean = j.at("mean");
    m.last_sigma2 = j.at("last_sigma2");
    m.last_eps2 = j.at("last_eps2");
    m.nll = j.at("nll");
    m.fevals = j.at("fevals");
    m.converged = j.at("converged");
    return m;
}

}  // namespace voltcast::models
