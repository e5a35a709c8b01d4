#include "voltcast/models/har.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "voltcast/errors.hpp"

namespace voltcast::models {

std::string to_string(HarVariant v) {
    return v == HarVariant::HarCj ? "har_cj" : "harq_cj";
}

HarVariant har_variant_from_string(const std::string& s) {
    if (s == "har_cj") return HarVariant::HarCj;
    if (s == "harq_cj") return HarVariant::HarqCj;
    throw ConfigError("unknown HAR variant '" + s + "'");
}

std::vector<std::string> har_required_columns(HarVariant v) {
    std::vector<std::string> cols = {"cv_d", "cv_w", "cv_m", "j_d"};
    if (v == HarVariant::HarqCj) {
        cols.push_back("sqrt_rq");
        cols.push_back("rv_d");
        cols.push_back("ret_d");
    }
    return cols;
}

namespace {

// Term layout: intercept, cv_d, cv_w, cv_m, j_d [, sqrt_rq*rv_d, rv_d*1{ret<0}]
Eigen::MatrixXd design_matrix(const FeatureMatrix& raw, const std::vector<int>& rows,
                              HarVariant variant, std::vector<std::string>* names) {
    for (const auto& c : har_required_columns(variant))
        if (raw.col_index(c) < 0)
            throw DataError("HAR fit needs column '" + c + "' in the raw feature matrix");

    const auto& cv_d = raw.col("cv_d").values;
    const auto& cv_w = raw.col("cv_w").values;
    const auto& cv_m = raw.col("cv_m").values;
    const auto& j_d = raw.col("j_d").values;

    const bool harq = variant == HarVariant::HarqCj;
    const int p = harq ? 7 : 5;
    Eigen::MatrixXd x(rows.size(), p);
    for (size_t i = 0; i < rows.size(); ++i) {
        const int r = rows[i];
        x(i, 0) = 1.0;
        x(i, 1) = cv_d[r];
        x(i, 2) = cv_w[r];
        x(i, 3) = cv_m[r];
        x(i, 4) = j_d[r];
        if (harq) {
            const double rv_d = raw.col("rv_d").values[r];
            x(i, 5) = raw.col("sqrt_rq").values[r] * rv_d;
            x(i, 6) = raw.col("ret_d").values[r] < 0.0 ? rv_d : 0.0;
        }
    }
    if (names) {
        *names = {"intercept", "beta_cd", "beta_cw", "beta_cm", "beta_jd"};
        if (harq) {
            names->push_back("beta_q");
            names->push_back("beta_lev");
        }
    }
    return x;
}

}  // namespace

HarModel fit_har(const FeatureMatrix& raw, const std::vector<int>& rows, HarVariant variant) {
    HarModel model;
    model.variant = variant;
    Eigen::MatrixXd x = design_matrix(raw, rows, variant, &model.term_names);
    const int p = int(x.cols());
    if (int(rows.size()) < 5 * p)
        throw DataError("HAR fit needs at least 5x as many rows as coefficients");

    Eigen::VectorXd y(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) y(i) = raw.target[rows[i]];

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        // Columns permuted past the numerical rank are the collinear ones.
        const auto perm = qr.colsPermutation().indices();
        std::ostringstream msg;
        msg << "rank-deficient HAR design; collinear terms:";
        for (int i = qr.rank(); i < p; ++i) msg << ' ' << model.term_names[perm(i)];
        throw ModelError(msg.str());
    }
    model.coef = qr.solve(y);
    model.n_obs = int(rows.size());

    const Eigen::VectorXd resid = y - x * model.coef;
    const double ssr = resid.squaredNorm();
    model.resid_var = ssr / double(rows.size() - p);
    const double tss = (y.array() - y.mean()).square().sum();
    model.r2 = tss > 0.0 ? 1.0 - ssr / tss : 0.0;

    const Eigen::MatrixXd xtx_inv =
        (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    model.std_errors = (model.resid_var * xtx_inv.diagonal().array()).sqrt();
    return model;
}

std::vector<double> har_predict(const HarModel& model, const FeatureMatrix& raw,
                                const std::vector<int>& rows) {
    Eigen::MatrixXd x = design_matrix(raw, rows, model.variant, nullptr);
    Eigen::VectorXd preds = x * model.coef;
    return {preds.data(), preds.data() + preds.size()};
}

std::string HarModel::to_json() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "har";
    j["variant"] = to_string(variant);
    auto& coefs = j["coefficients"] = nlohmann::json::object();
    for (size_t i = 0; i < term_names.size(); ++i) coefs[term_names[i]] = coef(i);
    auto& ses = j["std_errors"] = nlohmann::json::object();
    for (size_t i = 0; i < term_names.size(); ++i) ses[term_names[i]] = std_errors(i);
    j["r2"] = r2;
    j["resid_var"] = resid_var;
    j["n_obs"] = n_obs;
    return j.dump(2) + "\n";
}

HarModel HarModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("kind") != "har") throw DataError("not a HAR model document");
    HarModel m;
    m.variant = har_variant_from_string(j.at("variant"));
    m.term_names = {"intercept", "beta_cd", "beta_cw", "beta_cm", "beta_jd"};
    if (m.variant == HarVariant::HarqCj) {
        m.term_names.push_back("beta_q");
        m.term_names.push_back("beta_lev");
    }
    m.coef.resize(m.term_names.size());
    m.std_errors.resize(m.term_names.size());
    for (size_t i = 0; i < m.term_names.size(); ++i) {
        m.coef(i) = j.at("coefficients").at(m.term_names[i]).get<double>();
        m.std_errors(i) = j.at("std_errors").at(m.term_names[i]).get<double>();
    }
    m.r2 = j.at("r2");
    m.resid_var = j.at("resid_var");
    m.n_obs = j.at("n_obs");
    return m;
}

}  // namespace voltcast::models
