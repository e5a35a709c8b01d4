#include "voltcast/models/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "voltcast/errors.hpp"

namespace voltcast::models {

CombineResult combine(const std::vector<double>& f1, const std::vector<double>& f2, double eps1,
                      double eps2) {
    if (eps1 < 0.0 || eps2 < 0.0) throw ModelError("combine: residual magnitudes must be >= 0");
    if (f1.size() != f2.size()) throw ModelError("combine: prediction vectors differ in length");

    CombineResult r;
    const double total = eps1 + eps2;
    if (total > 0.0) {
        r.omega1 = eps2 / total;
        r.omega2 = eps1 / total;
    }
    r.combined.resize(f1.size());
    for (size_t i = 0; i < f1.size(); ++i) r.combined[i] = r.omega1 * f1[i] + r.omega2 * f2[i];
    return r;
}

std::vector<int> sequence_ready_rows(const FeatureMatrix& matrix, int seq_len,
                                     const std::vector<int>& rows) {
    std::vector<int> ready;
    for (int r : rows) {
        if (r < seq_len - 1) continue;
        bool ok = true;
        for (int k = r - seq_len + 1; k <= r && ok; ++k) ok = matrix.usable[k] != 0;
        if (ok) ready.push_back(r);
    }
    return ready;
}

namespace {

void check_schema(const EnsembleModel& model, const FeatureMatrix& matrix) {
    std::vector<std::string> missing;
    for (const auto& name : model.feature_names)
        if (matrix.col_index(name) < 0) missing.push_back(name);
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "feature schema mismatch; missing columns:";
        for (const auto& name : missing) msg << ' ' << name;
        throw ModelError(msg.str());
    }
}

// Full-matrix feature table in fit-time column order, plus the stage-1 GBT
// prediction column when present.
Eigen::MatrixXd extended_features(const EnsembleModel& model, const FeatureMatrix& matrix) {
    const size_t n = matrix.n_rows();
    const size_t d = model.feature_names.size();
    Eigen::MatrixXd x(n, d + (model.has_gbt && model.has_lstm ? 1 : 0));
    for (size_t j = 0; j < d; ++j) {
        const auto& col = matrix.col(model.feature_names[j]);
        for (size_t i = 0; i < n; ++i) x(i, j) = col.values[i];
    }
    if (model.has_gbt && model.has_lstm) {
        const Eigen::VectorXd stage1 = gbt_predict(model.gbt, x.leftCols(d));
        x.col(d) = stage1;
    }
    return x;
}

SequenceDataset build_sequences(const Eigen::MatrixXd& features, const FeatureMatrix& matrix,
                                int seq_len, const std::vector<int>& rows) {
    SequenceDataset data;
    for (int r : rows) {
        Eigen::MatrixXd seq(features.cols(), seq_len);
        for (int t = 0; t < seq_len; ++t)
            seq.col(t) = features.row(r - seq_len + 1 + t).transpose();
        data.sequences.push_back(std::move(seq));
        data.targets.push_back(matrix.target[r]);
    }
    return data;
}

double mean_abs_residual(const std::vector<double>& preds, const FeatureMatrix& matrix,
                         const std::vector<int>& rows) {
    if (rows.empty()) return 0.0;
    double s = 0.0;
    for (size_t i = 0; i < rows.size(); ++i)
        s += std::fabs(preds[i] - matrix.target[rows[i]]);
    return s / double(rows.size());
}

}  // namespace

EnsembleModel fit_ensemble(const FeatureMatrix& matrix, const std::vector<int>& train_rows,
                           const std::vector<int>& val_rows, const EnsembleParams& params) {
    if (!params.use_gbt && !params.use_lstm)
        throw ModelError("ensemble needs at least one submodel enabled");
    if (train_rows.empty()) throw ModelError("ensemble fit with no training rows");

    EnsembleModel model;
    model.has_gbt = params.use_gbt;
    model.has_lstm = params.use_lstm;
    model.feature_names = matrix.column_names();
    model.seq_len = params.lstm.seq_len;

    const Eigen::MatrixXd x_train = matrix.dense(train_rows);
    Eigen::VectorXd y_train(train_rows.size());
    for (size_t i = 0; i < train_rows.size(); ++i) y_train(i) = matrix.target[train_rows[i]];

    if (params.use_gbt)
        model.gbt = fit_gbt(x_train, y_train, model.feature_names, params.gbt);

    if (params.use_lstm) {
        const Eigen::MatrixXd features = extended_features(model, matrix);
        const auto train_ready = sequence_ready_rows(matrix, model.seq_len, train_rows);
        const auto val_ready = sequence_ready_rows(matrix, model.seq_len, val_rows);
        if (train_ready.empty())
            throw ModelError("no training rows have a full LSTM window; "
                             "reduce seq_len or extend the training span");
        const SequenceDataset train_data =
            build_sequences(features, matrix, model.seq_len, train_ready);
        const SequenceDataset val_data =
            build_sequences(features, matrix, model.seq_len, val_ready);
        model.lstm = fit_lstm(train_data, val_data, params.lstm);
    }

    // Residual magnitudes on the validation rows both submodels can score.
    const auto val_scored = model.has_lstm ? sequence_ready_rows(matrix, model.seq_len, val_rows)
                                           : val_rows;
    if (!val_scored.empty()) {
        const StagePredictions stage = ensemble_stage_predictions(model, matrix, val_scored);
        model.epsilon1 = model.has_lstm ? mean_abs_residual(stage.lstm, matrix, val_scored) : 0.0;
        model.epsilon2 = model.has_gbt ? mean_abs_residual(stage.gbt, matrix, val_scored) : 0.0;
    }

    if (!model.has_lstm) {
        model.omega1 = 0.0;
        model.omega2 = 1.0;
    } else if (!model.has_gbt) {
        model.omega1 = 1.0;
        model.omega2 = 0.0;
    } else {
        const CombineResult weights = combine({}, {}, model.epsilon1, model.epsilon2);
        model.omega1 = weights.omega1;
        model.omega2 = weights.omega2;
    }
    return model;
}

StagePredictions ensemble_stage_predictions(const EnsembleModel& model,
                                            const FeatureMatrix& matrix,
                                            const std::vector<int>& rows) {
    check_schema(model, matrix);
    StagePredictions out;
    const Eigen::MatrixXd features = extended_features(model, matrix);
    const size_t d = model.feature_names.size();

    if (model.has_gbt) {
        Eigen::MatrixXd x(rows.size(), d);
        for (size_t i = 0; i < rows.size(); ++i) x.row(i) = features.row(rows[i]).head(d);
        const Eigen::VectorXd pred = gbt_predict(model.gbt, x);
        out.gbt.assign(pred.data(), pred.data() + pred.size());
    }
    if (model.has_lstm) {
        for (int r : rows) {
            if (r < model.seq_len - 1)
                throw ModelError("row " + std::to_string(r) + " lacks the LSTM window history");
            Eigen::MatrixXd seq(features.cols(), model.seq_len);
            for (int t = 0; t < model.seq_len; ++t)
                seq.col(t) = features.row(r - model.seq_len + 1 + t).transpose();
            out.lstm.push_back(lstm_predict_one(model.lstm, seq));
        }
    }
    return out;
}

std::vector<double> ensemble_predict(const EnsembleModel& model, const FeatureMatrix& matrix,
                                     const std::vector<int>& rows) {
    const StagePredictions stage = ensemble_stage_predictions(model, matrix, rows);
    if (!model.has_lstm) return stage.gbt;
    if (!model.has_gbt) return stage.lstm;
    return combine(stage.lstm, stage.gbt, model.epsilon1, model.epsilon2).combined;
}

std::string EnsembleModel::to_json() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "ensemble";
    j["has_gbt"] = has_gbt;
    j["has_lstm"] = has_lstm;
    j["epsilon1"] = epsilon1;
    j["epsilon2"] = epsilon2;
    j["omega1"] = omega1;
    j["omega2"] = omega2;
    j["feature_names"] = feature_names;
    j["seq_len"] = seq_len;
    if (has_gbt) j["gbt"] = nlohmann::json::parse(gbt.to_json());
    if (has_lstm) j["lstm"] = nlohmann::json::parse(lstm.to_json());
    return j.dump() + "\n";
}

EnsembleModel EnsembleModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("kind") != "ensemble") throw DataError("not an ensemble model document");
    EnsembleModel m;
    m.has_gbt = j.at("has_gbt");
    m.has_lstm = j.at("has_lstm");
    m.epsilon1 = j.at("epsilon1");
    m.epsilon2 = j.at("epsilon2");
    m.omega1 = j.at("omega1");
    m.omega2 = j.at("omega2");
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.seq_len = j.at("seq_len");
    if (m.has_gbt) m.gbt = GbtModel::from_json(j.at("gbt").dump());
    if (m.has_lstm) m.lstm = LstmModel::from_json(j.at("lstm").dump());
    return m;
}

}  // namespace voltcast::models
