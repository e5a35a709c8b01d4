#include "voltcast/models/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "voltcast/errors.hpp"
#include "voltcast/stats.hpp"

namespace voltcast::models {

namespace {

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

struct StepCache {
    Eigen::ArrayXXd i, f, g, o, c, tanh_c;
    Eigen::MatrixXd h_prev, c_prev, x;
};

// Forward over a batch; sequences stacked column-wise per timestep.
Eigen::VectorXd forward(const LstmModel& m, const std::vector<const Eigen::MatrixXd*>& seqs,
                        std::vector<StepCache>* caches) {
    const int hidden = m.hidden;
    const int batch = int(seqs.size());
    const int steps = int(seqs[0]->cols());

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(hidden, batch);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(hidden, batch);
    if (caches) caches->resize(steps);

    for (int t = 0; t < steps; ++t) {
        Eigen::MatrixXd x(m.input_dim, batch);
        for (int bidx = 0; bidx < batch; ++bidx) x.col(bidx) = seqs[bidx]->col(t);

        Eigen::MatrixXd a = m.w * x + m.u * h;
        a.colwise() += m.b;

        const Eigen::ArrayXXd gate_i = sigmoid(a.topRows(hidden).array());
        const Eigen::ArrayXXd gate_f = sigmoid(a.middleRows(hidden, hidden).array());
        const Eigen::ArrayXXd gate_g = a.middleRows(2 * hidden, hidden).array().tanh();
        const Eigen::ArrayXXd gate_o = sigmoid(a.bottomRows(hidden).array());

        const Eigen::ArrayXXd c_new = gate_f * c.array() + gate_i * gate_g;
        const Eigen::ArrayXXd tanh_c = c_new.tanh();

        if (caches) {
            auto& cache = (*caches)[t];
            cache.i = gate_i;
            cache.f = gate_f;
            cache.g = gate_g;
            cache.o = gate_o;
            cache.c = c_new;
            cache.tanh_c = tanh_c;
            cache.h_prev = h;
            cache.c_prev = c;
            cache.x = x;
        }
        c = c_new.matrix();
        h = (gate_o * tanh_c).matrix();
    }
    return (m.head_w.transpose() * h).transpose().array() + m.head_b;
}

double l2_norm(const LstmGradients& g) {
    double s = g.w.squaredNorm() + g.u.squaredNorm() + g.b.squaredNorm() +
               g.head_w.squaredNorm() + g.head_b * g.head_b;
    return std::sqrt(s);
}

}  // namespace

LstmModel make_lstm(int input_dim, const LstmParams& params) {
    if (input_dim < 1 || params.hidden < 1) throw ModelError("LSTM needs input_dim, hidden >= 1");
    LstmModel m;
    m.input_dim = input_dim;
    m.hidden = params.hidden;
    m.params = params;

    Rng rng(params.seed);
    const double rw = 1.0 / std::sqrt(double(input_dim));
    const double ru = 1.0 / std::sqrt(double(params.hidden));
    m.w.resize(4 * params.hidden, input_dim);
    for (Eigen::Index i = 0; i < m.w.size(); ++i) m.w.data()[i] = rng.uniform(-rw, rw);
    m.u.resize(4 * params.hidden, params.hidden);
    for (Eigen::Index i = 0; i < m.u.size(); ++i) m.u.data()[i] = rng.uniform(-ru, ru);
    m.b = Eigen::VectorXd::Zero(4 * params.hidden);
    m.b.segment(params.hidden, params.hidden).setOnes();  // forget bias
    m.head_w.resize(params.hidden);
    for (Eigen::Index i = 0; i < m.head_w.size(); ++i) m.head_w(i) = rng.uniform(-ru, ru);
    m.head_b = 0.0;
    return m;
}

double lstm_loss_and_gradients(const LstmModel& m,
                               const std::vector<const Eigen::MatrixXd*>& seqs,
                               const std::vector<double>& targets, LstmGradients* grads) {
    const int batch = int(seqs.size());
    const int hidden = m.hidden;
    std::vector<StepCache> caches;
    const Eigen::VectorXd pred = forward(m, seqs, grads ? &caches : nullptr);

    double loss = 0.0;
    Eigen::VectorXd dpred(batch);
    for (int bidx = 0; bidx < batch; ++bidx) {
        const double e = pred(bidx) - targets[bidx];
        loss += e * e;
        dpred(bidx) = 2.0 * e / batch;
    }
    loss /= batch;
    if (!grads) return loss;

    grads->w = Eigen::MatrixXd::Zero(m.w.rows(), m.w.cols());
    grads->u = Eigen::MatrixXd::Zero(m.u.rows(), m.u.cols());
    grads->b = Eigen::VectorXd::Zero(m.b.size());
    grads->head_w = Eigen::VectorXd::Zero(m.head_w.size());
    grads->head_b = dpred.sum();

    const int steps = int(caches.size());
    const Eigen::MatrixXd h_last =
        (caches[steps - 1].o * caches[steps - 1].tanh_c).matrix();
    grads->head_w = h_last * dpred;

    Eigen::MatrixXd dh = m.head_w * dpred.transpose();  // H x B
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(hidden, batch);

    for (int t = steps - 1; t >= 0; --t) {
        const auto& cache = caches[t];
        const Eigen::ArrayXXd dh_arr = dh.array();
        const Eigen::ArrayXXd dc_total =
            dc.array() + dh_arr * cache.o * (1.0 - cache.tanh_c.square());

        const Eigen::ArrayXXd d_o = dh_arr * cache.tanh_c;
        const Eigen::ArrayXXd d_i = dc_total * cache.g;
        const Eigen::ArrayXXd d_g = dc_total * cache.i;
        const Eigen::ArrayXXd d_f = dc_total * cache.c_prev.array();

        Eigen::MatrixXd da(4 * hidden, batch);
        da.topRows(hidden) = (d_i * cache.i * (1.0 - cache.i)).matrix();
        da.middleRows(hidden, hidden) = (d_f * cache.f * (1.0 - cache.f)).matrix();
        da.middleRows(2 * hidden, hidden) = (d_g * (1.0 - cache.g.square())).matrix();
        da.bottomRows(hidden) = (d_o * cache.o * (1.0 - cache.o)).matrix();

        grads->w.noalias() += da * cache.x.transpose();
        grads->u.noalias() += da * cache.h_prev.transpose();
        grads->b += da.rowwise().sum();

        dh = m.u.transpose() * da;
        dc = (dc_total * cache.f).matrix();
    }
    return loss;
}

double lstm_predict_one(const LstmModel& m, const Eigen::MatrixXd& sequence) {
    if (sequence.rows() != m.input_dim)
        throw ModelError("LSTM prediction input dimension mismatch");
    const std::vector<const Eigen::MatrixXd*> seqs = {&sequence};
    return forward(m, seqs, nullptr)(0);
}

std::vector<double> lstm_predict(const LstmModel& m, const SequenceDataset& data) {
    std::vector<double> out;
    out.reserve(data.size());
    for (const auto& seq : data.sequences) out.push_back(lstm_predict_one(m, seq));
    return out;
}

namespace {

struct AdamState {
    LstmGradients m1, m2;
    int step = 0;

    explicit AdamState(const LstmModel& model) {
        m1.w = Eigen::MatrixXd::Zero(model.w.rows(), model.w.cols());
        m1.u = Eigen::MatrixXd::Zero(model.u.rows(), model.u.cols());
        m1.b = Eigen::VectorXd::Zero(model.b.size());
        m1.head_w = Eigen::VectorXd::Zero(model.head_w.size());
        m1.head_b = 0.0;
        m2 = m1;
    }
};

void adam_update(LstmModel& model, const LstmGradients& g, AdamState& state, double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, state.step);
    const double bc2 = 1.0 - std::pow(beta2, state.step);

    auto update = [&](auto& param, auto& m1, auto& m2, const auto& grad) {
        m1 = beta1 * m1 + (1.0 - beta1) * grad;
        m2 = (beta2 * m2.array() + (1.0 - beta2) * grad.array().square()).matrix();
        param.array() -= lr * (m1.array() / bc1) / ((m2.array() / bc2).sqrt() + eps);
    };
    update(model.w, state.m1.w, state.m2.w, g.w);
    update(model.u, state.m1.u, state.m2.u, g.u);
    update(model.b, state.m1.b, state.m2.b, g.b);
    update(model.head_w, state.m1.head_w, state.m2.head_w, g.head_w);

    state.m1.head_b = beta1 * state.m1.head_b + (1.0 - beta1) * g.head_b;
    state.m2.head_b = beta2 * state.m2.head_b + (1.0 - beta2) * g.head_b * g.head_b;
    model.head_b -= lr * (state.m1.head_b / bc1) / (std::sqrt(state.m2.head_b / bc2) + eps);
}

double dataset_mse(const LstmModel& m, const SequenceDataset& data) {
    if (data.size() == 0) return 0.0;
    double s = 0.0;
    for (size_t i = 0; i < data.size(); ++i) {
        const double e = lstm_predict_one(m, data.sequences[i]) - data.targets[i];
        s += e * e;
    }
    return s / double(data.size());
}

}  // namespace

LstmModel fit_lstm(const SequenceDataset& train, const SequenceDataset& val,
                   const LstmParams& params) {
    if (train.size() == 0) throw ModelError("LSTM fit with no training sequences");
    const int input_dim = int(train.sequences[0].rows());
    for (const auto& s : train.sequences)
        if (s.rows() != input_dim) throw ModelError("inconsistent LSTM input dimensions");

    LstmModel model = make_lstm(input_dim, params);
    AdamState adam(model);
    Rng rng(params.seed + 0x5eed);

    LstmModel best = model;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    const bool early_stop = val.size() > 0 && params.patience > 0;

    std::vector<int> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += size_t(params.batch)) {
            const size_t stop = std::min(order.size(), start + size_t(params.batch));
            std::vector<const Eigen::MatrixXd*> seqs;
            std::vector<double> targets;
            for (size_t k = start; k < stop; ++k) {
                seqs.push_back(&train.sequences[order[k]]);
                targets.push_back(train.targets[order[k]]);
            }
            LstmGradients grads;
            const double loss = lstm_loss_and_gradients(model, seqs, targets, &grads);
            if (!std::isfinite(loss))
                throw ModelError("LSTM training diverged (non-finite loss at epoch " +
                                 std::to_string(epoch) + ")");
            const double norm = l2_norm(grads);
            if (params.clip_norm > 0.0 && norm > params.clip_norm) {
                const double scale = params.clip_norm / norm;
                grads.w *= scale;
                grads.u *= scale;
                grads.b *= scale;
                grads.head_w *= scale;
                grads.head_b *= scale;
            }
            adam_update(model, grads, adam, params.step_size);
        }
        model.trained_epochs = epoch + 1;

        if (early_stop) {
            const double val_mse = dataset_mse(model, val);
            if (val_mse < best_val - 1e-12) {
                best_val = val_mse;
                best = model;
                since_best = 0;
            } else if (++since_best >= params.patience) {
                break;
            }
        }
    }

    if (early_stop) {
        best.best_val_mse = best_val;
        best.params = params;
        return best;
    }
    model.best_val_mse = dataset_mse(model, val);
    return model;
}

std::string LstmModel::to_json() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "lstm";
    j["input_dim"] = input_dim;
    j["hidden"] = hidden;
    auto dump = [](const auto& mat) {
        return std::vector<double>(mat.data(), mat.data() + mat.size());
    };
    j["w"] = dump(w);
    j["u"] = dump(u);
    j["b"] = dump(b);
    j["head_w"] = dump(head_w);
    j["head_b"] = head_b;
    j["params"] = {{"hidden", params.hidden},   {"seq_len", params.seq_len},
                   {"batch", params.batch},     {"epochs", params.epochs},
                   {"patience", params.patience}, {"step_size", params.step_size},
                   {"clip_norm", params.clip_norm}, {"seed", params.seed}};
    j["best_val_mse"] = best_val_mse;
    j["trained_epochs"] = trained_epochs;
    return j.dump() + "\n";
}

LstmModel LstmModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("kind") != "lstm") throw DataError("not an LSTM model document");
    LstmModel m;
    m.input_dim = j.at("input_dim");
    m.hidden = j.at("hidden");
    auto load_mat = [&](const char* key, Eigen::Index rows, Eigen::Index cols) {
        const auto v = j.at(key).get<std::vector<double>>();
        Eigen::MatrixXd mat(rows, cols);
        std::copy(v.begin(), v.end(), mat.data());
        return mat;
    };
    m.w = load_mat("w", 4 * m.hidden, m.input_dim);
    m.u = load_mat("u", 4 * m.hidden, m.hidden);
    m.b = load_mat("b", 4 * m.hidden, 1);
    m.head_w = load_mat("head_w", m.hidden, 1);
    m.head_b = j.at("head_b");
    const auto& p = j.at("params");
    m.params.hidden = p.at("hidden");
    m.params.seq_len = p.at("seq_len");
    m.params.batch = p.at("batch");
    m.params.epochs = p.at("epochs");
    m.params.patience = p.at("patience");
    m.params.step_size = p.at("step_size");
    m.params.clip_norm = p.at("clip_norm");
    m.params.seed = p.at("seed");
    m.best_val_mse = j.at("best_val_mse");
    m.trained_epochs = j.at("trained_epochs");
    return m;
}

}  // namespace voltcast::models
