#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace voltcast::models {

struct LstmParams {
    int hidden = 32;
    int seq_len = 22;
    int batch = 32;
    int epochs = 300;
    int patience = 20;  // early stopping on validation MSE
    double step_size = 1e-3;
    double clip_norm = 5.0;
    uint64_t seed = 42;
};

/// Windowed sequences: each entry is an input_dim x seq_len matrix (columns are
/// timesteps) with a scalar next-step target.
struct SequenceDataset {
    std::vector<Eigen::MatrixXd> sequences;
    std::vector<double> targets;

    size_t size() const { return sequences.size(); }
};

/// Single-layer LSTM with a linear head on the final hidden state. Gate rows
/// are stacked [input; forget; candidate; output] in w/u/b.
struct LstmModel {
    int input_dim = 0;
    int hidden = 0;
    Eigen::MatrixXd w;       // 4H x D
    Eigen::MatrixXd u;       // 4H x H
    Eigen::VectorXd b;       // 4H
    Eigen::VectorXd head_w;  // H
    double head_b = 0.0;
    LstmParams params;
    double best_val_mse = 0.0;
    int trained_epochs = 0;

    std::string to_json() const;
    static LstmModel from_json(const std::string& text);
};

struct LstmGradients {
    Eigen::MatrixXd w, u;
    Eigen::VectorXd b, head_w;
    double head_b = 0.0;
};

/// Seeded uniform init; the forget-gate bias starts at 1.
LstmModel make_lstm(int input_dim, const LstmParams& params);

/// Mean-squared-error loss over the batch plus analytic BPTT gradients
/// (gradients optional). Exposed so tests can check against finite differences.
double lstm_loss_and_gradients(const LstmModel& model,
                               const std::vector<const Eigen::MatrixXd*>& sequences,
                               const std::vector<double>& targets, LstmGradients* grads);

double lstm_predict_one(const LstmModel& model, const Eigen::MatrixXd& sequence);
std::vector<double> lstm_predict(const LstmModel& model, const SequenceDataset& data);

/// Adam with global-norm gradient clipping; early stopping restores the best
/// validation-MSE parameters. Deterministic for a fixed seed.
LstmModel fit_lstm(const SequenceDataset& train, const SequenceDataset& val,
                   const LstmParams& params);

}  // namespace voltcast::models
