#pragma once

#include <string>

#include <Eigen/Core>

namespace voltcast {

struct KernelSpec {
    enum class Kind { Linear, Rbf };
    Kind kind = Kind::Rbf;
    /// RBF width; 0 means 1/(number of columns).
    double gamma = 0.0;

    static KernelSpec from_string(const std::string& kind, double gamma);
};

/// Kernel PCA over the double-centered Gram matrix. Component expansion
/// coefficients are scaled so each component has unit norm in feature space.
struct KpcaModel {
    Eigen::MatrixXd training_rows;  // N x D
    KernelSpec kernel;
    Eigen::VectorXd eigenvalues;    // descending, clamped at 0
    Eigen::MatrixXd coefficients;   // N x n_components
    int n_components = 0;
    bool truncated = false;  // requested more components than positive eigenvalues

    // Centering statistics reused by transform.
    Eigen::VectorXd train_kernel_col_mean;  // (1/N) K 1
    double train_kernel_mean = 0.0;         // (1/N^2) 1'K 1

    double kernel_value(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
};

/// Fits KPCA on the given rows. n_components = 0 selects the smallest count
/// explaining `variance_explained` of the centered kernel variance.
KpcaModel kpca_fit(const Eigen::MatrixXd& rows, const KernelSpec& kernel, int n_components = 0,
                   double variance_explained = 0.95);

/// Projects one row (dimension must match training rows).
Eigen::VectorXd kpca_transform(const KpcaModel& model, const Eigen::VectorXd& row);

/// Row-wise projection of a matrix.
Eigen::MatrixXd kpca_transform_matrix(const KpcaModel& model, const Eigen::MatrixXd& rows);

/// Fit-time projections of the training rows (row i = projection of row i).
Eigen::MatrixXd kpca_training_projections(const KpcaModel& model);

}  // namespace voltcast
