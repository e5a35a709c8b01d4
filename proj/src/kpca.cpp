#include "voltcast/kpca.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "voltcast/errors.hpp"

namespace voltcast {

KernelSpec KernelSpec::from_string(const std::string& kind, double gamma) {
    KernelSpec spec;
    spec.gamma = gamma;
    if (kind == "linear")
        spec.kind = Kind::Linear;
    else if (kind == "rbf")
        spec.kind = Kind::Rbf;
    else
        throw ConfigError("unknown kernel '" + kind + "' (expected linear or rbf)");
    return spec;
}

double KpcaModel::kernel_value(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    if (kernel.kind == KernelSpec::Kind::Linear) return a.dot(b);
    const double gamma = kernel.gamma > 0.0 ? kernel.gamma : 1.0 / double(a.size());
    return std::exp(-gamma * (a - b).squaredNorm());
}

KpcaModel kpca_fit(const Eigen::MatrixXd& rows, const KernelSpec& kernel, int n_components,
                   double variance_explained) {
    const Eigen::Index n = rows.rows();
    if (n < 2) throw DataError("KPCA needs at least 2 training rows");
    if (n_components < 0) throw ConfigError("KPCA n_components must be >= 0");

    KpcaModel model;
    model.training_rows = rows;
    model.kernel = kernel;

    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            k(i, j) = k(j, i) = model.kernel_value(rows.row(i), rows.row(j));

    model.train_kernel_col_mean = k.colwise().mean();
    model.train_kernel_mean = k.mean();

    // K~ = K - 1K - K1 + 1K1
    Eigen::MatrixXd centered = k;
    centered.rowwise() -= model.train_kernel_col_mean.transpose();
    centered.colwise() -= model.train_kernel_col_mean;
    centered.array() += model.train_kernel_mean;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered);
    if (eig.info() != Eigen::Success) throw ModelError("KPCA eigendecomposition failed");

    // Eigen returns ascending order; flip to descending and clamp noise negatives.
    Eigen::VectorXd values = eig.eigenvalues().reverse();
    Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (values(i) < 0.0) values(i) = 0.0;

    int positive = 0;
    const double floor = 1e-10;
    double total = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (values(i) > floor) {
            ++positive;
            total += values(i);
        }

    int keep;
    if (n_components == 0) {
        keep = 0;
        double cum = 0.0;
        while (keep < positive) {
            cum += values(keep);
            ++keep;
            if (cum >= variance_explained * total) break;
        }
        if (keep == 0) keep = positive > 0 ? 1 : 0;
    } else {
        keep = n_components;
        if (keep > positive) {
            keep = positive;
            model.truncated = true;
        }
    }

    model.n_components = keep;
    model.eigenvalues = values.head(keep);
    model.coefficients.resize(n, keep);
    for (int a = 0; a < keep; ++a)
        model.coefficients.col(a) = vectors.col(a) / std::sqrt(values(a));
    return model;
}

namespace {

Eigen::VectorXd centered_kernel_column(const KpcaModel& model, const Eigen::VectorXd& row) {
    const Eigen::Index n = model.training_rows.rows();
    if (row.size() != model.training_rows.cols())
        throw DataError("KPCA transform dimension mismatch");
    Eigen::VectorXd kx(n);
    for (Eigen::Index i = 0; i < n; ++i)
        kx(i) = model.kernel_value(model.training_rows.row(i), row);
    const double kx_mean = kx.mean();
    // centered: k~_x = k_x - (1/N)K1 - mean(k_x)1 + (1/N^2)1'K1
    return kx - model.train_kernel_col_mean -
           Eigen::VectorXd::Constant(n, kx_mean - model.train_kernel_mean);
}

}  // namespace

Eigen::VectorXd kpca_transform(const KpcaModel& model, const Eigen::VectorXd& row) {
    if (model.n_components == 0) return Eigen::VectorXd(0);
    return model.coefficients.transpose() * centered_kernel_column(model, row);
}

Eigen::MatrixXd kpca_transform_matrix(const KpcaModel& model, const Eigen::MatrixXd& rows) {
    Eigen::MatrixXd out(rows.rows(), model.n_components);
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        out.row(i) = kpca_transform(model, rows.row(i).transpose()).transpose();
    return out;
}

Eigen::MatrixXd kpca_training_projections(const KpcaModel& model) {
    return kpca_transform_matrix(model, model.training_rows);
}

}  // namespace voltcast
