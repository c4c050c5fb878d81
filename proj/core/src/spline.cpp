#include "fluhgam/spline.hpp"

#include "fluhgam/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fluhgam {

int basis_dimension(const BasisConfig& cfg) {
    if (cfg.t_d <= 0.0) throw ValidationError("t_d must be positive");
    if (cfg.t_length < 2) throw ValidationError("t_length must be at least 2");
    const int k_minus_1 = static_cast<int>(std::floor(static_cast<double>(cfg.t_length) / cfg.t_d));
    if (k_minus_1 < 2) {
        throw DimensionTooSmall("floor(t_length / t_d) = " + std::to_string(k_minus_1) +
                                " < 2; decrease t_d");
    }
    return k_minus_1;
}

SplineBasis build_basis(std::span<const double> points, int k_minus_1) {
    if (k_minus_1 < 3) {
        throw DimensionTooSmall("k - 1 = " + std::to_string(k_minus_1) +
                                " leaves no penalized kernel component (need >= 3)");
    }
    std::vector<double> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i] == pts[i - 1]) {
            throw DegeneratePoints("duplicate sample point " + std::to_string(pts[i]));
        }
    }
    const auto n = static_cast<Eigen::Index>(pts.size());
    const int q = k_minus_1 - 2;
    if (n < k_minus_1) {
        throw InsufficientPoints("need at least " + std::to_string(k_minus_1) +
                                 " distinct points, have " + std::to_string(pts.size()));
    }

    // Radial kernel eta(r) = r^3 between all point pairs.
    Eigen::MatrixXd kernel(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double r = std::abs(pts[static_cast<std::size_t>(i)] -
                                      pts[static_cast<std::size_t>(j)]);
            kernel(i, j) = r * r * r;
        }
    }

    // Project out the {1, t} polynomial space; the projected kernel is PSD
    // because r^3 is conditionally positive definite of order 2.
    Eigen::MatrixXd poly(n, 2);
    poly.col(0).setOnes();
    for (Eigen::Index i = 0; i < n; ++i) poly(i, 1) = pts[static_cast<std::size_t>(i)];
    Eigen::MatrixXd q_poly = Eigen::HouseholderQR<Eigen::MatrixXd>(poly)
                                 .householderQ() * Eigen::MatrixXd::Identity(n, 2);
    Eigen::MatrixXd projected = kernel;
    projected -= q_poly * (q_poly.transpose() * kernel);
    projected -= (projected * q_poly) * q_poly.transpose();
    projected = 0.5 * (projected + projected.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(projected);
    if (eig.info() != Eigen::Success) {
        throw DegeneratePoints("kernel eigendecomposition failed");
    }
    // Eigenvalues ascend; keep the q largest, ordered smoothest-first.
    const double lambda_max = eig.eigenvalues()(n - 1);
    Eigen::MatrixXd weights(n, q);
    for (int j = 0; j < q; ++j) {
        const Eigen::Index src = n - 1 - j;
        const double lambda = eig.eigenvalues()(src);
        if (lambda <= lambda_max * 1e-12) {
            throw DegeneratePoints("kernel rank too low for requested basis dimension");
        }
        // 1/sqrt(lambda) scaling makes the thin-plate energy of phi_j exactly
        // the squared coefficient, so the penalty block is the identity.
        weights.col(j) = eig.eigenvectors().col(src) / std::sqrt(lambda);
    }

    SplineBasis basis;
    basis.points_ = std::move(pts);
    basis.kernel_weights_ = std::move(weights);
    basis.t_max_ = basis.points_.back();

    Eigen::RowVectorXd deriv(k_minus_1);
    for (int j = 0; j < q; ++j) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = basis.t_max_ - basis.points_[static_cast<std::size_t>(i)];
            acc += basis.kernel_weights_(i, j) * 3.0 * r * r;
        }
        deriv(j) = acc;
    }
    deriv(q) = 0.0;     // constant column
    deriv(q + 1) = 1.0; // linear column
    basis.end_derivative_ = std::move(deriv);
    return basis;
}

Eigen::RowVectorXd SplineBasis::evaluate(double t) const {
    if (t > t_max_ + 1e-12) {
        throw OutOfRange("t = " + std::to_string(t) + " beyond t_max_fit = " +
                         std::to_string(t_max_) + "; use evaluate_extrapolated");
    }
    const int q = kernel_rank();
    Eigen::RowVectorXd row(rank());
    for (int j = 0; j < q; ++j) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < kernel_weights_.rows(); ++i) {
            const double r = std::abs(t - points_[static_cast<std::size_t>(i)]);
            acc += kernel_weights_(i, j) * r * r * r;
        }
        row(j) = acc;
    }
    row(q) = 1.0;
    row(q + 1) = t;
    return row;
}

Eigen::RowVectorXd SplineBasis::evaluate_extrapolated(double t) const {
    if (t <= t_max_) return evaluate(t);
    return evaluate(t_max_) + (t - t_max_) * end_derivative_;
}

Eigen::MatrixXd SplineBasis::penalty() const {
    Eigen::MatrixXd pen = Eigen::MatrixXd::Zero(rank(), rank());
    for (int j = 0; j < kernel_rank(); ++j) pen(j, j) = 1.0;
    return pen;
}

Eigen::MatrixXd SplineBasis::design_rows() const {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(points_.size()), rank());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        rows.row(static_cast<Eigen::Index>(i)) = evaluate(points_[i]);
    }
    return rows;
}

} // namespace fluhgam
