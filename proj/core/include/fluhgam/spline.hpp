#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace fluhgam {

struct BasisConfig {
    int t_length = 63;   // days in the fitting window
    double t_d = 5.0;    // days per basis function
};

// k - 1 = floor(t_length / t_d). Throws DimensionTooSmall if the result is
// below 2 (the spline would collapse into its null space).
int basis_dimension(const BasisConfig& cfg);

// One-dimensional low-rank thin-plate regression spline.
//
// Columns are [phi_1 .. phi_q, 1, t] with q = (k-1) - 2. The phi_j are kernel
// smooths sum_i W(i,j) * |t - t_i|^3 built by eigen-truncating the radial
// kernel matrix after projecting out the {1, t} polynomial space; weights are
// scaled so the penalty is exactly the identity on the kernel block and zero
// on the two null-space columns. Evaluation beyond the last sample point
// continues each column linearly with its analytic end derivative, so any
// fitted smooth has a constant growth rate outside the data window.
// Immutable after build; evaluation is pure.
class SplineBasis {
public:
    int rank() const { return static_cast<int>(kernel_weights_.cols()) + 2; } // k - 1
    int kernel_rank() const { return static_cast<int>(kernel_weights_.cols()); }
    double t_max_fit() const { return t_max_; }
    const std::vector<double>& sample_points() const { return points_; }

    // Kernel weight matrix (n x q); exposed so oracles can re-derive rows
    // from the |r|^3 definition.
    const Eigen::MatrixXd& kernel_weights() const { return kernel_weights_; }

    // In-sample row; throws OutOfRange for t > t_max_fit().
    Eigen::RowVectorXd evaluate(double t) const;

    // Delegates to evaluate() in-sample; linear continuation beyond t_max.
    Eigen::RowVectorXd evaluate_extrapolated(double t) const;

    // Analytic derivative row at t_max_fit (the extrapolation slope).
    const Eigen::RowVectorXd& end_derivative() const { return end_derivative_; }

    // diag(1,...,1,0,0): PSD, null space exactly the {1, t} columns.
    Eigen::MatrixXd penalty() const;

    // Rows at the sample points, computed through evaluate().
    Eigen::MatrixXd design_rows() const;

private:
    friend SplineBasis build_basis(std::span<const double>, int);

    std::vector<double> points_;
    Eigen::MatrixXd kernel_weights_;
    Eigen::RowVectorXd end_derivative_;
    double t_max_ = 0.0;
};

// Throws InsufficientPoints (< k_minus_1 points), DegeneratePoints
// (duplicates), DimensionTooSmall (k_minus_1 < 3).
SplineBasis build_basis(std::span<const double> points, int k_minus_1);

} // namespace fluhgam
