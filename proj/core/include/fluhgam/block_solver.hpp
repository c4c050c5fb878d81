#pragma once

#include "fluhgam/design.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace fluhgam {

// Compiled sparse view of an assembled design. Columns whose support lies in
// a single unit's rows are "local" to that unit; everything else (intercept,
// national smooth, MRF, region, day-of-week-by-region) is "shared". The
// penalized information matrix is then block-arrowhead: independent local
// blocks bordered by the shared columns, which is what makes the P-IRLS
// inner loop cheap.
class CompiledDesign {
public:
    explicit CompiledDesign(const DesignBlocks& design);

    const DesignBlocks& design() const { return *design_; }
    int n_rows() const { return n_rows_; }
    int n_cols() const { return n_cols_; }
    int n_units() const { return n_units_; }
    int n_shared() const { return static_cast<int>(shared_cols_.size()); }
    int n_local(int unit) const { return static_cast<int>(unit_cols_[static_cast<std::size_t>(unit)].size()); }

    const std::vector<int>& unit_columns(int unit) const { return unit_cols_[static_cast<std::size_t>(unit)]; }
    const std::vector<int>& shared_columns() const { return shared_cols_; }

    struct PenaltyEntry {
        int i, j;   // global columns, i <= j
        double v;
    };
    struct PenaltyClass {
        std::string name;
        std::vector<PenaltyEntry> entries;
    };
    const std::vector<PenaltyClass>& penalty_classes() const { return penalty_classes_; }
    int class_index(const std::string& name) const; // -1 if absent

    Eigen::VectorXd apply(const Eigen::VectorXd& beta) const;              // X * beta
    Eigen::VectorXd apply_transpose_weighted(const Eigen::VectorXd& v) const; // X^T v

private:
    friend class BlockSolver;

    const DesignBlocks* design_;
    int n_rows_ = 0, n_cols_ = 0, n_units_ = 0, t_length_ = 0;

    // CSR rows split into local and shared entries. Positions index into the
    // unit's local block / the shared block respectively.
    std::vector<int> local_ptr_, shared_ptr_;
    std::vector<int> local_pos_, shared_pos_;
    std::vector<double> local_val_, shared_val_;
    std::vector<int> local_gcol_, shared_gcol_;

    std::vector<std::vector<int>> unit_cols_; // global ids per unit, ascending
    std::vector<int> shared_cols_;            // global ids, ascending
    std::vector<int> col_owner_;              // unit index or -1
    std::vector<int> col_pos_;                // position within its block

    std::vector<PenaltyClass> penalty_classes_;
};

// Cholesky factorization of A = X^T W X + sum_c lambda_c S_c in
// block-arrowhead form, with solves, selected-inverse traces for effective
// degrees of freedom, the dense coefficient covariance A^{-1}, and
// L^{-T} z application for coefficient sampling.
class BlockSolver {
public:
    explicit BlockSolver(const CompiledDesign& compiled);

    // Throws SingularSystem when the penalized information is not positive
    // definite (collinear unpenalized columns).
    void factorize(const Eigen::VectorXd& row_weights, const std::vector<double>& lambda_by_class);

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

    // beta^T S_c beta per class for the currently compiled penalties.
    double penalty_quadratic(int class_idx, const Eigen::VectorXd& beta) const;

    // trace(A^{-1} S_c) per penalty class; edf = p - sum_c lambda_c * trace_c.
    std::vector<double> penalty_inverse_traces() const;
    double effective_dof(const std::vector<double>& lambda_by_class) const;

    Eigen::MatrixXd dense_covariance() const; // A^{-1}

    // x = L^{-T} z for A = L L^T, so cov(x) = A^{-1}; z in global column order.
    Eigen::VectorXd half_solve_transposed(const Eigen::VectorXd& z) const;

private:
    const CompiledDesign* cd_;
    std::vector<Eigen::MatrixXd> local_info_;   // D_u (assembly scratch, full symmetric)
    std::vector<Eigen::MatrixXd> local_chol_;   // L_Du
    std::vector<Eigen::MatrixXd> border_;       // F_u = L_Du^{-1} B_u
    Eigen::MatrixXd shared_info_;               // C (assembly scratch)
    Eigen::MatrixXd shared_chol_;               // L_S with Schur = L_S L_S^T
    bool factored_ = false;

    void require_factored() const;
};

} // namespace fluhgam
