#include "fluhgam/block_solver.hpp"

#include "fluhgam/errors.hpp"

#include <algorithm>
#include <map>

namespace fluhgam {

CompiledDesign::CompiledDesign(const DesignBlocks& design) : design_(&design) {
    n_rows_ = design.n_rows();
    n_cols_ = design.total_columns();
    n_units_ = static_cast<int>(design.geography().n_units());
    t_length_ = design.t_length();

    // Ownership: a column is local to unit u when its nonzero rows all lie in
    // u's row range; otherwise shared. The intercept is shared by definition.
    col_owner_.assign(static_cast<std::size_t>(n_cols_), -2);
    col_owner_[0] = -1;
    for (const auto& b : design.blocks()) {
        for (int j = 0; j < b.width(); ++j) {
            int owner = -2; // unset
            for (Eigen::SparseMatrix<double>::InnerIterator it(b.columns, j); it; ++it) {
                const int u = static_cast<int>(it.row()) / t_length_;
                if (owner == -2) {
                    owner = u;
                } else if (owner != u) {
                    owner = -1;
                    break;
                }
            }
            col_owner_[static_cast<std::size_t>(b.col_offset + j)] = owner == -2 ? -1 : owner;
        }
    }

    // Columns coupled across units by a penalty (the MRF Laplacian) must live
    // in the shared block; promote until stable.
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& b : design.blocks()) {
            for (int i = 0; i < b.width(); ++i) {
                for (int j = i + 1; j < b.width(); ++j) {
                    if (b.penalty(i, j) == 0.0) continue;
                    auto& oi = col_owner_[static_cast<std::size_t>(b.col_offset + i)];
                    auto& oj = col_owner_[static_cast<std::size_t>(b.col_offset + j)];
                    if (oi != oj) {
                        if (oi != -1) { oi = -1; changed = true; }
                        if (oj != -1) { oj = -1; changed = true; }
                    }
                }
            }
        }
    }

    unit_cols_.resize(static_cast<std::size_t>(n_units_));
    col_pos_.assign(static_cast<std::size_t>(n_cols_), -1);
    for (int g = 0; g < n_cols_; ++g) {
        const int owner = col_owner_[static_cast<std::size_t>(g)];
        if (owner < 0) {
            col_pos_[static_cast<std::size_t>(g)] = static_cast<int>(shared_cols_.size());
            shared_cols_.push_back(g);
        } else {
            auto& cols = unit_cols_[static_cast<std::size_t>(owner)];
            col_pos_[static_cast<std::size_t>(g)] = static_cast<int>(cols.size());
            cols.push_back(g);
        }
    }

    // Row-major split entries.
    std::vector<std::vector<std::pair<int, double>>> per_row(static_cast<std::size_t>(n_rows_));
    for (auto& v : per_row) v.reserve(32);
    for (std::size_t r = 0; r < per_row.size(); ++r) per_row[r].emplace_back(0, 1.0);
    for (const auto& b : design.blocks()) {
        for (int j = 0; j < b.width(); ++j) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(b.columns, j); it; ++it) {
                per_row[static_cast<std::size_t>(it.row())].emplace_back(b.col_offset + j, it.value());
            }
        }
    }

    local_ptr_.assign(static_cast<std::size_t>(n_rows_) + 1, 0);
    shared_ptr_.assign(static_cast<std::size_t>(n_rows_) + 1, 0);
    for (int r = 0; r < n_rows_; ++r) {
        auto& entries = per_row[static_cast<std::size_t>(r)];
        std::sort(entries.begin(), entries.end());
        for (const auto& [g, val] : entries) {
            if (col_owner_[static_cast<std::size_t>(g)] < 0) {
                shared_pos_.push_back(col_pos_[static_cast<std::size_t>(g)]);
                shared_gcol_.push_back(g);
                shared_val_.push_back(val);
            } else {
                local_pos_.push_back(col_pos_[static_cast<std::size_t>(g)]);
                local_gcol_.push_back(g);
                local_val_.push_back(val);
            }
        }
        local_ptr_[static_cast<std::size_t>(r) + 1] = static_cast<int>(local_pos_.size());
        shared_ptr_[static_cast<std::size_t>(r) + 1] = static_cast<int>(shared_pos_.size());
    }

    // Penalty triplets grouped by class, upper triangle in global columns.
    std::map<std::string, std::size_t> class_of;
    for (const auto& b : design.blocks()) {
        auto [it, inserted] = class_of.emplace(b.penalty_class, penalty_classes_.size());
        if (inserted) penalty_classes_.push_back({b.penalty_class, {}});
        auto& entries = penalty_classes_[it->second].entries;
        for (int i = 0; i < b.width(); ++i) {
            for (int j = i; j < b.width(); ++j) {
                const double v = b.penalty(i, j);
                if (v != 0.0) entries.push_back({b.col_offset + i, b.col_offset + j, v});
            }
        }
    }
    for (const auto& pc : penalty_classes_) {
        for (const auto& e : pc.entries) {
            const int oi = col_owner_[static_cast<std::size_t>(e.i)];
            const int oj = col_owner_[static_cast<std::size_t>(e.j)];
            if (oi != oj && oi >= 0 && oj >= 0) {
                throw ModelError("penalty couples columns of different units");
            }
            if ((oi >= 0) != (oj >= 0)) {
                throw ModelError("penalty couples local and shared columns");
            }
        }
    }
}

int CompiledDesign::class_index(const std::string& name) const {
    for (std::size_t i = 0; i < penalty_classes_.size(); ++i) {
        if (penalty_classes_[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

Eigen::VectorXd CompiledDesign::apply(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd out(n_rows_);
    for (int r = 0; r < n_rows_; ++r) {
        double acc = 0.0;
        for (int k = local_ptr_[static_cast<std::size_t>(r)]; k < local_ptr_[static_cast<std::size_t>(r) + 1]; ++k) {
            acc += local_val_[static_cast<std::size_t>(k)] * beta(local_gcol_[static_cast<std::size_t>(k)]);
        }
        for (int k = shared_ptr_[static_cast<std::size_t>(r)]; k < shared_ptr_[static_cast<std::size_t>(r) + 1]; ++k) {
            acc += shared_val_[static_cast<std::size_t>(k)] * beta(shared_gcol_[static_cast<std::size_t>(k)]);
        }
        out(r) = acc;
    }
    return out;
}

Eigen::VectorXd CompiledDesign::apply_transpose_weighted(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_cols_);
    for (int r = 0; r < n_rows_; ++r) {
        const double vr = v(r);
        if (vr == 0.0) continue;
        for (int k = local_ptr_[static_cast<std::size_t>(r)]; k < local_ptr_[static_cast<std::size_t>(r) + 1]; ++k) {
            out(local_gcol_[static_cast<std::size_t>(k)]) += local_val_[static_cast<std::size_t>(k)] * vr;
        }
        for (int k = shared_ptr_[static_cast<std::size_t>(r)]; k < shared_ptr_[static_cast<std::size_t>(r) + 1]; ++k) {
            out(shared_gcol_[static_cast<std::size_t>(k)]) += shared_val_[static_cast<std::size_t>(k)] * vr;
        }
    }
    return out;
}

BlockSolver::BlockSolver(const CompiledDesign& compiled) : cd_(&compiled) {
    const auto n_units = static_cast<std::size_t>(cd_->n_units());
    local_info_.resize(n_units);
    local_chol_.resize(n_units);
    border_.resize(n_units);
    const int s = cd_->n_shared();
    for (std::size_t u = 0; u < n_units; ++u) {
        const int l = cd_->n_local(static_cast<int>(u));
        local_info_[u].resize(l, l);
        border_[u].resize(l, s);
    }
    shared_info_.resize(s, s);
}

void BlockSolver::factorize(const Eigen::VectorXd& w, const std::vector<double>& lambda_by_class) {
    const int t_len = cd_->design().t_length();
    shared_info_.setZero();
    for (auto& m : local_info_) m.setZero();
    for (auto& m : border_) m.setZero();

    // Accumulate X^T W X blockwise; rows of one unit are contiguous.
    for (int r = 0; r < cd_->n_rows(); ++r) {
        const double wr = w(r);
        const int u = r / t_len;
        auto& d = local_info_[static_cast<std::size_t>(u)];
        auto& b = border_[static_cast<std::size_t>(u)];
        const int l0 = cd_->local_ptr_[static_cast<std::size_t>(r)];
        const int l1 = cd_->local_ptr_[static_cast<std::size_t>(r) + 1];
        const int s0 = cd_->shared_ptr_[static_cast<std::size_t>(r)];
        const int s1 = cd_->shared_ptr_[static_cast<std::size_t>(r) + 1];
        for (int a = l0; a < l1; ++a) {
            const int ia = cd_->local_pos_[static_cast<std::size_t>(a)];
            const double va = wr * cd_->local_val_[static_cast<std::size_t>(a)];
            for (int c = a; c < l1; ++c) {
                d(ia, cd_->local_pos_[static_cast<std::size_t>(c)]) +=
                    va * cd_->local_val_[static_cast<std::size_t>(c)];
            }
            for (int c = s0; c < s1; ++c) {
                b(ia, cd_->shared_pos_[static_cast<std::size_t>(c)]) +=
                    va * cd_->shared_val_[static_cast<std::size_t>(c)];
            }
        }
        for (int a = s0; a < s1; ++a) {
            const int ia = cd_->shared_pos_[static_cast<std::size_t>(a)];
            const double va = wr * cd_->shared_val_[static_cast<std::size_t>(a)];
            for (int c = a; c < s1; ++c) {
                shared_info_(ia, cd_->shared_pos_[static_cast<std::size_t>(c)]) +=
                    va * cd_->shared_val_[static_cast<std::size_t>(c)];
            }
        }
    }

    // Add lambda-scaled penalties.
    const auto& classes = cd_->penalty_classes();
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const double lambda = lambda_by_class[c];
        for (const auto& e : classes[c].entries) {
            const int oi = cd_->col_owner_[static_cast<std::size_t>(e.i)];
            const int pi = cd_->col_pos_[static_cast<std::size_t>(e.i)];
            const int pj = cd_->col_pos_[static_cast<std::size_t>(e.j)];
            if (oi < 0) {
                shared_info_(std::min(pi, pj), std::max(pi, pj)) += lambda * e.v;
            } else {
                auto& d = local_info_[static_cast<std::size_t>(oi)];
                d(std::min(pi, pj), std::max(pi, pj)) += lambda * e.v;
            }
        }
    }

    // Mirror upper triangles, then factor: per-unit Cholesky, border
    // propagation, Schur complement on the shared block.
    Eigen::MatrixXd schur = shared_info_.selfadjointView<Eigen::Upper>();
    for (int u = 0; u < cd_->n_units(); ++u) {
        auto& d = local_info_[static_cast<std::size_t>(u)];
        if (d.rows() == 0) continue;
        Eigen::MatrixXd full = d.selfadjointView<Eigen::Upper>();
        Eigen::LLT<Eigen::MatrixXd> llt(full);
        if (llt.info() != Eigen::Success) {
            throw SingularSystem("penalized information not positive definite (unit block " +
                                 std::to_string(u) + ")");
        }
        local_chol_[static_cast<std::size_t>(u)] = llt.matrixL();
        auto& f = border_[static_cast<std::size_t>(u)];
        local_chol_[static_cast<std::size_t>(u)]
            .triangularView<Eigen::Lower>()
            .solveInPlace(f); // F_u = L^{-1} B_u
        schur.selfadjointView<Eigen::Upper>().rankUpdate(f.transpose(), -1.0);
    }
    Eigen::LLT<Eigen::MatrixXd> llt_s(Eigen::MatrixXd(schur.selfadjointView<Eigen::Upper>()));
    if (llt_s.info() != Eigen::Success) {
        throw SingularSystem("penalized information not positive definite (shared block)");
    }
    shared_chol_ = llt_s.matrixL();
    factored_ = true;
}

void BlockSolver::require_factored() const {
    if (!factored_) throw ModelError("BlockSolver used before factorize()");
}

Eigen::VectorXd BlockSolver::solve(const Eigen::VectorXd& rhs) const {
    require_factored();
    const int s = cd_->n_shared();
    Eigen::VectorXd rhs_shared(s);
    for (int i = 0; i < s; ++i) rhs_shared(i) = rhs(cd_->shared_cols_[static_cast<std::size_t>(i)]);

    std::vector<Eigen::VectorXd> y_local(static_cast<std::size_t>(cd_->n_units()));
    for (int u = 0; u < cd_->n_units(); ++u) {
        const auto& cols = cd_->unit_cols_[static_cast<std::size_t>(u)];
        if (cols.empty()) continue;
        Eigen::VectorXd r(cols.size());
        for (std::size_t i = 0; i < cols.size(); ++i) r(static_cast<Eigen::Index>(i)) = rhs(cols[i]);
        local_chol_[static_cast<std::size_t>(u)].triangularView<Eigen::Lower>().solveInPlace(r);
        rhs_shared.noalias() -= border_[static_cast<std::size_t>(u)].transpose() * r;
        y_local[static_cast<std::size_t>(u)] = std::move(r);
    }

    shared_chol_.triangularView<Eigen::Lower>().solveInPlace(rhs_shared);
    shared_chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(rhs_shared);

    Eigen::VectorXd beta(cd_->n_cols());
    for (int i = 0; i < s; ++i) beta(cd_->shared_cols_[static_cast<std::size_t>(i)]) = rhs_shared(i);
    for (int u = 0; u < cd_->n_units(); ++u) {
        const auto& cols = cd_->unit_cols_[static_cast<std::size_t>(u)];
        if (cols.empty()) continue;
        Eigen::VectorXd x = y_local[static_cast<std::size_t>(u)];
        x.noalias() -= border_[static_cast<std::size_t>(u)] * rhs_shared;
        local_chol_[static_cast<std::size_t>(u)].transpose().triangularView<Eigen::Upper>().solveInPlace(x);
        for (std::size_t i = 0; i < cols.size(); ++i) beta(cols[i]) = x(static_cast<Eigen::Index>(i));
    }
    return beta;
}

double BlockSolver::penalty_quadratic(int class_idx, const Eigen::VectorXd& beta) const {
    const auto& entries = cd_->penalty_classes()[static_cast<std::size_t>(class_idx)].entries;
    double acc = 0.0;
    for (const auto& e : entries) {
        const double term = e.v * beta(e.i) * beta(e.j);
        acc += e.i == e.j ? term : 2.0 * term;
    }
    return acc;
}

std::vector<double> BlockSolver::penalty_inverse_traces() const {
    require_factored();
    const int s = cd_->n_shared();

    // Shared block of A^{-1} is the Schur inverse.
    Eigen::MatrixXd shared_inv = Eigen::MatrixXd::Identity(s, s);
    shared_chol_.triangularView<Eigen::Lower>().solveInPlace(shared_inv);
    shared_chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(shared_inv);

    // Per-unit local blocks: D_u^{-1} + (D_u^{-1} B_u) Schur^{-1} (D_u^{-1} B_u)^T.
    std::vector<Eigen::MatrixXd> local_inv(static_cast<std::size_t>(cd_->n_units()));
    for (int u = 0; u < cd_->n_units(); ++u) {
        const int l = cd_->n_local(u);
        if (l == 0) continue;
        const auto& lc = local_chol_[static_cast<std::size_t>(u)];
        Eigen::MatrixXd dinv = Eigen::MatrixXd::Identity(l, l);
        lc.triangularView<Eigen::Lower>().solveInPlace(dinv);
        lc.transpose().triangularView<Eigen::Upper>().solveInPlace(dinv);
        Eigen::MatrixXd g = border_[static_cast<std::size_t>(u)]; // L^{-1} B
        lc.transpose().triangularView<Eigen::Upper>().solveInPlace(g); // D^{-1} B
        local_inv[static_cast<std::size_t>(u)] = dinv + g * shared_inv * g.transpose();
    }

    std::vector<double> traces;
    traces.reserve(cd_->penalty_classes().size());
    for (const auto& pc : cd_->penalty_classes()) {
        double acc = 0.0;
        for (const auto& e : pc.entries) {
            const int oi = cd_->col_owner_[static_cast<std::size_t>(e.i)];
            const int pi = cd_->col_pos_[static_cast<std::size_t>(e.i)];
            const int pj = cd_->col_pos_[static_cast<std::size_t>(e.j)];
            const double a = oi < 0 ? shared_inv(pi, pj)
                                    : local_inv[static_cast<std::size_t>(oi)](pi, pj);
            acc += e.i == e.j ? e.v * a : 2.0 * e.v * a;
        }
        traces.push_back(acc);
    }
    return traces;
}

double BlockSolver::effective_dof(const std::vector<double>& lambda_by_class) const {
    const auto traces = penalty_inverse_traces();
    double edf = static_cast<double>(cd_->n_cols());
    for (std::size_t c = 0; c < traces.size(); ++c) edf -= lambda_by_class[c] * traces[c];
    return edf;
}

Eigen::MatrixXd BlockSolver::dense_covariance() const {
    require_factored();
    const int p = cd_->n_cols();
    const int s = cd_->n_shared();

    Eigen::MatrixXd shared_inv = Eigen::MatrixXd::Identity(s, s);
    shared_chol_.triangularView<Eigen::Lower>().solveInPlace(shared_inv);
    shared_chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(shared_inv);

    // Stack M_u = (D_u^{-1} B_u) L_S^{-T}; then cov(local_u, local_v) =
    // M_u M_v^T (+ D_u^{-1} on the diagonal), cov(local_u, shared) =
    // -(D_u^{-1} B_u) Schur^{-1}.
    std::vector<Eigen::MatrixXd> g(static_cast<std::size_t>(cd_->n_units()));
    for (int u = 0; u < cd_->n_units(); ++u) {
        if (cd_->n_local(u) == 0) continue;
        Eigen::MatrixXd gu = border_[static_cast<std::size_t>(u)];
        local_chol_[static_cast<std::size_t>(u)].transpose().triangularView<Eigen::Upper>().solveInPlace(gu);
        g[static_cast<std::size_t>(u)] = std::move(gu);
    }

    Eigen::MatrixXd cov(p, p);
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
            cov(cd_->shared_cols_[static_cast<std::size_t>(i)],
                cd_->shared_cols_[static_cast<std::size_t>(j)]) = shared_inv(i, j);
        }
    }
    for (int u = 0; u < cd_->n_units(); ++u) {
        const auto& cols_u = cd_->unit_cols_[static_cast<std::size_t>(u)];
        if (cols_u.empty()) continue;
        Eigen::MatrixXd cross = -g[static_cast<std::size_t>(u)] * shared_inv;
        for (std::size_t i = 0; i < cols_u.size(); ++i) {
            for (int j = 0; j < s; ++j) {
                cov(cols_u[i], cd_->shared_cols_[static_cast<std::size_t>(j)]) =
                    cross(static_cast<Eigen::Index>(i), j);
                cov(cd_->shared_cols_[static_cast<std::size_t>(j)], cols_u[i]) =
                    cross(static_cast<Eigen::Index>(i), j);
            }
        }
        for (int v = u; v < cd_->n_units(); ++v) {
            const auto& cols_v = cd_->unit_cols_[static_cast<std::size_t>(v)];
            if (cols_v.empty()) continue;
            Eigen::MatrixXd blockuv =
                g[static_cast<std::size_t>(u)] * shared_inv * g[static_cast<std::size_t>(v)].transpose();
            if (u == v) {
                const int l = cd_->n_local(u);
                Eigen::MatrixXd dinv = Eigen::MatrixXd::Identity(l, l);
                local_chol_[static_cast<std::size_t>(u)].triangularView<Eigen::Lower>().solveInPlace(dinv);
                local_chol_[static_cast<std::size_t>(u)].transpose().triangularView<Eigen::Upper>().solveInPlace(dinv);
                blockuv += dinv;
            }
            for (std::size_t i = 0; i < cols_u.size(); ++i) {
                for (std::size_t j = 0; j < cols_v.size(); ++j) {
                    cov(cols_u[i], cols_v[j]) = blockuv(static_cast<Eigen::Index>(i),
                                                        static_cast<Eigen::Index>(j));
                    cov(cols_v[j], cols_u[i]) = blockuv(static_cast<Eigen::Index>(i),
                                                        static_cast<Eigen::Index>(j));
                }
            }
        }
    }
    return cov;
}

Eigen::VectorXd BlockSolver::half_solve_transposed(const Eigen::VectorXd& z) const {
    require_factored();
    const int s = cd_->n_shared();
    Eigen::VectorXd z_shared(s);
    for (int i = 0; i < s; ++i) z_shared(i) = z(cd_->shared_cols_[static_cast<std::size_t>(i)]);
    shared_chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(z_shared);

    Eigen::VectorXd x(cd_->n_cols());
    for (int i = 0; i < s; ++i) x(cd_->shared_cols_[static_cast<std::size_t>(i)]) = z_shared(i);
    for (int u = 0; u < cd_->n_units(); ++u) {
        const auto& cols = cd_->unit_cols_[static_cast<std::size_t>(u)];
        if (cols.empty()) continue;
        Eigen::VectorXd zu(cols.size());
        for (std::size_t i = 0; i < cols.size(); ++i) zu(static_cast<Eigen::Index>(i)) = z(cols[i]);
        zu.noalias() -= border_[static_cast<std::size_t>(u)] * z_shared;
        local_chol_[static_cast<std::size_t>(u)].transpose().triangularView<Eigen::Upper>().solveInPlace(zu);
        for (std::size_t i = 0; i < cols.size(); ++i) x(cols[i]) = zu(static_cast<Eigen::Index>(i));
    }
    return x;
}

} // namespace fluhgam
