#include "fluhgam/design.hpp"

#include "fluhgam/errors.hpp"

#include <cmath>
#include <numeric>

namespace fluhgam {

std::vector<double> ModelSpec::default_lambda_grid() {
    std::vector<double> grid;
    grid.reserve(13);
    for (int k = 0; k < 13; ++k) {
        grid.push_back(std::pow(10.0, -4.0 + 8.0 * static_cast<double>(k) / 12.0));
    }
    return grid;
}

const std::vector<double>& ModelSpec::grid_for(const std::string& pc) const {
    static const std::vector<double> fallback = default_lambda_grid();
    auto it = lambda_grids.find(pc);
    return it == lambda_grids.end() ? fallback : it->second;
}

void ModelSpec::validate() const {
    if (horizon < 1) throw ValidationError("horizon must be >= 1");
    if (t_length < 2) throw ValidationError("t_length must be >= 2");
    if (theta_bounds.first <= 0.0 || theta_bounds.second <= theta_bounds.first) {
        throw ValidationError("theta bounds must satisfy 0 < low < high");
    }
    for (const auto& [name, grid] : lambda_grids) {
        if (grid.empty()) throw ValidationError("empty lambda grid for class '" + name + "'");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] <= 0.0) throw ValidationError("non-positive lambda in class '" + name + "'");
            if (i > 0 && grid[i] <= grid[i - 1]) {
                throw ValidationError("lambda grid for class '" + name + "' must be sorted ascending");
            }
        }
    }
}

namespace {

// Centered smooth design over the window days with the constant column
// dropped (absorbed by the model intercepts). Returns the 63 x (k-2) matrix
// and the column means used for centering.
std::pair<Eigen::MatrixXd, Eigen::RowVectorXd> centered_smooth_matrix(const SplineBasis& basis) {
    Eigen::MatrixXd rows = basis.design_rows();
    const int q = basis.kernel_rank();
    Eigen::MatrixXd kept(rows.rows(), basis.rank() - 1);
    kept.leftCols(q) = rows.leftCols(q);
    kept.col(q) = rows.col(q + 1); // linear column; constant column dropped
    Eigen::RowVectorXd center = kept.colwise().mean();
    kept.rowwise() -= center;
    return {std::move(kept), std::move(center)};
}

} // namespace

Eigen::RowVectorXd DesignBlocks::smooth_row(const SplineBasis& basis,
                                            const Eigen::RowVectorXd& center, double day) const {
    Eigen::RowVectorXd full = basis.evaluate_extrapolated(day);
    const int q = basis.kernel_rank();
    Eigen::RowVectorXd kept(basis.rank() - 1);
    kept.head(q) = full.head(q);
    kept(q) = full(q + 1);
    return kept - center;
}

const DesignBlocks::Block* DesignBlocks::find_block(const std::string& name) const {
    for (const auto& b : blocks_) {
        if (b.name == name) return &b;
    }
    return nullptr;
}

std::vector<int> DesignBlocks::columns_of_class(const std::string& pc) const {
    std::vector<int> cols;
    for (const auto& b : blocks_) {
        if (b.penalty_class != pc) continue;
        for (int j = 0; j < b.width(); ++j) cols.push_back(b.col_offset + j);
    }
    return cols;
}

std::vector<std::pair<int, double>> DesignBlocks::predictor_row(int unit, int day) const {
    std::vector<std::pair<int, double>> row;
    row.reserve(32);
    row.emplace_back(0, 1.0);
    const auto t = static_cast<double>(day);
    if (national_block_ >= 0) {
        const Block& b = blocks_[static_cast<std::size_t>(national_block_)];
        Eigen::RowVectorXd vals = smooth_row(*national_basis_, national_center_, t);
        for (int j = 0; j < vals.size(); ++j) row.emplace_back(b.col_offset + j, vals(j));
    }
    if (group_block_first_ >= 0) {
        const Block& b = blocks_[static_cast<std::size_t>(group_block_first_ + unit)];
        Eigen::RowVectorXd vals = smooth_row(*group_basis_, group_center_, t);
        for (int j = 0; j < vals.size(); ++j) row.emplace_back(b.col_offset + j, vals(j));
    }
    if (mrf_block_ >= 0) {
        row.emplace_back(blocks_[static_cast<std::size_t>(mrf_block_)].col_offset + unit, 1.0);
    }
    const auto region = static_cast<int>(geography_->region_index_of_unit(static_cast<std::size_t>(unit)));
    if (region_block_ >= 0) {
        row.emplace_back(blocks_[static_cast<std::size_t>(region_block_)].col_offset + region, 1.0);
    }
    const int dow = (window_start_ + day).day_of_week();
    if (dow_region_block_ >= 0) {
        const Block& b = blocks_[static_cast<std::size_t>(dow_region_block_)];
        row.emplace_back(b.col_offset + region * 7 + dow, 1.0);
    }
    if (dow_unit_block_ >= 0) {
        const Block& b = blocks_[static_cast<std::size_t>(dow_unit_block_)];
        row.emplace_back(b.col_offset + unit * 7 + dow, 1.0);
    }
    return row;
}

Eigen::VectorXd DesignBlocks::linear_predictor(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(n_rows(), beta(0));
    for (const auto& b : blocks_) {
        eta += b.columns * beta.segment(b.col_offset, b.width());
    }
    return eta;
}

Eigen::VectorXd DesignBlocks::fitted_means(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd eta = linear_predictor(beta) + offset_;
    Eigen::VectorXd mu(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        mu(i) = std::max(std::exp(std::min(eta(i), 40.0)), 1e-10);
    }
    return mu;
}

DesignBlocks assemble_design(const AdmissionsPanel& panel, const Geography& geo,
                             const AdjacencyGraph& adjacency, const CalendarFeatures& cal,
                             const ModelSpec& spec) {
    spec.validate();
    if (panel.n_days() != spec.t_length) {
        throw ValidationError("panel window has " + std::to_string(panel.n_days()) +
                              " days but t_length = " + std::to_string(spec.t_length));
    }
    const auto n_units = static_cast<int>(geo.n_units());
    const auto n_regions = static_cast<int>(geo.n_regions());
    const int t_len = spec.t_length;
    const int n_rows = n_units * t_len;

    if (static_cast<std::size_t>(n_units) != panel.units().size()) {
        throw ValidationError("panel and geography cover different unit sets");
    }
    std::vector<std::size_t> panel_unit(geo.n_units());
    for (int u = 0; u < n_units; ++u) {
        panel_unit[static_cast<std::size_t>(u)] =
            panel.unit_index(geo.units()[static_cast<std::size_t>(u)].unit_id);
    }

    DesignBlocks d;
    d.t_length_ = t_len;
    d.window_start_ = panel.start_date();
    d.geography_ = std::make_shared<Geography>(geo);

    d.response_.resize(n_rows);
    d.offset_.resize(n_rows);
    for (int u = 0; u < n_units; ++u) {
        const double log_pop = std::log(geo.units()[static_cast<std::size_t>(u)].population);
        for (int t = 0; t < t_len; ++t) {
            const int r = u * t_len + t;
            d.response_(r) = static_cast<double>(
                panel.count(panel.start_date() + t, panel_unit[static_cast<std::size_t>(u)]));
            d.offset_(r) = log_pop;
        }
    }

    std::vector<double> days(static_cast<std::size_t>(t_len));
    std::iota(days.begin(), days.end(), 0.0);

    int next_col = 1; // column 0 is the intercept
    auto push_block = [&](DesignBlocks::Block b) {
        b.col_offset = next_col;
        next_col += b.width();
        d.blocks_.push_back(std::move(b));
        return static_cast<int>(d.blocks_.size()) - 1;
    };

    // National smoother, replicated across units.
    {
        const int k1 = basis_dimension({t_len, spec.t_d_national});
        d.national_basis_ = build_basis(days, k1);
        auto [mat, center] = centered_smooth_matrix(*d.national_basis_);
        d.national_center_ = center;
        const int w = static_cast<int>(mat.cols());
        Eigen::SparseMatrix<double> cols(n_rows, w);
        cols.reserve(Eigen::VectorXi::Constant(w, n_rows));
        for (int j = 0; j < w; ++j) {
            for (int u = 0; u < n_units; ++u) {
                for (int t = 0; t < t_len; ++t) cols.insert(u * t_len + t, j) = mat(t, j);
            }
        }
        cols.makeCompressed();
        Eigen::MatrixXd pen = Eigen::MatrixXd::Zero(w, w);
        for (int j = 0; j < d.national_basis_->kernel_rank(); ++j) pen(j, j) = 1.0;
        d.national_block_ = push_block({"national_smooth", penalty_class::national, 0,
                                        std::move(cols), std::move(pen)});
    }

    // Group-level smoothers: one block per unit, a single shared penalty
    // class, and the whole block penalized so deviations shrink to the
    // national trend.
    if (n_units >= 2) {
        const int k1 = basis_dimension({t_len, spec.t_d_group});
        d.group_basis_ = build_basis(days, k1);
        auto [mat, center] = centered_smooth_matrix(*d.group_basis_);
        d.group_center_ = center;
        const int w = static_cast<int>(mat.cols());
        d.group_block_first_ = static_cast<int>(d.blocks_.size());
        for (int u = 0; u < n_units; ++u) {
            Eigen::SparseMatrix<double> cols(n_rows, w);
            cols.reserve(Eigen::VectorXi::Constant(w, t_len));
            for (int j = 0; j < w; ++j) {
                for (int t = 0; t < t_len; ++t) cols.insert(u * t_len + t, j) = mat(t, j);
            }
            cols.makeCompressed();
            d.blocks_.push_back({"group_smooth[" + geo.units()[static_cast<std::size_t>(u)].unit_id + "]",
                                 penalty_class::group, next_col, std::move(cols),
                                 Eigen::MatrixXd::Identity(w, w)});
            next_col += w;
        }
    } else {
        d.warnings_.push_back("single unit: group smoothers collapse into the national trend");
    }

    // MRF spatial intercepts with graph-Laplacian penalty. The Laplacian is
    // normalized to unit mean degree so the shared lambda grid is meaningful
    // regardless of centroid units, and the mean direction carries a small
    // quadratic penalty realizing the sum-to-zero constraint at the optimum.
    if (n_units >= 2) {
        std::vector<std::string> order;
        order.reserve(geo.n_units());
        for (const auto& u : geo.units()) order.push_back(u.unit_id);
        Eigen::MatrixXd lap = graph_laplacian(adjacency, order);
        const double mean_degree = lap.trace() / static_cast<double>(n_units);
        if (mean_degree <= 0.0) throw ValidationError("adjacency graph has no edges");
        Eigen::MatrixXd pen = lap / mean_degree;
        pen.array() += 1.0 / static_cast<double>(n_units);

        Eigen::SparseMatrix<double> cols(n_rows, n_units);
        cols.reserve(Eigen::VectorXi::Constant(n_units, t_len));
        for (int u = 0; u < n_units; ++u) {
            for (int t = 0; t < t_len; ++t) cols.insert(u * t_len + t, u) = 1.0;
        }
        cols.makeCompressed();
        d.mrf_block_ = push_block({"mrf", penalty_class::mrf, 0, std::move(cols), std::move(pen)});
    } else {
        d.warnings_.push_back("single unit: MRF spatial effect dropped");
    }

    // Region random effect (ridge; level shifts resolve into the intercept).
    if (n_regions >= 2) {
        Eigen::SparseMatrix<double> cols(n_rows, n_regions);
        cols.reserve(Eigen::VectorXi::Constant(n_regions, n_rows));
        for (int u = 0; u < n_units; ++u) {
            const auto r = static_cast<int>(geo.region_index_of_unit(static_cast<std::size_t>(u)));
            for (int t = 0; t < t_len; ++t) cols.insert(u * t_len + t, r) = 1.0;
        }
        cols.makeCompressed();
        d.region_block_ = push_block({"region_effect", penalty_class::region, 0, std::move(cols),
                                      Eigen::MatrixXd::Identity(n_regions, n_regions)});
    } else {
        d.warnings_.push_back("SingleRegionDegenerate: region effect dropped (one region)");
    }

    // Day-of-week by region.
    {
        const int w = 7 * n_regions;
        Eigen::SparseMatrix<double> cols(n_rows, w);
        cols.reserve(Eigen::VectorXi::Constant(w, n_rows));
        for (int u = 0; u < n_units; ++u) {
            const auto r = static_cast<int>(geo.region_index_of_unit(static_cast<std::size_t>(u)));
            for (int t = 0; t < t_len; ++t) {
                const int dow = cal.day_of_week(panel.start_date() + t);
                cols.insert(u * t_len + t, r * 7 + dow) = 1.0;
            }
        }
        cols.makeCompressed();
        d.dow_region_block_ = push_block({"dow_region", penalty_class::dow_region, 0,
                                          std::move(cols), Eigen::MatrixXd::Identity(w, w)});
    }

    // Per-unit day-of-week deviation from the regional effect.
    if (n_units >= 2) {
        const int w = 7 * n_units;
        Eigen::SparseMatrix<double> cols(n_rows, w);
        cols.reserve(Eigen::VectorXi::Constant(w, t_len));
        for (int u = 0; u < n_units; ++u) {
            for (int t = 0; t < t_len; ++t) {
                const int dow = cal.day_of_week(panel.start_date() + t);
                cols.insert(u * t_len + t, u * 7 + dow) = 1.0;
            }
        }
        cols.makeCompressed();
        d.dow_unit_block_ = push_block({"dow_unit_deviation", penalty_class::dow_unit, 0,
                                        std::move(cols), Eigen::MatrixXd::Identity(w, w)});
    } else {
        d.warnings_.push_back("single unit: day-of-week deviation merged into regional effect");
    }

    d.total_columns_ = next_col;
    return d;
}

} // namespace fluhgam
