#pragma once

#include "fluhgam/geography.hpp"
#include "fluhgam/panel.hpp"
#include "fluhgam/spline.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fluhgam {

struct ModelSpec {
    int t_length = 63;
    int horizon = 14;
    double t_d_national = 5.0;
    double t_d_group = 5.0;
    std::pair<double, double> theta_bounds{0.1, 1000.0};
    // Smoothing-parameter grid per penalty class; classes not listed use the
    // default 13-point log-spaced grid over [1e-4, 1e4].
    std::map<std::string, std::vector<double>> lambda_grids;

    static std::vector<double> default_lambda_grid();
    const std::vector<double>& grid_for(const std::string& penalty_class) const;
    void validate() const;
};

// Penalty class tags used throughout the engine.
namespace penalty_class {
inline constexpr const char* national = "national_smooth";
inline constexpr const char* group = "group_smooth";
inline constexpr const char* mrf = "mrf";
inline constexpr const char* region = "region_effect";
inline constexpr const char* dow_region = "dow_region";
inline constexpr const char* dow_unit = "dow_unit_deviation";
} // namespace penalty_class

// Assembled hierarchical design: response, log-population offset, intercept
// column, and one penalized block per model term. Rows are unit-major:
// row = unit * t_length + day. Immutable after assembly.
class DesignBlocks {
public:
    struct Block {
        std::string name;
        std::string penalty_class;
        int col_offset = 0; // global column of the block's first column
        Eigen::SparseMatrix<double> columns;
        Eigen::MatrixXd penalty; // PSD, width x width
        int width() const { return static_cast<int>(columns.cols()); }
    };

    const Eigen::VectorXd& response() const { return response_; }
    const Eigen::VectorXd& offset() const { return offset_; }
    int n_rows() const { return static_cast<int>(response_.size()); }
    int total_columns() const { return total_columns_; } // 1 + sum of block widths

    const std::vector<Block>& blocks() const { return blocks_; }
    const Block* find_block(const std::string& name) const;

    const Geography& geography() const { return *geography_; }
    std::shared_ptr<const Geography> geography_ptr() const { return geography_; }
    Date window_start() const { return window_start_; }
    int t_length() const { return t_length_; }

    int row_unit(int row) const { return row / t_length_; }
    int row_day(int row) const { return row % t_length_; }

    // Sparse linear-predictor row for (unit, day). Days at or beyond t_length
    // use the bases' linear extrapolation; day-of-week effects follow the
    // calendar. Entries are (global column, value); the intercept is column 0.
    std::vector<std::pair<int, double>> predictor_row(int unit, int day) const;

    Eigen::VectorXd linear_predictor(const Eigen::VectorXd& beta) const;
    Eigen::VectorXd fitted_means(const Eigen::VectorXd& beta) const; // exp(eta + offset)

    // Column span of a penalty class' coefficients (for tests/diagnostics).
    std::vector<int> columns_of_class(const std::string& penalty_class) const;

    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    friend DesignBlocks assemble_design(const AdmissionsPanel&, const Geography&,
                                        const AdjacencyGraph&, const CalendarFeatures&,
                                        const ModelSpec&);

    Eigen::VectorXd response_;
    Eigen::VectorXd offset_;
    std::vector<Block> blocks_;
    int total_columns_ = 0;
    int t_length_ = 0;
    Date window_start_;
    std::shared_ptr<const Geography> geography_;
    std::vector<std::string> warnings_;

    // Basis machinery retained for forecasting.
    std::optional<SplineBasis> national_basis_;
    std::optional<SplineBasis> group_basis_;
    Eigen::RowVectorXd national_center_;
    Eigen::RowVectorXd group_center_;
    int national_block_ = -1;
    int group_block_first_ = -1;
    int mrf_block_ = -1;
    int region_block_ = -1;
    int dow_region_block_ = -1;
    int dow_unit_block_ = -1;

    Eigen::RowVectorXd smooth_row(const SplineBasis& basis, const Eigen::RowVectorXd& center,
                                  double day) const;
};

// Builds the full design: national smoother, per-unit group smoothers under
// one shared penalty class, MRF intercepts, region effects, and the nested
// day-of-week blocks. Degenerate geographies (single unit or region) drop the
// affected blocks with a warning.
DesignBlocks assemble_design(const AdmissionsPanel& panel, const Geography& geo,
                             const AdjacencyGraph& adjacency, const CalendarFeatures& cal,
                             const ModelSpec& spec);

} // namespace fluhgam
