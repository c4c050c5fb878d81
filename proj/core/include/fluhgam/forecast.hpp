#pragma once

#include "fluhgam/gam.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace fluhgam {

struct SamplerConfig {
    int n_samples = 2000;
    std::uint64_t seed = 0;
    bool mean_path_mode = false; // disables coefficient and observation noise
};

// Forecast sample paths for one geography level. Paths are integer counts
// (stored as doubles; exact for the magnitudes involved) except in mean-path
// mode where they are real-valued means and n_samples == 1.
struct PathSet {
    std::string level; // "unit" | "region" | "nation"
    std::vector<std::string> series_ids;
    std::vector<Date> dates;                // t_max+1 .. t_max+horizon
    std::vector<Eigen::MatrixXd> paths;     // per series: n_samples x horizon
    int n_samples = 0;
    int horizon = 0;
};

// Quantile forecasts for one series.
struct ForecastSeries {
    std::string level;
    std::string series_id;
    std::vector<Date> dates;
    std::vector<double> taus;       // ascending
    Eigen::MatrixXd quantiles;      // dates x taus, non-decreasing across taus
};

inline std::vector<double> default_taus() { return {0.05, 0.25, 0.5, 0.75, 0.95}; }

// Draw coefficient vectors from N(beta_hat, V_beta), extend every smooth
// linearly beyond the window, apply future day-of-week effects and the
// population offset, and draw negative binomial counts. Mean-path mode skips
// both noise sources and returns the mean path itself. Throws NotConverged.
PathSet sample_paths(const FittedGAM& fit, const SamplerConfig& cfg, int horizon);

struct AggregatedPaths {
    PathSet region;
    PathSet nation;
};

// Bottom-up reconciliation: per sample index and date, region paths are exact
// sums of member unit paths and the national path sums the regions. Throws
// MisalignedSamples.
AggregatedPaths aggregate_bottom_up(const PathSet& unit_paths, const Geography& geo);

// Empirical nearest-rank quantiles (lower tie) per date. Requires at least
// 100 samples.
std::vector<ForecastSeries> to_quantiles(const PathSet& paths, const std::vector<double>& taus);

// `level,series_id,date,q05,q25,q50,q75,q95` rows for the standard tau set.
std::string forecast_csv(const std::vector<ForecastSeries>& series);

} // namespace fluhgam
