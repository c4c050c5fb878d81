#include "fluhgam/forecast.hpp"

#include "fluhgam/errors.hpp"
#include "fluhgam/rng.hpp"
#include "fluhgam/stats.hpp"
#include "fluhgam/csv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fluhgam {

PathSet sample_paths(const FittedGAM& fit, const SamplerConfig& cfg, int horizon) {
    if (!fit.converged) throw NotConverged("cannot sample from an unconverged fit");
    if (horizon < 1) throw ValidationError("horizon must be >= 1");
    if (cfg.n_samples < 1) throw ValidationError("n_samples must be >= 1");
    const DesignBlocks& design = *fit.design;
    const Geography& geo = design.geography();
    const auto n_units = static_cast<int>(geo.n_units());
    const int t_len = design.t_length();

    PathSet out;
    out.level = "unit";
    out.horizon = horizon;
    out.n_samples = cfg.mean_path_mode ? 1 : cfg.n_samples;
    for (const auto& u : geo.units()) out.series_ids.push_back(u.unit_id);
    for (int h = 0; h < horizon; ++h) out.dates.push_back(design.window_start() + (t_len + h));

    // Future linear-predictor rows (without offset), one per (unit, horizon day).
    std::vector<std::vector<std::pair<int, double>>> rows(
        static_cast<std::size_t>(n_units) * static_cast<std::size_t>(horizon));
    for (int u = 0; u < n_units; ++u) {
        for (int h = 0; h < horizon; ++h) {
            rows[static_cast<std::size_t>(u * horizon + h)] = design.predictor_row(u, t_len + h);
        }
    }
    auto eta_of = [&](int u, int h, const Eigen::VectorXd& beta) {
        double acc = 0.0;
        for (const auto& [col, val] : rows[static_cast<std::size_t>(u * horizon + h)]) {
            acc += val * beta(col);
        }
        return acc + std::log(geo.units()[static_cast<std::size_t>(u)].population);
    };

    out.paths.assign(static_cast<std::size_t>(n_units),
                     Eigen::MatrixXd(out.n_samples, horizon));

    if (cfg.mean_path_mode) {
        for (int u = 0; u < n_units; ++u) {
            for (int h = 0; h < horizon; ++h) {
                out.paths[static_cast<std::size_t>(u)](0, h) =
                    std::exp(std::min(eta_of(u, h, fit.beta), 40.0));
            }
        }
        return out;
    }

    Rng rng = make_rng(cfg.seed, "gam-sampler");
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto p = static_cast<Eigen::Index>(fit.beta.size());
    Eigen::VectorXd z(p), beta_s(p);
    for (int s = 0; s < out.n_samples; ++s) {
        for (Eigen::Index i = 0; i < p; ++i) z(i) = normal(rng);
        // x = L^{-T} z has covariance (X'WX + S)^{-1} = V_beta.
        beta_s = fit.beta + fit.information_factor->half_solve_transposed(z);
        for (int u = 0; u < n_units; ++u) {
            for (int h = 0; h < horizon; ++h) {
                const double mu = std::exp(std::min(eta_of(u, h, beta_s), 40.0));
                out.paths[static_cast<std::size_t>(u)](s, h) =
                    static_cast<double>(negative_binomial_draw(rng, mu, fit.theta));
            }
        }
    }
    return out;
}

AggregatedPaths aggregate_bottom_up(const PathSet& unit_paths, const Geography& geo) {
    if (unit_paths.series_ids.size() != geo.n_units()) {
        throw MisalignedSamples("unit path set does not match geography");
    }
    for (const auto& m : unit_paths.paths) {
        if (m.rows() != unit_paths.n_samples || m.cols() != unit_paths.horizon) {
            throw MisalignedSamples("inconsistent sample/horizon dimensions across units");
        }
    }

    AggregatedPaths agg;
    agg.region.level = "region";
    agg.region.dates = unit_paths.dates;
    agg.region.n_samples = unit_paths.n_samples;
    agg.region.horizon = unit_paths.horizon;
    for (std::size_t r = 0; r < geo.n_regions(); ++r) {
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(unit_paths.n_samples, unit_paths.horizon);
        for (std::size_t u : geo.region_members()[r]) {
            const std::size_t pos = unit_paths.series_ids[u] == geo.units()[u].unit_id
                                        ? u
                                        : static_cast<std::size_t>(-1);
            if (pos == static_cast<std::size_t>(-1)) {
                throw MisalignedSamples("unit order mismatch between paths and geography");
            }
            sum += unit_paths.paths[pos];
        }
        agg.region.series_ids.push_back(geo.regions()[r]);
        agg.region.paths.push_back(std::move(sum));
    }

    agg.nation.level = "nation";
    agg.nation.dates = unit_paths.dates;
    agg.nation.n_samples = unit_paths.n_samples;
    agg.nation.horizon = unit_paths.horizon;
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(unit_paths.n_samples, unit_paths.horizon);
    for (const auto& m : agg.region.paths) total += m;
    agg.nation.series_ids.push_back("nation");
    agg.nation.paths.push_back(std::move(total));
    return agg;
}

std::vector<ForecastSeries> to_quantiles(const PathSet& paths, const std::vector<double>& taus) {
    if (paths.n_samples < 100) {
        throw ValidationError("to_quantiles requires at least 100 samples");
    }
    std::vector<double> sorted_taus = taus;
    std::sort(sorted_taus.begin(), sorted_taus.end());

    std::vector<ForecastSeries> out;
    out.reserve(paths.series_ids.size());
    std::vector<double> column(static_cast<std::size_t>(paths.n_samples));
    for (std::size_t i = 0; i < paths.series_ids.size(); ++i) {
        ForecastSeries fs;
        fs.level = paths.level;
        fs.series_id = paths.series_ids[i];
        fs.dates = paths.dates;
        fs.taus = sorted_taus;
        fs.quantiles.resize(paths.horizon, static_cast<Eigen::Index>(sorted_taus.size()));
        for (int h = 0; h < paths.horizon; ++h) {
            for (int s = 0; s < paths.n_samples; ++s) {
                column[static_cast<std::size_t>(s)] = paths.paths[i](s, h);
            }
            for (std::size_t q = 0; q < sorted_taus.size(); ++q) {
                fs.quantiles(h, static_cast<Eigen::Index>(q)) =
                    nearest_rank_quantile(column, sorted_taus[q]);
            }
        }
        out.push_back(std::move(fs));
    }
    return out;
}

std::string forecast_csv(const std::vector<ForecastSeries>& series) {
    std::ostringstream oss;
    oss << "level,series_id,date,q05,q25,q50,q75,q95\n";
    for (const auto& fs : series) {
        if (fs.taus.size() != 5) {
            throw ValidationError("forecast CSV expects the standard 5-quantile set");
        }
        for (std::size_t h = 0; h < fs.dates.size(); ++h) {
            oss << fs.level << ',' << fs.series_id << ',' << fs.dates[h].to_string();
            for (Eigen::Index q = 0; q < 5; ++q) {
                oss << ',' << format_real(fs.quantiles(static_cast<Eigen::Index>(h), q));
            }
            oss << '\n';
        }
    }
    return oss.str();
}

} // namespace fluhgam
