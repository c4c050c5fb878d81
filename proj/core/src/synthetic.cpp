#include "fluhgam/synthetic.hpp"

#include "fluhgam/errors.hpp"
#include "fluhgam/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace fluhgam {

void SyntheticSpec::validate() const {
    if (n_units < 1 || n_regions < 1 || n_regions > n_units || n_days < 2) {
        throw ValidationError("invalid synthetic geometry");
    }
    if (theta <= 0.0 || pop_min <= 0.0 || pop_max < pop_min) {
        throw ValidationError("invalid synthetic dispersion/population settings");
    }
    if (growth_rate <= 0.0 || decay_rate <= 0.0 || peak_day <= 0.0) {
        throw ValidationError("wave rates and peak day must be positive");
    }
    for (double m : dow_multipliers) {
        if (m <= 0.0) throw ValidationError("day-of-week multipliers must be positive");
    }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const int n = spec.n_units;

    // Units on a jittered grid, regions as contiguous index bands, adjacency
    // from grid neighbours (always connected).
    Rng geo_rng = make_rng(spec.seed, "synthetic-geo");
    std::uniform_real_distribution<double> jitter(-2.0, 2.0);
    std::uniform_real_distribution<double> logpop(std::log(spec.pop_min), std::log(spec.pop_max));
    const int grid_w = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));

    std::vector<GeoUnit> units;
    units.reserve(static_cast<std::size_t>(n));
    for (int u = 0; u < n; ++u) {
        GeoUnit g;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "U%02d", u);
        g.unit_id = buf;
        g.region_id = "R" + std::to_string(u * spec.n_regions / n);
        g.population = std::round(std::exp(logpop(geo_rng)));
        g.centroid_x = 10.0 * static_cast<double>(u % grid_w) + jitter(geo_rng);
        g.centroid_y = 10.0 * static_cast<double>(u / grid_w) + jitter(geo_rng);
        units.push_back(std::move(g));
    }

    std::vector<std::pair<std::string, std::string>> pairs;
    for (int u = 0; u < n; ++u) {
        const int col = u % grid_w;
        if (col + 1 < grid_w && u + 1 < n) pairs.emplace_back(units[static_cast<std::size_t>(u)].unit_id,
                                                              units[static_cast<std::size_t>(u) + 1].unit_id);
        if (u + grid_w < n) pairs.emplace_back(units[static_cast<std::size_t>(u)].unit_id,
                                               units[static_cast<std::size_t>(u + grid_w)].unit_id);
    }
    AdjacencyGraph adjacency = build_adjacency(units, pairs);
    Geography geography(units);

    // Spatially smooth unit offsets from the (intrinsic) MRF prior: weight
    // the Laplacian's non-null eigenvectors by 1/sqrt(eigenvalue), then
    // center and normalize to the requested scale.
    std::vector<std::string> order;
    for (const auto& u : units) order.push_back(u.unit_id);
    Eigen::VectorXd unit_offset = Eigen::VectorXd::Zero(n);
    if (n >= 2 && spec.unit_offset_scale > 0.0) {
        Eigen::MatrixXd lap = graph_laplacian(adjacency, order);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
        Rng mrf_rng = make_rng(spec.seed, "synthetic-mrf");
        std::normal_distribution<double> normal(0.0, 1.0);
        const double lambda_max = eig.eigenvalues()(n - 1);
        for (int i = 0; i < n; ++i) {
            const double lambda = eig.eigenvalues()(i);
            if (lambda <= 1e-10 * lambda_max) continue;
            unit_offset += eig.eigenvectors().col(i) * (normal(mrf_rng) / std::sqrt(lambda));
        }
        unit_offset.array() -= unit_offset.mean();
        const double sd = std::sqrt(unit_offset.squaredNorm() / static_cast<double>(n));
        if (sd > 0.0) unit_offset *= spec.unit_offset_scale / sd;
    }

    // Day-of-week multipliers normalized to geometric mean one.
    std::array<double, 7> log_dow{};
    double log_gm = 0.0;
    for (double m : spec.dow_multipliers) log_gm += std::log(m);
    log_gm /= 7.0;
    for (int d = 0; d < 7; ++d) log_dow[static_cast<std::size_t>(d)] =
        std::log(spec.dow_multipliers[static_cast<std::size_t>(d)]) - log_gm;

    // National log-rate wave: C1 Gaussian bump with growth-side width set by
    // the slope at t=0 and decay-side width by the slope at t = 2*peak_day.
    const double sigma2_growth = spec.peak_day / spec.growth_rate;
    const double sigma2_decay = spec.peak_day / spec.decay_rate;
    auto national_log_rate = [&](double t) {
        if (spec.log_linear) return spec.base_log_rate + spec.growth_rate * t;
        const double dt = t - spec.peak_day;
        const double s2 = dt <= 0.0 ? sigma2_growth : sigma2_decay;
        return spec.peak_log_rate - dt * dt / (2.0 * s2);
    };

    Rng count_rng = make_rng(spec.seed, "synthetic-counts");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n) *
                                     static_cast<std::size_t>(spec.n_days));
    CalendarFeatures cal;
    for (int u = 0; u < n; ++u) {
        for (int t = 0; t < spec.n_days; ++t) {
            const int dow = cal.day_of_week(spec.start_date + t);
            const double log_rate = national_log_rate(static_cast<double>(t)) + unit_offset(u) +
                                    log_dow[static_cast<std::size_t>(dow)];
            const double mu = units[static_cast<std::size_t>(u)].population * std::exp(log_rate);
            counts[static_cast<std::size_t>(u) * static_cast<std::size_t>(spec.n_days) +
                   static_cast<std::size_t>(t)] =
                spec.deterministic_counts ? std::llround(mu)
                                          : negative_binomial_draw(count_rng, mu, spec.theta);
        }
    }

    AdmissionsPanel panel(spec.start_date, spec.n_days, order, std::move(counts));
    return SyntheticData{std::move(panel), std::move(geography), std::move(adjacency)};
}

} // namespace fluhgam
