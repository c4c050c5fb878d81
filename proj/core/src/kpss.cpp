#include "fluhgam/kpss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fluhgam {

double kpss_statistic(std::span<const double> series) {
    const auto n = series.size();
    if (n < 3) return 0.0;
    const auto nd = static_cast<double>(n);

    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= nd;

    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = series[i] - mean;

    double cumsum = 0.0, sum_sq_partial = 0.0;
    for (double r : resid) {
        cumsum += r;
        sum_sq_partial += cumsum * cumsum;
    }

    int bandwidth = static_cast<int>(std::trunc(4.0 * std::pow(nd / 100.0, 0.25)));
    bandwidth = std::clamp(bandwidth, 0, static_cast<int>(n) - 1);

    double long_run_var = 0.0;
    for (double r : resid) long_run_var += r * r;
    long_run_var /= nd;
    const double short_run = long_run_var;
    for (int lag = 1; lag <= bandwidth; ++lag) {
        double acov = 0.0;
        for (std::size_t t = static_cast<std::size_t>(lag); t < n; ++t) {
            acov += resid[t] * resid[t - static_cast<std::size_t>(lag)];
        }
        acov /= nd;
        const double w = 1.0 - static_cast<double>(lag) / static_cast<double>(bandwidth + 1);
        long_run_var += 2.0 * w * acov;
    }
    if (long_run_var <= 0.0) long_run_var = short_run;
    if (long_run_var <= 0.0) return 0.0;

    return sum_sq_partial / (nd * nd * long_run_var);
}

int kpss_ndiffs(std::span<const double> series, int max_d) {
    std::vector<double> z(series.begin(), series.end());
    int d = 0;
    while (d < max_d && z.size() > 3 && kpss_statistic(z) > kKpssCritical5pc) {
        for (std::size_t i = 0; i + 1 < z.size(); ++i) z[i] = z[i + 1] - z[i];
        z.pop_back();
        ++d;
    }
    return d;
}

double seasonal_strength(std::span<const double> series, int period) {
    const auto n = series.size();
    const auto half = static_cast<std::size_t>(period / 2);
    if (period < 2 || n < static_cast<std::size_t>(2 * period) + 1) return 0.0;

    // Centered moving average of window `period` (averaged pair for even
    // periods), defined away from the edges.
    std::vector<double> detrended;
    std::vector<std::size_t> positions;
    for (std::size_t t = half; t + half < n; ++t) {
        double acc = 0.0;
        if (period % 2 == 1) {
            for (std::size_t j = t - half; j <= t + half; ++j) acc += series[j];
            acc /= static_cast<double>(period);
        } else {
            for (std::size_t j = t - half + 1; j <= t + half - 1; ++j) acc += series[j];
            acc += 0.5 * (series[t - half] + series[t + half]);
            acc /= static_cast<double>(period);
        }
        detrended.push_back(series[t] - acc);
        positions.push_back(t);
    }

    std::vector<double> season_sum(static_cast<std::size_t>(period), 0.0);
    std::vector<int> season_count(static_cast<std::size_t>(period), 0);
    for (std::size_t i = 0; i < detrended.size(); ++i) {
        const auto phase = positions[i] % static_cast<std::size_t>(period);
        season_sum[phase] += detrended[i];
        ++season_count[phase];
    }

    double var_detrended = 0.0, var_remainder = 0.0, mean_d = 0.0;
    for (double v : detrended) mean_d += v;
    mean_d /= static_cast<double>(detrended.size());
    for (std::size_t i = 0; i < detrended.size(); ++i) {
        const auto phase = positions[i] % static_cast<std::size_t>(period);
        const double seasonal = season_sum[phase] / static_cast<double>(season_count[phase]);
        const double centered = detrended[i] - mean_d;
        const double rem = detrended[i] - seasonal;
        var_detrended += centered * centered;
        var_remainder += rem * rem;
    }
    if (var_detrended <= 0.0) return 0.0;
    return std::max(0.0, 1.0 - var_remainder / var_detrended);
}

} // namespace fluhgam
