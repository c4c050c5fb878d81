#include "fluhgam/scoring.hpp"

#include "fluhgam/csv.hpp"
#include "fluhgam/errors.hpp"
#include "fluhgam/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fluhgam {

void QuantileForecast::validate() const {
    if (!(q05 <= q25 && q25 <= q50 && q50 <= q75 && q75 <= q95)) {
        throw InvertedInterval("quantiles not monotone in tau");
    }
}

IntervalScoreParts interval_score(double lower, double upper, double alpha, double y) {
    if (lower > upper) throw InvertedInterval("lower quantile exceeds upper");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
    IntervalScoreParts parts;
    parts.sharpness = upper - lower;
    if (y < lower) parts.overprediction = (2.0 / alpha) * (lower - y);
    if (y > upper) parts.underprediction = (2.0 / alpha) * (y - upper);
    parts.score = parts.sharpness + parts.overprediction + parts.underprediction;
    return parts;
}

WisParts wis(const QuantileForecast& f, double y) {
    f.validate();
    constexpr double k_plus_half = 2.5; // K = 2 intervals + the median
    const IntervalScoreParts is50 = interval_score(f.q25, f.q75, 0.5, y);
    const IntervalScoreParts is90 = interval_score(f.q05, f.q95, 0.1, y);

    WisParts parts;
    parts.sharpness = (0.25 * is50.sharpness + 0.05 * is90.sharpness) / k_plus_half;
    // (alpha_k/2) * (2/alpha_k) collapses to the raw exceedances; the median
    // term |y-m|/2 lands on whichever side the observation misses.
    double over = 0.25 * is50.overprediction + 0.05 * is90.overprediction;
    double under = 0.25 * is50.underprediction + 0.05 * is90.underprediction;
    if (y < f.q50) over += 0.5 * (f.q50 - y);
    if (y > f.q50) under += 0.5 * (y - f.q50);
    parts.overprediction = over / k_plus_half;
    parts.underprediction = under / k_plus_half;
    parts.wis = parts.sharpness + parts.overprediction + parts.underprediction;
    return parts;
}

double coverage(std::span<const QuantileForecast> forecasts, std::span<const double> obs,
                double level) {
    if (forecasts.size() != obs.size()) throw LengthMismatch("forecast/observation lists differ");
    if (forecasts.empty()) throw LengthMismatch("empty forecast list");
    if (level != 0.5 && level != 0.9) throw ValidationError("coverage level must be 0.5 or 0.9");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        forecasts[i].validate();
        const double l = level == 0.5 ? forecasts[i].q25 : forecasts[i].q05;
        const double u = level == 0.5 ? forecasts[i].q75 : forecasts[i].q95;
        if (obs[i] >= l && obs[i] <= u) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(forecasts.size());
}

double bias(const QuantileForecast& f, double y) {
    f.validate();
    const double taus[] = {0.05, 0.25, 0.5, 0.75, 0.95};
    const double qs[] = {f.q05, f.q25, f.q50, f.q75, f.q95};
    double tau_star = 0.0;
    for (int i = 0; i < 5; ++i) {
        if (qs[i] <= y) tau_star = taus[i];
    }
    if (y >= f.q95) tau_star = 1.0;
    return 1.0 - 2.0 * tau_star;
}

double median_absolute_error(std::span<const double> median_forecasts,
                             std::span<const double> obs) {
    if (median_forecasts.size() != obs.size() || median_forecasts.empty()) {
        throw LengthMismatch("median forecast/observation lists differ or are empty");
    }
    std::vector<double> errors(median_forecasts.size());
    for (std::size_t i = 0; i < errors.size(); ++i) {
        errors[i] = std::abs(median_forecasts[i] - obs[i]);
    }
    return median(std::move(errors));
}

ScoreRow score_targets(std::span<const QuantileForecast> forecasts, std::span<const double> obs,
                       std::string model, std::string level, std::string horizon) {
    if (forecasts.size() != obs.size() || forecasts.empty()) {
        throw LengthMismatch("forecast/observation lists differ or are empty");
    }
    ScoreRow row;
    row.model = std::move(model);
    row.level = std::move(level);
    row.horizon = std::move(horizon);
    row.n_targets = forecasts.size();

    std::vector<double> medians(forecasts.size());
    double sum_wis = 0.0, sum_under = 0.0, sum_over = 0.0, sum_bias = 0.0;
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        const WisParts parts = wis(forecasts[i], obs[i]);
        sum_wis += parts.wis;
        sum_under += parts.underprediction;
        sum_over += parts.overprediction;
        sum_bias += bias(forecasts[i], obs[i]);
        medians[i] = forecasts[i].q50;
    }
    const auto n = static_cast<double>(forecasts.size());
    row.interval_score = sum_wis / n;
    row.underprediction = sum_under / n;
    row.overprediction = sum_over / n;
    row.bias_mean = sum_bias / n;
    row.mae = median_absolute_error(medians, obs);
    row.coverage_50 = coverage(forecasts, obs, 0.5);
    row.coverage_90 = coverage(forecasts, obs, 0.9);
    return row;
}

std::string score_csv(std::span<const ScoreRow> rows) {
    std::ostringstream oss;
    oss << "model,level,horizon,interval_score,underprediction,overprediction,mae,"
           "coverage_50,coverage_90\n";
    for (const auto& r : rows) {
        oss << r.model << ',' << r.level << ',' << r.horizon << ',' << format_real(r.interval_score)
            << ',' << format_real(r.underprediction) << ',' << format_real(r.overprediction) << ','
            << format_real(r.mae) << ',' << format_real(r.coverage_50) << ','
            << format_real(r.coverage_90) << '\n';
    }
    return oss.str();
}

} // namespace fluhgam
