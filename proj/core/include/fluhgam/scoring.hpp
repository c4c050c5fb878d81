#pragma once

#include <span>
#include <string>
#include <vector>

namespace fluhgam {

// Five-quantile forecast for a single target. Sign conventions throughout:
// "overprediction" penalties accrue when the observation falls BELOW the
// forecast (y < l), "underprediction" when it falls above (y > u), and
// positive bias means the model overpredicts.
struct QuantileForecast {
    double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
    void validate() const; // monotone in tau
};

struct IntervalScoreParts {
    double score = 0.0;
    double underprediction = 0.0;
    double overprediction = 0.0;
    double sharpness = 0.0;
};

// (u-l) + (2/alpha) * (l-y)_+ + (2/alpha) * (y-u)_+; the (l-y)_+ term is the
// overprediction penalty and the (y-u)_+ term the underprediction penalty.
// Throws InvertedInterval.
IntervalScoreParts interval_score(double lower, double upper, double alpha, double y);

struct WisParts {
    double wis = 0.0;
    double underprediction = 0.0;
    double overprediction = 0.0;
    double sharpness = 0.0; // wis == sharpness + under + over exactly
};

// Weighted interval score over the 50% (alpha=0.5) and 90% (alpha=0.1)
// central intervals plus the median: (1/(K+1/2)) * (|y-m|/2 + sum_k
// (alpha_k/2) IS_k). The median penalty is split into the over/under parts.
WisParts wis(const QuantileForecast& f, double y);

// Fraction of observations inside the central interval (inclusive);
// level is 0.5 or 0.9. Throws LengthMismatch.
double coverage(std::span<const QuantileForecast> forecasts, std::span<const double> obs,
                double level);

// B = 1 - 2*tau* on the grid {0,.05,.25,.5,.75,.95,1}, where tau* is the
// largest grid quantile at or below y. Positive values mean overprediction.
double bias(const QuantileForecast& f, double y);

// Median absolute error of the median forecast (the median of |q50 - y|,
// mean-of-central-pair on even counts).
double median_absolute_error(std::span<const double> median_forecasts,
                             std::span<const double> obs);

// One Table-style output row; `horizon` is "7", "14" or "overall".
struct ScoreRow {
    std::string model;
    std::string level;
    std::string horizon;
    double interval_score = 0.0;
    double underprediction = 0.0;
    double overprediction = 0.0;
    double mae = 0.0;
    double coverage_50 = 0.0;
    double coverage_90 = 0.0;
    double bias_mean = 0.0; // kept out of the Table CSV, used by the sweep
    std::size_t n_targets = 0;
};

// Aggregate scores over aligned forecast/observation pairs (mean WIS and
// decomposition, median absolute error, coverages, mean bias).
ScoreRow score_targets(std::span<const QuantileForecast> forecasts, std::span<const double> obs,
                       std::string model, std::string level, std::string horizon);

std::string score_csv(std::span<const ScoreRow> rows); // Table-1 layout

} // namespace fluhgam
