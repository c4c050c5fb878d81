#pragma once

#include <span>

namespace fluhgam {

// KPSS level-stationarity statistic with Newey-West (Bartlett) long-run
// variance, bandwidth trunc(4 * (n/100)^(1/4)). Larger values indicate
// non-stationarity; the 5% critical value is 0.463.
double kpss_statistic(std::span<const double> series);

inline constexpr double kKpssCritical5pc = 0.463;

// Repeated KPSS differencing test: smallest d in {0..max_d} whose d-th
// difference passes the 5% test (max_d returned if none do).
int kpss_ndiffs(std::span<const double> series, int max_d);

// Seasonal strength max(0, 1 - Var(remainder) / Var(detrended)) after a
// centered moving-average detrend and seasonal means; D = 1 is indicated
// above 0.64.
double seasonal_strength(std::span<const double> series, int period);

} // namespace fluhgam
