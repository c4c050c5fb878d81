#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace fluhgam {

// Seasonal ARIMA order (p,d,q)(P,D,Q)_s; s is fixed at 7 days throughout
// this project but carried explicitly.
struct ArimaOrder {
    int p = 0, d = 0, q = 0;
    int P = 0, D = 0, Q = 0;
    int s = 7;

    int n_coefficients(bool with_mean) const { return p + q + P + Q + (with_mean ? 1 : 0); }
    void validate() const; // p,q <= 5; d <= 2; P,Q <= 2; D <= 1
};

struct ArimaFit {
    ArimaOrder order;
    Eigen::VectorXd ar, ma, sar, sma;
    double intercept = 0.0; // mean of the differenced series; 0 when absent
    bool has_mean = false;
    double sigma2 = 0.0;
    double loglik = 0.0;
    double aicc = 0.0;
    bool fallback = false; // random-walk fallback after a failed search

    std::vector<double> series; // transformed series the model was fitted to
};

// z = log(x + 1); inverse floors at zero.
std::vector<double> log1p_transform(std::span<const std::int64_t> counts);
double inverse_log1p(double z);

// (1-B)^d (1-B^s)^D applied to z; output length len - d - D*s.
std::vector<double> difference(std::span<const double> z, int d, int D, int s);

// Exact maximum (Gaussian) likelihood for the given order via the Kalman
// recursive-innovations representation of the differenced series, initialized
// from conditional-sum-of-squares estimates. A mean term is included when
// include_mean and d + D <= 1. Throws SeriesTooShort, NonStationaryEstimate,
// OptimFailure.
ArimaFit fit_order(std::span<const double> z, const ArimaOrder& order, bool include_mean);
inline ArimaFit fit_order(std::span<const double> z, const ArimaOrder& order) {
    return fit_order(z, order, order.d + order.D <= 1);
}

// Hyndman-Khandakar selection: d by repeated KPSS tests, D by seasonal
// strength (threshold 0.64), then stepwise AICc search from the four standard
// starting models (at most 94 fits). Falls back to a flagged (0,1,0)
// random walk when every candidate fails.
ArimaFit auto_select(std::span<const double> z);

// Transformed-scale point forecasts / forecast-error variances for
// t_max + 1 .. t_max + horizon.
Eigen::VectorXd arima_point_forecasts(const ArimaFit& fit, int horizon);
Eigen::VectorXd arima_forecast_variances(const ArimaFit& fit, int horizon);

// Gaussian predictive quantiles on the transformed scale, back-transformed
// through exp(.)-1 and floored at zero: horizon x taus, monotone in tau.
Eigen::MatrixXd forecast_arima(const ArimaFit& fit, int horizon, const std::vector<double>& taus);

} // namespace fluhgam
