#include "fluhgam/arima.hpp"

#include "fluhgam/errors.hpp"
#include "fluhgam/kpss.hpp"
#include "fluhgam/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>

namespace fluhgam {

void ArimaOrder::validate() const {
    if (p < 0 || q < 0 || P < 0 || Q < 0 || d < 0 || D < 0 || s < 1 ||
        p > 5 || q > 5 || d > 2 || P > 2 || Q > 2 || D > 1) {
        throw ValidationError("ARIMA order outside supported bounds");
    }
}

std::vector<double> log1p_transform(std::span<const std::int64_t> counts) {
    std::vector<double> z;
    z.reserve(counts.size());
    for (auto x : counts) {
        if (x < 0) throw NegativeInput("log(x+1) transform requires x >= 0");
        z.push_back(std::log1p(static_cast<double>(x)));
    }
    return z;
}

double inverse_log1p(double z) {
    return std::max(std::expm1(z), 0.0);
}

std::vector<double> difference(std::span<const double> z, int d, int D, int s) {
    if (d < 0 || D < 0 || s < 1) throw ValidationError("invalid differencing order");
    if (static_cast<std::int64_t>(z.size()) <= static_cast<std::int64_t>(d) + static_cast<std::int64_t>(D) * s) {
        throw SeriesTooShort("series of length " + std::to_string(z.size()) +
                             " too short for d=" + std::to_string(d) + ", D=" + std::to_string(D));
    }
    std::vector<double> w(z.begin(), z.end());
    for (int k = 0; k < d; ++k) {
        for (std::size_t i = 0; i + 1 < w.size(); ++i) w[i] = w[i + 1] - w[i];
        w.pop_back();
    }
    for (int k = 0; k < D; ++k) {
        const auto lag = static_cast<std::size_t>(s);
        const std::size_t m = w.size() - lag;
        for (std::size_t i = 0; i < m; ++i) w[i] = w[i + lag] - w[i];
        w.resize(m);
    }
    return w;
}

namespace {

using Vec = std::vector<double>;

Vec poly_multiply(const Vec& a, const Vec& b) {
    Vec out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

// phi(B)*Phi(B^s) as 1 + a_1 B + ... (AR side carries minus signs).
Vec expand_ar(const Eigen::VectorXd& ar, const Eigen::VectorXd& sar, int s) {
    Vec np(static_cast<std::size_t>(ar.size()) + 1, 0.0);
    np[0] = 1.0;
    for (Eigen::Index i = 0; i < ar.size(); ++i) np[static_cast<std::size_t>(i) + 1] = -ar(i);
    Vec sp(static_cast<std::size_t>(sar.size()) * static_cast<std::size_t>(s) + 1, 0.0);
    sp[0] = 1.0;
    for (Eigen::Index i = 0; i < sar.size(); ++i) {
        sp[static_cast<std::size_t>(i + 1) * static_cast<std::size_t>(s)] = -sar(i);
    }
    return poly_multiply(np, sp);
}

// theta(B)*Theta(B^s) as 1 + m_1 B + ...
Vec expand_ma(const Eigen::VectorXd& ma, const Eigen::VectorXd& sma, int s) {
    Vec np(static_cast<std::size_t>(ma.size()) + 1, 0.0);
    np[0] = 1.0;
    for (Eigen::Index i = 0; i < ma.size(); ++i) np[static_cast<std::size_t>(i) + 1] = ma(i);
    Vec sp(static_cast<std::size_t>(sma.size()) * static_cast<std::size_t>(s) + 1, 0.0);
    sp[0] = 1.0;
    for (Eigen::Index i = 0; i < sma.size(); ++i) {
        sp[static_cast<std::size_t>(i + 1) * static_cast<std::size_t>(s)] = sma(i);
    }
    return poly_multiply(np, sp);
}

// Monahan's partial-autocorrelation parameterization: any unconstrained
// vector maps to a stationary AR coefficient vector via tanh and the
// Durbin-Levinson recursion.
Eigen::VectorXd pacf_to_ar(std::span<const double> x) {
    const auto m = x.size();
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    Eigen::VectorXd work = phi;
    for (std::size_t k = 0; k < m; ++k) {
        const double r = std::tanh(std::clamp(x[k], -12.0, 12.0));
        for (std::size_t j = 0; j < k; ++j) {
            work(static_cast<Eigen::Index>(j)) =
                phi(static_cast<Eigen::Index>(j)) - r * phi(static_cast<Eigen::Index>(k - 1 - j));
        }
        work(static_cast<Eigen::Index>(k)) = r;
        phi.head(static_cast<Eigen::Index>(k) + 1) = work.head(static_cast<Eigen::Index>(k) + 1);
    }
    return phi;
}

// Minimum root modulus of 1 + c_1 z + ... + c_m z^m. The roots' reciprocals
// are the eigenvalues of the companion matrix of z^m + c_1 z^{m-1} + ... + c_m.
double min_root_modulus(const Eigen::VectorXd& coefs) {
    int m = static_cast<int>(coefs.size());
    while (m > 0 && std::abs(coefs(m - 1)) < 1e-12) --m;
    if (m == 0) return std::numeric_limits<double>::infinity();
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) companion(0, i) = -coefs(i);
    for (int i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
    double max_abs = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        max_abs = std::max(max_abs, std::abs(eig.eigenvalues()(i)));
    }
    return max_abs <= 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / max_abs;
}

struct StateSpace {
    int r = 1;
    Eigen::VectorXd phi;     // first column of the companion transition
    Eigen::VectorXd rvec;    // moving-average loading [1, m_1, ..., m_{r-1}]
};

StateSpace make_state_space(const Vec& arc, const Vec& mac) {
    const int pp = static_cast<int>(arc.size()) - 1;
    const int qq = static_cast<int>(mac.size()) - 1;
    StateSpace ss;
    ss.r = std::max(pp, qq + 1);
    ss.phi = Eigen::VectorXd::Zero(ss.r);
    for (int i = 1; i <= pp; ++i) ss.phi(i - 1) = -arc[static_cast<std::size_t>(i)];
    ss.rvec = Eigen::VectorXd::Zero(ss.r);
    ss.rvec(0) = 1.0;
    for (int j = 1; j <= qq && j < ss.r; ++j) ss.rvec(j) = mac[static_cast<std::size_t>(j)];
    return ss;
}

// x <- T x for the companion transition: (Tx)_i = phi_i * x_0 + x_{i+1}.
void companion_apply(const Eigen::VectorXd& phi, Eigen::VectorXd& x) {
    const int r = static_cast<int>(phi.size());
    const double x0 = x(0);
    for (int i = 0; i < r - 1; ++i) x(i) = phi(i) * x0 + x(i + 1);
    x(r - 1) = phi(r - 1) * x0;
}

Eigen::MatrixXd companion_dense(const Eigen::VectorXd& phi) {
    const int r = static_cast<int>(phi.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(r, r);
    t.col(0) = phi;
    for (int i = 0; i + 1 < r; ++i) t(i, i + 1) = 1.0;
    return t;
}

// Stationary state covariance P = T P T' + R R' by doubling.
Eigen::MatrixXd stationary_covariance(const StateSpace& ss) {
    Eigen::MatrixXd p = ss.rvec * ss.rvec.transpose();
    Eigen::MatrixXd a = companion_dense(ss.phi);
    for (int iter = 0; iter < 60; ++iter) {
        if (a.lpNorm<Eigen::Infinity>() < 1e-14) break;
        p = (p + a * p * a.transpose()).eval();
        a = (a * a).eval();
        if (!p.allFinite()) break;
    }
    return p;
}

struct KalmanResult {
    bool ok = false;
    double sum_log_f = 0.0;
    double ssq = 0.0;           // sum v^2 / F at unit innovation variance
    Eigen::VectorXd final_state; // a_{n+1|n}
};

// Concentrated exact Gaussian likelihood filter; weights are for unit
// innovation variance. Switches to the steady-state gain once P converges.
KalmanResult kalman_filter(std::span<const double> w, const StateSpace& ss) {
    const int r = ss.r;
    KalmanResult res;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(r);
    Eigen::MatrixXd p = stationary_covariance(ss);
    if (!p.allFinite()) return res;
    const Eigen::MatrixXd rrt = ss.rvec * ss.rvec.transpose();

    Eigen::VectorXd k_gain(r);
    Eigen::MatrixXd m(r, r);
    double f = 0.0;
    bool steady = false;
    double f_prev = -1.0;
    for (std::size_t t = 0; t < w.size(); ++t) {
        if (!steady) {
            f = p(0, 0);
            if (!(f > 1e-300) || !std::isfinite(f)) return res;
            k_gain = p.col(0) / f;
            // P <- T (P - P e1 e1' P / F) T' + R R'
            m = p - p.col(0) * p.row(0) / f;
            for (int j = 0; j < r; ++j) {
                Eigen::VectorXd col = m.col(j);
                companion_apply(ss.phi, col);
                m.col(j) = col;
            }
            for (int i = 0; i < r; ++i) {
                Eigen::VectorXd row = m.row(i).transpose();
                companion_apply(ss.phi, row);
                m.row(i) = row.transpose();
            }
            m += rrt;
            if (f_prev > 0.0 && std::abs(f - f_prev) < 1e-13 * f) steady = true;
            f_prev = f;
            p = m;
        }
        const double v = w[t] - a(0);
        res.ssq += v * v / f;
        res.sum_log_f += std::log(f);
        a += k_gain * v;
        companion_apply(ss.phi, a);
    }
    res.final_state = std::move(a);
    res.ok = true;
    return res;
}

double concentrated_loglik(const KalmanResult& kr, std::size_t n) {
    const auto nd = static_cast<double>(n);
    const double s2 = std::max(kr.ssq / nd, 1e-300);
    return -0.5 * nd * (std::log(2.0 * M_PI) + 1.0 + std::log(s2)) - 0.5 * kr.sum_log_f;
}

// Conditional sum of squares with pre-sample residuals at zero.
double css_sum_of_squares(std::span<const double> w, const Vec& arc, const Vec& mac) {
    const int pp = static_cast<int>(arc.size()) - 1;
    const int qq = static_cast<int>(mac.size()) - 1;
    const auto n = static_cast<int>(w.size());
    if (n <= pp) return std::numeric_limits<double>::infinity();
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    double ssq = 0.0;
    int count = 0;
    for (int t = pp; t < n; ++t) {
        double acc = 0.0;
        for (int i = 0; i <= pp; ++i) acc += arc[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(t - i)];
        for (int j = 1; j <= qq; ++j) {
            if (t - j >= 0) acc -= mac[static_cast<std::size_t>(j)] * e[static_cast<std::size_t>(t - j)];
        }
        e[static_cast<std::size_t>(t)] = acc;
        ssq += acc * acc;
        ++count;
    }
    return count > 0 ? ssq : std::numeric_limits<double>::infinity();
}

struct NelderMeadResult {
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::infinity();
};

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& x0, double step, int max_eval, double ftol) {
    const int n = static_cast<int>(x0.size());
    if (n == 0) return {x0, objective(x0)};

    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n) + 1, x0);
    std::vector<double> f(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i < n; ++i) pts[static_cast<std::size_t>(i) + 1](i) += step;
    int evals = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        f[i] = objective(pts[i]);
        ++evals;
    }
    std::vector<std::size_t> order(pts.size());

    while (evals < max_eval) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
        const std::size_t best = order.front(), worst = order.back(),
                          second_worst = order[order.size() - 2];
        if (std::abs(f[worst] - f[best]) <= ftol * (std::abs(f[best]) + ftol)) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (order[i] != worst) centroid += pts[order[i]];
        }
        centroid /= static_cast<double>(n);

        Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
        double fr = objective(reflected);
        ++evals;
        if (fr < f[best]) {
            Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = objective(expanded);
            ++evals;
            if (fe < fr) {
                pts[worst] = expanded;
                f[worst] = fe;
            } else {
                pts[worst] = reflected;
                f[worst] = fr;
            }
        } else if (fr < f[second_worst]) {
            pts[worst] = reflected;
            f[worst] = fr;
        } else {
            Eigen::VectorXd contracted = centroid + 0.5 * (pts[worst] - centroid);
            const double fc = objective(contracted);
            ++evals;
            if (fc < f[worst]) {
                pts[worst] = contracted;
                f[worst] = fc;
            } else {
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    if (i == best) continue;
                    pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
                    f[i] = objective(pts[i]);
                    ++evals;
                }
            }
        }
    }

    NelderMeadResult out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (f[i] < out.f) {
            out.f = f[i];
            out.x = pts[i];
        }
    }
    return out;
}

struct ParamLayout {
    int p, q, P, Q;
    bool has_mean;
    int size() const { return p + q + P + Q + (has_mean ? 1 : 0); }
};

struct Coefficients {
    Eigen::VectorXd ar, ma, sar, sma;
    double mean = 0.0;
};

Coefficients unpack(const ParamLayout& lay, const Eigen::VectorXd& x) {
    Coefficients c;
    int off = 0;
    c.ar = pacf_to_ar(std::span<const double>(x.data() + off, static_cast<std::size_t>(lay.p)));
    off += lay.p;
    c.ma = -pacf_to_ar(std::span<const double>(x.data() + off, static_cast<std::size_t>(lay.q)));
    off += lay.q;
    c.sar = pacf_to_ar(std::span<const double>(x.data() + off, static_cast<std::size_t>(lay.P)));
    off += lay.P;
    c.sma = -pacf_to_ar(std::span<const double>(x.data() + off, static_cast<std::size_t>(lay.Q)));
    off += lay.Q;
    c.mean = lay.has_mean ? x(off) : 0.0;
    return c;
}

} // namespace

ArimaFit fit_order(std::span<const double> z, const ArimaOrder& order, bool include_mean) {
    order.validate();
    const std::vector<double> w = difference(z, order.d, order.D, order.s);
    const auto n = w.size();
    const bool has_mean = include_mean && order.d + order.D <= 1;
    const ParamLayout lay{order.p, order.q, order.P, order.Q, has_mean};
    if (static_cast<int>(n) < 10 + lay.size()) {
        throw SeriesTooShort("differenced length " + std::to_string(n) +
                             " below 10 + coefficient count");
    }

    double w_mean = 0.0;
    for (double v : w) w_mean += v;
    w_mean /= static_cast<double>(n);

    std::vector<double> centered(n);
    auto prepare = [&](const Coefficients& c) {
        const double mu = has_mean ? c.mean : 0.0;
        for (std::size_t i = 0; i < n; ++i) centered[i] = w[i] - mu;
    };

    auto css_objective = [&](const Eigen::VectorXd& x) {
        const Coefficients c = unpack(lay, x);
        prepare(c);
        const Vec arc = expand_ar(c.ar, c.sar, order.s);
        const Vec mac = expand_ma(c.ma, c.sma, order.s);
        const double ssq = css_sum_of_squares(centered, arc, mac);
        return std::isfinite(ssq) ? std::log(std::max(ssq, 1e-300)) : 1e30;
    };
    auto ml_objective = [&](const Eigen::VectorXd& x) {
        const Coefficients c = unpack(lay, x);
        prepare(c);
        const StateSpace ss = make_state_space(expand_ar(c.ar, c.sar, order.s),
                                               expand_ma(c.ma, c.sma, order.s));
        const KalmanResult kr = kalman_filter(centered, ss);
        if (!kr.ok) return 1e30;
        return -concentrated_loglik(kr, n);
    };

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(lay.size());
    if (has_mean) x0(lay.size() - 1) = w_mean;

    // CSS warm start, then exact likelihood.
    const int m = lay.size();
    if (m > 0) {
        auto css = nelder_mead(css_objective, x0, 0.2, 150 * (m + 1), 1e-8);
        auto ml = nelder_mead(ml_objective, css.x, 0.05, 150 * (m + 1), 1e-9);
        if (!std::isfinite(ml.f) || ml.f >= 1e29) {
            throw OptimFailure("likelihood optimization failed");
        }
        x0 = ml.x;
    }

    const Coefficients c = unpack(lay, x0);
    prepare(c);
    const Vec arc = expand_ar(c.ar, c.sar, order.s);
    const Vec mac = expand_ma(c.ma, c.sma, order.s);
    const KalmanResult kr = kalman_filter(centered, make_state_space(arc, mac));
    if (!kr.ok) throw OptimFailure("likelihood evaluation failed at the optimum");

    // Stationarity/invertibility of every accepted fit.
    const double margin = 1.0 + 1e-6;
    auto poly_coefs = [](const Eigen::VectorXd& v, bool ar_side) {
        Eigen::VectorXd c2 = v;
        if (ar_side) c2 = -v;
        return c2;
    };
    if (min_root_modulus(poly_coefs(c.ar, true)) <= margin ||
        min_root_modulus(poly_coefs(c.sar, true)) <= margin ||
        min_root_modulus(poly_coefs(c.ma, false)) <= margin ||
        min_root_modulus(poly_coefs(c.sma, false)) <= margin) {
        throw NonStationaryEstimate("estimated polynomial root on/inside the unit circle");
    }

    ArimaFit fit;
    fit.order = order;
    fit.ar = c.ar;
    fit.ma = c.ma;
    fit.sar = c.sar;
    fit.sma = c.sma;
    fit.has_mean = has_mean;
    fit.intercept = has_mean ? c.mean : 0.0;
    fit.sigma2 = std::max(kr.ssq / static_cast<double>(n), 1e-300);
    fit.loglik = concentrated_loglik(kr, n);
    const double k = static_cast<double>(lay.size() + 1); // + sigma^2
    const auto nd = static_cast<double>(n);
    fit.aicc = nd - k - 1.0 > 0.0
                   ? -2.0 * fit.loglik + 2.0 * k * nd / (nd - k - 1.0)
                   : std::numeric_limits<double>::infinity();
    fit.series.assign(z.begin(), z.end());
    return fit;
}

namespace {

struct CandidateKey {
    int p, q, P, Q;
    bool mean;
    auto operator<=>(const CandidateKey&) const = default;
};

bool better_fit(const ArimaFit& a, const ArimaFit& b) {
    // AICc first; deterministic tie-break toward fewer parameters.
    if (a.aicc < b.aicc - 1e-8) return true;
    if (a.aicc > b.aicc + 1e-8) return false;
    return a.order.n_coefficients(a.has_mean) < b.order.n_coefficients(b.has_mean);
}

} // namespace

ArimaFit auto_select(std::span<const double> z) {
    if (z.size() < 21) throw SeriesTooShort("auto_select needs at least 21 observations");
    const int s = 7;

    const int D = seasonal_strength(z, s) > 0.64 ? 1 : 0;
    std::vector<double> zd(z.begin(), z.end());
    if (D == 1) zd = difference(z, 0, 1, s);
    const int d = kpss_ndiffs(zd, 2);
    const bool allow_mean = d + D <= 1;

    std::map<CandidateKey, std::optional<ArimaFit>> cache;
    int evaluated = 0;
    auto try_candidate = [&](int p, int q, int P, int Q, bool mean) -> const std::optional<ArimaFit>& {
        static const std::optional<ArimaFit> none;
        if (p < 0 || p > 5 || q < 0 || q > 5 || P < 0 || P > 2 || Q < 0 || Q > 2) return none;
        mean = mean && allow_mean;
        const CandidateKey key{p, q, P, Q, mean};
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        if (evaluated >= 94) return none;
        ++evaluated;
        std::optional<ArimaFit> fit;
        try {
            fit = fit_order(z, ArimaOrder{p, d, q, P, D, Q, s}, mean);
        } catch (const ModelError&) {
        } catch (const SeriesTooShort&) {
        }
        return cache.emplace(key, std::move(fit)).first->second;
    };

    std::optional<ArimaFit> best;
    auto consider = [&](int p, int q, int P, int Q, bool mean) {
        const auto& cand = try_candidate(p, q, P, Q, mean);
        if (cand && (!best || better_fit(*cand, *best))) {
            best = *cand;
            return true;
        }
        return false;
    };

    consider(2, 2, 1, 1, allow_mean);
    consider(0, 0, 0, 0, allow_mean);
    consider(1, 0, 1, 0, allow_mean);
    consider(0, 1, 0, 1, allow_mean);

    if (best) {
        bool improved = true;
        while (improved && evaluated < 94) {
            improved = false;
            const int p = best->order.p, q = best->order.q;
            const int P = best->order.P, Q = best->order.Q;
            const bool mean = best->has_mean;
            const int moves[][4] = {{-1, 0, 0, 0}, {1, 0, 0, 0},  {0, -1, 0, 0}, {0, 1, 0, 0},
                                    {0, 0, -1, 0}, {0, 0, 1, 0},  {0, 0, 0, -1}, {0, 0, 0, 1},
                                    {-1, -1, 0, 0}, {1, 1, 0, 0}, {0, 0, -1, -1}, {0, 0, 1, 1}};
            for (const auto& mv : moves) {
                improved |= consider(p + mv[0], q + mv[1], P + mv[2], Q + mv[3], mean);
            }
            if (allow_mean) improved |= consider(p, q, P, Q, !mean);
        }
    }

    if (!best) {
        ArimaFit fallback = fit_order(z, ArimaOrder{0, 1, 0, 0, 0, 0, s}, false);
        fallback.fallback = true;
        return fallback;
    }
    return *best;
}

Eigen::VectorXd arima_point_forecasts(const ArimaFit& fit, int horizon) {
    if (horizon < 1) throw ValidationError("horizon must be >= 1");
    const auto& order = fit.order;
    const std::vector<double> w = difference(fit.series, order.d, order.D, order.s);
    std::vector<double> centered(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) centered[i] = w[i] - fit.intercept;

    const Vec arc = expand_ar(fit.ar, fit.sar, order.s);
    const Vec mac = expand_ma(fit.ma, fit.sma, order.s);
    const StateSpace ss = make_state_space(arc, mac);
    KalmanResult kr = kalman_filter(centered, ss);
    if (!kr.ok) throw ModelError("Kalman filter failed while forecasting");

    std::vector<double> w_hat(static_cast<std::size_t>(horizon));
    Eigen::VectorXd a = kr.final_state;
    for (int h = 0; h < horizon; ++h) {
        w_hat[static_cast<std::size_t>(h)] = a(0) + fit.intercept;
        companion_apply(ss.phi, a);
    }

    // Invert the differencing polynomial c(B) = (1-B)^d (1-B^s)^D.
    Vec cd{1.0};
    for (int k = 0; k < order.d; ++k) cd = poly_multiply(cd, Vec{1.0, -1.0});
    for (int k = 0; k < order.D; ++k) {
        Vec seas(static_cast<std::size_t>(order.s) + 1, 0.0);
        seas[0] = 1.0;
        seas[static_cast<std::size_t>(order.s)] = -1.0;
        cd = poly_multiply(cd, seas);
    }
    const auto lag_max = cd.size() - 1;
    std::vector<double> z_ext(fit.series.begin(), fit.series.end());
    for (int h = 0; h < horizon; ++h) {
        double value = w_hat[static_cast<std::size_t>(h)];
        for (std::size_t j = 1; j <= lag_max; ++j) {
            value -= cd[j] * z_ext[z_ext.size() - j];
        }
        z_ext.push_back(value);
    }

    Eigen::VectorXd out(horizon);
    for (int h = 0; h < horizon; ++h) {
        out(h) = z_ext[fit.series.size() + static_cast<std::size_t>(h)];
    }
    return out;
}

Eigen::VectorXd arima_forecast_variances(const ArimaFit& fit, int horizon) {
    if (horizon < 1) throw ValidationError("horizon must be >= 1");
    const auto& order = fit.order;
    Vec cd{1.0};
    for (int k = 0; k < order.d; ++k) cd = poly_multiply(cd, Vec{1.0, -1.0});
    for (int k = 0; k < order.D; ++k) {
        Vec seas(static_cast<std::size_t>(order.s) + 1, 0.0);
        seas[0] = 1.0;
        seas[static_cast<std::size_t>(order.s)] = -1.0;
        cd = poly_multiply(cd, seas);
    }
    const Vec a_full = poly_multiply(expand_ar(fit.ar, fit.sar, order.s), cd);
    const Vec mac = expand_ma(fit.ma, fit.sma, order.s);

    std::vector<double> psi(static_cast<std::size_t>(horizon), 0.0);
    psi[0] = 1.0;
    for (int j = 1; j < horizon; ++j) {
        double acc = static_cast<std::size_t>(j) < mac.size() ? mac[static_cast<std::size_t>(j)] : 0.0;
        for (int i = 1; i <= j && static_cast<std::size_t>(i) < a_full.size(); ++i) {
            acc -= a_full[static_cast<std::size_t>(i)] * psi[static_cast<std::size_t>(j - i)];
        }
        psi[static_cast<std::size_t>(j)] = acc;
    }

    Eigen::VectorXd var(horizon);
    double acc = 0.0;
    for (int h = 0; h < horizon; ++h) {
        acc += psi[static_cast<std::size_t>(h)] * psi[static_cast<std::size_t>(h)];
        var(h) = fit.sigma2 * acc;
    }
    return var;
}

Eigen::MatrixXd forecast_arima(const ArimaFit& fit, int horizon, const std::vector<double>& taus) {
    const Eigen::VectorXd point = arima_point_forecasts(fit, horizon);
    const Eigen::VectorXd var = arima_forecast_variances(fit, horizon);
    std::vector<double> sorted_taus = taus;
    std::sort(sorted_taus.begin(), sorted_taus.end());

    Eigen::MatrixXd q(horizon, static_cast<Eigen::Index>(sorted_taus.size()));
    for (int h = 0; h < horizon; ++h) {
        const double se = std::sqrt(std::max(var(h), 0.0));
        for (std::size_t i = 0; i < sorted_taus.size(); ++i) {
            const double zq = point(h) + inverse_normal_cdf(sorted_taus[i]) * se;
            q(h, static_cast<Eigen::Index>(i)) = inverse_log1p(zq);
        }
    }
    return q;
}

} // namespace fluhgam
