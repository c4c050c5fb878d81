#include "fluhgam/gam.hpp"

#include "fluhgam/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fluhgam {

namespace {

constexpr double kCoefCap = 30.0;
constexpr double kMuFloor = 1e-10;
constexpr double kEtaCap = 40.0;

Eigen::VectorXd means_from_eta(const Eigen::VectorXd& eta_full) {
    Eigen::VectorXd mu(eta_full.size());
    for (Eigen::Index i = 0; i < eta_full.size(); ++i) {
        mu(i) = std::max(std::exp(std::min(eta_full(i), kEtaCap)), kMuFloor);
    }
    return mu;
}

void clamp_coefficients(Eigen::VectorXd& beta) {
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        beta(i) = std::clamp(beta(i), -kCoefCap, kCoefCap);
    }
}

std::vector<double> lambda_vector(const CompiledDesign& cd,
                                  const std::map<std::string, double>& lambdas) {
    std::vector<double> lam;
    lam.reserve(cd.penalty_classes().size());
    for (const auto& pc : cd.penalty_classes()) {
        auto it = lambdas.find(pc.name);
        if (it == lambdas.end()) {
            throw ValidationError("no lambda supplied for penalty class '" + pc.name + "'");
        }
        if (it->second <= 0.0) {
            throw ValidationError("lambda for class '" + pc.name + "' must be positive");
        }
        lam.push_back(it->second);
    }
    return lam;
}

double total_penalty(const BlockSolver& solver, const CompiledDesign& cd,
                     const std::vector<double>& lam, const Eigen::VectorXd& beta) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cd.penalty_classes().size(); ++c) {
        acc += lam[c] * solver.penalty_quadratic(static_cast<int>(c), beta);
    }
    return acc;
}

PirlsFit pirls_run(const DesignBlocks& design, std::shared_ptr<CompiledDesign> compiled,
                   std::shared_ptr<BlockSolver> solver, double theta,
                   const std::vector<double>& lam, const Eigen::VectorXd* warm_start,
                   bool want_edf) {
    const Eigen::VectorXd& y = design.response();
    const Eigen::VectorXd& offset = design.offset();
    const auto n = static_cast<double>(design.n_rows());
    (void)n;

    Eigen::VectorXd beta;
    if (warm_start != nullptr && warm_start->size() == design.total_columns()) {
        beta = *warm_start;
    } else {
        beta = Eigen::VectorXd::Zero(design.total_columns());
        double pop_total = 0.0;
        for (Eigen::Index i = 0; i < offset.size(); ++i) pop_total += std::exp(offset(i));
        beta(0) = std::clamp(std::log((y.sum() + 0.5) / pop_total), -kCoefCap, kCoefCap);
    }

    auto penalized_dev = [&](const Eigen::VectorXd& b, double& dev_out) {
        Eigen::VectorXd mu = means_from_eta(compiled->apply(b) + offset);
        dev_out = nb_deviance(y, mu, theta);
        return dev_out + total_penalty(*solver, *compiled, lam, b);
    };

    double dev = 0.0;
    double pdev = penalized_dev(beta, dev);

    PirlsFit fit;
    fit.converged = false;
    int iter = 0;
    for (iter = 1; iter <= 200; ++iter) {
        Eigen::VectorXd eta = compiled->apply(beta);
        Eigen::VectorXd mu = means_from_eta(eta + offset);
        Eigen::VectorXd w(mu.size()), wz(mu.size());
        for (Eigen::Index i = 0; i < mu.size(); ++i) {
            const double wi = mu(i) * theta / (mu(i) + theta);
            const double zi = eta(i) + (y(i) - mu(i)) / mu(i);
            w(i) = wi;
            wz(i) = wi * zi;
        }
        solver->factorize(w, lam);
        Eigen::VectorXd proposal = solver->solve(compiled->apply_transpose_weighted(wz));
        clamp_coefficients(proposal);

        // Step halving on the penalized deviance.
        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd candidate;
        double cand_dev = 0.0, cand_pdev = 0.0;
        for (int h = 0; h < 30; ++h) {
            candidate = beta + step * (proposal - beta);
            clamp_coefficients(candidate);
            cand_pdev = penalized_dev(candidate, cand_dev);
            if (std::isfinite(cand_pdev) && cand_pdev <= pdev + 1e-12 * (1.0 + std::abs(pdev))) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No direction of improvement left; treat as converged at beta.
            fit.converged = true;
            break;
        }
        const double rel = std::abs(pdev - cand_pdev) / (std::abs(cand_pdev) + 1e-10);
        beta = candidate;
        dev = cand_dev;
        pdev = cand_pdev;
        if (rel < 1e-8) {
            fit.converged = true;
            break;
        }
    }

    // Refactor at the converged weights so edf/covariance refer to the
    // final iterate.
    {
        Eigen::VectorXd mu = means_from_eta(compiled->apply(beta) + offset);
        Eigen::VectorXd w(mu.size());
        for (Eigen::Index i = 0; i < mu.size(); ++i) w(i) = mu(i) * theta / (mu(i) + theta);
        solver->factorize(w, lam);
    }

    fit.beta = std::move(beta);
    fit.deviance = dev;
    fit.penalized_deviance = pdev;
    fit.iterations = std::min(iter, 200);
    fit.edf = want_edf ? solver->effective_dof(lam) : 0.0;
    fit.compiled = std::move(compiled);
    fit.solver = std::move(solver);
    return fit;
}

// Crude moment estimate of theta used to weight the GCV working model before
// the profile-likelihood estimate is available. First differences remove the
// smooth trend within the window.
double moment_theta(const DesignBlocks& design, std::pair<double, double> bounds) {
    const Eigen::VectorXd& y = design.response();
    const int t_len = design.t_length();
    const int n_units = static_cast<int>(design.geography().n_units());
    double sum_m2 = 0.0, sum_excess = 0.0;
    for (int u = 0; u < n_units; ++u) {
        double m = 0.0;
        for (int t = 0; t < t_len; ++t) m += y(u * t_len + t);
        m /= static_cast<double>(t_len);
        double v = 0.0;
        for (int t = 1; t < t_len; ++t) {
            const double d = y(u * t_len + t) - y(u * t_len + t - 1);
            v += d * d;
        }
        v /= 2.0 * static_cast<double>(t_len - 1);
        sum_m2 += m * m;
        sum_excess += std::max(v - m, 0.0);
    }
    if (sum_excess <= 0.0 || sum_m2 <= 0.0) return bounds.second;
    return std::clamp(sum_m2 / sum_excess, bounds.first, bounds.second);
}

} // namespace

double nb_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double theta) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double yi = y(i), mi = mu(i);
        double term = -(yi + theta) * std::log((yi + theta) / (mi + theta));
        if (yi > 0.0) term += yi * std::log(yi / mi);
        dev += term;
    }
    return 2.0 * dev;
}

double nb_log_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double theta) {
    double ll = 0.0;
    const double lg_theta = std::lgamma(theta);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double yi = y(i), mi = mu(i);
        ll += std::lgamma(yi + theta) - lg_theta - std::lgamma(yi + 1.0) +
              theta * std::log(theta / (theta + mi)) + yi * std::log(mi / (theta + mi));
    }
    return ll;
}

PirlsFit fit_pirls(const DesignBlocks& design, double theta,
                   const std::map<std::string, double>& lambdas,
                   const Eigen::VectorXd* warm_start, bool want_edf) {
    if (theta <= 0.0) throw ValidationError("theta must be positive");
    auto compiled = std::make_shared<CompiledDesign>(design);
    auto solver = std::make_shared<BlockSolver>(*compiled);
    const auto lam = lambda_vector(*compiled, lambdas);
    return pirls_run(design, std::move(compiled), std::move(solver), theta, lam, warm_start,
                     want_edf);
}

double estimate_theta(const DesignBlocks& design, const std::map<std::string, double>& lambdas,
                      std::pair<double, double> bounds, std::vector<std::string>* warnings) {
    if (!(bounds.first > 0.0 && bounds.first < bounds.second)) {
        throw ValidationError("theta bounds must satisfy 0 < low < high");
    }
    auto compiled = std::make_shared<CompiledDesign>(design);
    auto solver = std::make_shared<BlockSolver>(*compiled);
    const auto lam = lambda_vector(*compiled, lambdas);

    Eigen::VectorXd warm;
    bool have_warm = false;
    auto profile = [&](double log_theta) {
        const double theta = std::exp(log_theta);
        auto fit = pirls_run(design, compiled, solver, theta, lam,
                             have_warm ? &warm : nullptr, false);
        warm = fit.beta;
        have_warm = true;
        Eigen::VectorXd mu = means_from_eta(compiled->apply(fit.beta) + design.offset());
        return nb_log_likelihood(design.response(), mu, theta);
    };

    const double lo = std::log(bounds.first), hi = std::log(bounds.second);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double best_x = hi;
    double best_f = -std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < 2; ++sweep) {
        double a = lo, b = hi;
        double c = b - invphi * (b - a), d = a + invphi * (b - a);
        double fc = profile(c), fd = profile(d);
        while (b - a > 1e-3) {
            if (fc > fd) {
                b = d; d = c; fd = fc;
                c = b - invphi * (b - a);
                fc = profile(c);
            } else {
                a = c; c = d; fc = fd;
                d = a + invphi * (b - a);
                fd = profile(d);
            }
        }
        const double x = fc > fd ? c : d;
        const double f = std::max(fc, fd);
        if (f > best_f) {
            best_f = f;
            best_x = x;
        }
    }

    // A maximizer hugging the upper bound (or beaten by the bound itself)
    // means no overdispersion is detectable.
    const double f_hi = profile(hi);
    if (f_hi >= best_f || hi - best_x < 5e-3) {
        if (warnings != nullptr) {
            warnings->push_back("theta profile monotone increasing; no overdispersion detected, "
                                "returning upper bound");
        }
        return bounds.second;
    }
    return std::clamp(std::exp(best_x), bounds.first, bounds.second);
}

std::map<std::string, double> select_lambdas(const DesignBlocks& design, const ModelSpec& spec) {
    auto compiled = std::make_shared<CompiledDesign>(design);
    auto solver = std::make_shared<BlockSolver>(*compiled);
    const auto& classes = compiled->penalty_classes();
    const double theta0 = moment_theta(design, spec.theta_bounds);
    const auto n = static_cast<double>(design.n_rows());

    std::vector<const std::vector<double>*> grids;
    grids.reserve(classes.size());
    std::vector<int> index(classes.size());
    for (std::size_t c = 0; c < classes.size(); ++c) {
        grids.push_back(&spec.grid_for(classes[c].name));
        index[c] = static_cast<int>(grids[c]->size()) - 1; // start fully smoothed
    }

    Eigen::VectorXd warm;
    bool have_warm = false;
    std::map<std::vector<int>, double> cache;
    auto eval = [&](const std::vector<int>& key) {
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        std::vector<double> lam(classes.size());
        for (std::size_t c = 0; c < classes.size(); ++c) lam[c] = (*grids[c])[static_cast<std::size_t>(key[c])];
        auto fit = pirls_run(design, compiled, solver, theta0, lam,
                             have_warm ? &warm : nullptr, true);
        warm = fit.beta;
        have_warm = true;
        const double denom = n - fit.edf;
        const double gcv = denom > 0.0 ? n * fit.deviance / (denom * denom)
                                       : std::numeric_limits<double>::infinity();
        cache.emplace(key, gcv);
        return gcv;
    };

    for (int sweep = 0; sweep < 2; ++sweep) {
        for (std::size_t c = 0; c < classes.size(); ++c) {
            std::vector<double> scores(grids[c]->size());
            for (std::size_t g = 0; g < grids[c]->size(); ++g) {
                std::vector<int> key = index;
                key[c] = static_cast<int>(g);
                scores[g] = eval(key);
            }
            const double best = *std::min_element(scores.begin(), scores.end());
            const double tie = best + 1e-9 * (std::abs(best) + 1e-12);
            for (std::size_t g = 0; g < scores.size(); ++g) {
                if (scores[g] <= tie) index[c] = static_cast<int>(g); // ties -> larger lambda
            }
        }
    }

    std::map<std::string, double> chosen;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        chosen[classes[c].name] = (*grids[c])[static_cast<std::size_t>(index[c])];
    }
    return chosen;
}

FittedGAM fit(const AdmissionsPanel& panel, const Geography& geo, const AdjacencyGraph& adjacency,
              const CalendarFeatures& cal, const ModelSpec& spec) {
    auto design = std::make_shared<DesignBlocks>(assemble_design(panel, geo, adjacency, cal, spec));
    FittedGAM out;
    out.warnings = design->warnings();

    out.lambdas = select_lambdas(*design, spec);
    out.theta = estimate_theta(*design, out.lambdas, spec.theta_bounds, &out.warnings);

    auto final_fit = fit_pirls(*design, out.theta, out.lambdas, nullptr, true);
    if (!final_fit.converged) {
        out.warnings.push_back("P-IRLS did not converge within 200 iterations");
    }
    out.beta = final_fit.beta;
    out.cov_beta = final_fit.covariance();
    out.deviance = final_fit.deviance;
    out.edf = final_fit.edf;
    out.converged = final_fit.converged;
    out.design = design;
    out.compiled = final_fit.compiled;
    out.information_factor = final_fit.solver;
    return out;
}

} // namespace fluhgam
