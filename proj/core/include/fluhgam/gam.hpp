#pragma once

#include "fluhgam/block_solver.hpp"
#include "fluhgam/design.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace fluhgam {

// Negative binomial deviance / log-likelihood, mean parameterization:
// Var(y) = mu + mu^2 / theta.
double nb_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double theta);
double nb_log_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double theta);

struct PirlsFit {
    Eigen::VectorXd beta;
    double deviance = 0.0;           // unpenalized NB deviance
    double penalized_deviance = 0.0;
    double edf = 0.0;
    bool converged = false;
    int iterations = 0;
    std::shared_ptr<CompiledDesign> compiled;
    std::shared_ptr<BlockSolver> solver; // factored at the final weights

    Eigen::MatrixXd covariance() const { return solver->dense_covariance(); }
};

// Penalized IRLS at fixed theta and smoothing parameters. Converges when the
// relative change in penalized deviance falls below 1e-8 (max 200 iterations,
// with step halving); non-convergence is reported through the flag, never an
// exception. `lambdas` must cover every penalty class present in the design.
PirlsFit fit_pirls(const DesignBlocks& design, double theta,
                   const std::map<std::string, double>& lambdas,
                   const Eigen::VectorXd* warm_start = nullptr, bool want_edf = true);

// Profile-likelihood dispersion estimate: golden-section search on log theta,
// refitting P-IRLS at each candidate (two outer sweeps). Returns bounds.second
// with a warning when the profile is monotone increasing (Poisson-like data).
double estimate_theta(const DesignBlocks& design, const std::map<std::string, double>& lambdas,
                      std::pair<double, double> bounds,
                      std::vector<std::string>* warnings = nullptr);

// Coordinate descent over penalty classes on each class' log-lambda grid,
// minimizing GCV = n * D / (n - edf)^2 at the converged working model; two
// full sweeps, ties broken toward the larger (smoother) lambda.
std::map<std::string, double> select_lambdas(const DesignBlocks& design, const ModelSpec& spec);

struct FittedGAM {
    Eigen::VectorXd beta;
    Eigen::MatrixXd cov_beta;
    double theta = 0.0;
    std::map<std::string, double> lambdas;
    double deviance = 0.0;
    double edf = 0.0;
    bool converged = false;
    std::vector<std::string> warnings;

    std::shared_ptr<const DesignBlocks> design;
    // Engine handles kept for fast coefficient sampling.
    std::shared_ptr<const CompiledDesign> compiled;
    std::shared_ptr<const BlockSolver> information_factor;
};

// Full pipeline: assemble -> select_lambdas -> estimate_theta -> final P-IRLS.
FittedGAM fit(const AdmissionsPanel& panel, const Geography& geo, const AdjacencyGraph& adjacency,
              const CalendarFeatures& cal, const ModelSpec& spec);

} // namespace fluhgam
