#pragma once

#include "opls/model.hpp"
#include "opls/pls.hpp"
#include "opls/polychoric.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace opls {

enum class FitMode { pls, opls };

const char* to_string(FitMode mode);

/// One structural regression on standardized composites.
struct InnerEquation {
    std::size_t target = 0;
    std::vector<std::size_t> covariates;
    Eigen::VectorXd coefficients;
    double r_squared = 0.0;
    double residual_variance = 1.0; // 1 - R^2
};

/// Solves R_j beta = r_j for every endogenous latent, R_j the correlations
/// among its covariates and r_j their correlations with the target.
/// Throws NumericalError naming the equation when R_j is singular.
std::vector<InnerEquation> inner_coefficients(const Eigen::MatrixXd& p_yy, const PathModel& model);

/// lambda_jh = corr(X_jh, Y_j) for the owning block, read off S * SW with
/// unit-variance composites. `sigma_xx_diagonal` rescales covariance inputs;
/// pass ones for correlation matrices.
Eigen::VectorXd outer_loadings(const Eigen::MatrixXd& sigma_xy, const PathModel& model,
                               const Eigen::VectorXd& sigma_xx_diagonal);

inline Eigen::VectorXd outer_loadings(const Eigen::MatrixXd& sigma_xy, const PathModel& model) {
    return outer_loadings(sigma_xy, model, Eigen::VectorXd::Ones(sigma_xy.rows()));
}

/// Standardized alpha on a unit-diagonal correlation block:
/// p/(p-1) * (1 - p / sum of all entries).
double cronbach_alpha_ordinal(const Eigen::MatrixXd& block);

/// (sum lambda)^2 / ((sum lambda)^2 + sum (1 - lambda^2)).
double dillon_goldstein_rho(std::span<const double> loadings);

struct FitResult {
    FitMode mode = FitMode::pls;
    std::vector<InnerEquation> inner;
    Eigen::VectorXd loadings;
    Eigen::VectorXd outer_residual_variances; // 1 - lambda^2
    WeightState weights;
    Eigen::MatrixXd latent_correlations;
    FitTrace trace;
    /// Per latent; NaN for single-indicator blocks.
    std::vector<double> cronbach_alpha;
    std::vector<double> dillon_goldstein;
};

/// Ending phase on an already converged matrix fit.
FitResult estimate(const Eigen::MatrixXd& sigma_xx, const PathModel& model, const MatrixFit& fit,
                   FitMode mode);

/// Full pipeline: Pearson (pls) or polychoric (opls) matrix, matrix-form
/// iteration, ending phase. Throws NumericalError when the polychoric matrix
/// is not positive definite and was not repaired.
struct ModelFit {
    FitResult result;
    CorrelationMatrix sigma;
    std::vector<ThresholdSet> thresholds; // filled for opls only
};

ModelFit fit_model(const DataMatrix& data, const PathModel& model, FitMode mode,
                   const FitOptions& options = {}, const PolychoricOptions& poly = {});

/// Nonparametric row-resampling bootstrap of the inner coefficients.
/// Standard errors use the 1/(B-1) estimator; p-values are two-sided
/// percentile proportions 2 min(P(b <= 0), P(b >= 0)), capped at 1.
struct BootstrapSummary {
    std::vector<double> estimates;
    std::vector<double> standard_errors;
    std::vector<double> p_values;
    int replications = 0;
    int failures = 0;
};

BootstrapSummary bootstrap_inner(const DataMatrix& data, const PathModel& model, FitMode mode,
                                 int replications, std::uint64_t seed,
                                 const FitOptions& options = {},
                                 const PolychoricOptions& poly = {});

} // namespace opls
