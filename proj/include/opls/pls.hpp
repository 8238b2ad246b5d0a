#pragma once

#include "opls/error.hpp"
#include "opls/model.hpp"
#include "opls/polychoric.hpp"

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace opls {

/// Only the centroid inner scheme is provided; kept as a tag for output.
enum class InnerScheme { centroid };

struct FitOptions {
    double tol = 1e-7;
    int max_iter = 300;
};

struct FitTrace {
    std::vector<double> deltas;
    double tol = 1e-7;
    int max_iter = 300;
};

/// Block-structured weights, K x (n+m). `raw` columns sum to +-1 over their
/// block; `standardizing` rescales each column to a unit-variance composite.
struct WeightState {
    Eigen::MatrixXd raw;
    Eigen::MatrixXd standardizing;
    int iteration = 0;
    double delta = std::numeric_limits<double>::infinity();
};

class PlsConvergenceError : public ConvergenceError {
public:
    PlsConvergenceError(const std::string& what, FitTrace trace)
        : ConvergenceError(what), trace_(std::move(trace)) {}
    const FitTrace& trace() const { return trace_; }

private:
    FitTrace trace_;
};

/// Equal weights 1/p_j inside each block.
WeightState initial_weights(const PathModel& model);

/// W {[W' S W] * I}^{-1/2}: divides every column by its composite
/// standard deviation under `sigma`.
Eigen::MatrixXd standardizing_weights(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& sigma);

/// Centroid-scheme instrument signs, (T + T') * sign(latent correlations),
/// with sign(0) = +1.
Eigen::MatrixXd centroid_signs(const PathModel& model, const Eigen::MatrixXd& latent_corr);

struct MatrixFit {
    WeightState weights;
    Eigen::MatrixXd latent_correlations;
    FitTrace trace;
};

/// Mode A / centroid PLS driven by the indicator correlation matrix alone.
/// Each iteration forms the composite correlations from the standardizing
/// weights, the indicator-instrument covariances S SW Upsilon, restricts them
/// to the block pattern and renormalises each column to sum to +-1.
/// Stops when the Frobenius change of the raw weights drops below tol.
MatrixFit matrix_pls_fit(const Eigen::MatrixXd& sigma_xx, const PathModel& model,
                         const FitOptions& options = {});

inline MatrixFit matrix_pls_fit(const CorrelationMatrix& sigma_xx, const PathModel& model,
                                const FitOptions& options = {}) {
    return matrix_pls_fit(sigma_xx.values, model, options);
}

struct ScoreFit {
    WeightState weights;
    /// Standardized composite scores, N x (n+m).
    Eigen::MatrixXd scores;
    FitTrace trace;
};

/// Classical score-based PLS: rebuilds composite and instrument scores every
/// pass. Indicators are centered and scaled to unit variance first, so the
/// weights are directly comparable to matrix_pls_fit on the Pearson matrix.
ScoreFit score_based_pls_fit(const DataMatrix& data, const PathModel& model,
                             const FitOptions& options = {});

} // namespace opls
