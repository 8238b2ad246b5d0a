#include "opls/estimation.hpp"

#include "opls/distributions.hpp"

#include <boost/random/uniform_int_distribution.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace opls {

const char* to_string(FitMode mode) { return mode == FitMode::pls ? "pls" : "opls"; }

std::vector<InnerEquation> inner_coefficients(const Eigen::MatrixXd& p_yy, const PathModel& model) {
    const auto latents = static_cast<Eigen::Index>(model.latent_count());
    if (p_yy.rows() != latents || p_yy.cols() != latents) {
        throw InputError("inner_coefficients: latent correlation matrix has wrong dimension");
    }
    std::vector<InnerEquation> equations;
    for (std::size_t j = model.exogenous_count(); j < model.latent_count(); ++j) {
        InnerEquation eq;
        eq.target = j;
        eq.covariates = model.predecessors(j);
        const auto d = static_cast<Eigen::Index>(eq.covariates.size());
        Eigen::MatrixXd r(d, d);
        Eigen::VectorXd rhs(d);
        for (Eigen::Index a = 0; a < d; ++a) {
            const auto ca = static_cast<Eigen::Index>(eq.covariates[static_cast<std::size_t>(a)]);
            rhs(a) = p_yy(ca, static_cast<Eigen::Index>(j));
            for (Eigen::Index b = 0; b < d; ++b) {
                r(a, b) = p_yy(ca, static_cast<Eigen::Index>(eq.covariates[static_cast<std::size_t>(b)]));
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(r);
        if (!lu.isInvertible()) {
            throw NumericalError("inner_coefficients: singular covariate correlations in the equation for '" +
                                 model.latent_names()[j] + "'");
        }
        eq.coefficients = lu.solve(rhs);
        eq.r_squared = eq.coefficients.dot(rhs);
        eq.residual_variance = 1.0 - eq.r_squared;
        equations.push_back(std::move(eq));
    }
    return equations;
}

Eigen::VectorXd outer_loadings(const Eigen::MatrixXd& sigma_xy, const PathModel& model,
                               const Eigen::VectorXd& sigma_xx_diagonal) {
    const auto k = static_cast<Eigen::Index>(model.indicator_count());
    Eigen::VectorXd lambda(k);
    for (Eigen::Index r = 0; r < k; ++r) {
        const auto j = static_cast<Eigen::Index>(model.owner(static_cast<std::size_t>(r)));
        lambda(r) = sigma_xy(r, j) / std::sqrt(sigma_xx_diagonal(r));
    }
    return lambda;
}

double cronbach_alpha_ordinal(const Eigen::MatrixXd& block) {
    const double p = static_cast<double>(block.rows());
    if (block.rows() < 2 || block.rows() != block.cols()) {
        throw InputError("cronbach_alpha_ordinal: needs a square block with at least 2 items");
    }
    return p / (p - 1.0) * (1.0 - p / block.sum());
}

double dillon_goldstein_rho(std::span<const double> loadings) {
    if (loadings.size() < 2) {
        throw InputError("dillon_goldstein_rho: needs at least 2 loadings");
    }
    double sum = 0.0;
    double unique = 0.0;
    for (double l : loadings) {
        sum += l;
        unique += 1.0 - l * l;
    }
    return sum * sum / (sum * sum + unique);
}

FitResult estimate(const Eigen::MatrixXd& sigma_xx, const PathModel& model, const MatrixFit& fit,
                   FitMode mode) {
    FitResult out;
    out.mode = mode;
    out.weights = fit.weights;
    out.latent_correlations = fit.latent_correlations;
    out.trace = fit.trace;
    out.inner = inner_coefficients(fit.latent_correlations, model);
    const Eigen::MatrixXd sigma_xy = sigma_xx * fit.weights.standardizing;
    out.loadings = outer_loadings(sigma_xy, model, sigma_xx.diagonal());
    out.outer_residual_variances = (1.0 - out.loadings.array().square()).matrix();
    for (std::size_t j = 0; j < model.latent_count(); ++j) {
        const auto off = static_cast<Eigen::Index>(model.block_offset(j));
        const auto p = static_cast<Eigen::Index>(model.block_size(j));
        if (p < 2) {
            out.cronbach_alpha.push_back(std::numeric_limits<double>::quiet_NaN());
            out.dillon_goldstein.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        out.cronbach_alpha.push_back(cronbach_alpha_ordinal(sigma_xx.block(off, off, p, p)));
        const Eigen::VectorXd l = out.loadings.segment(off, p);
        out.dillon_goldstein.push_back(dillon_goldstein_rho({l.data(), static_cast<std::size_t>(p)}));
    }
    return out;
}

ModelFit fit_model(const DataMatrix& data, const PathModel& model, FitMode mode,
                   const FitOptions& options, const PolychoricOptions& poly) {
    ModelFit out;
    if (mode == FitMode::pls) {
        out.sigma = pearson_matrix(data);
    } else {
        auto pr = polychoric_matrix(data, poly);
        out.sigma = std::move(pr.matrix);
        out.thresholds = std::move(pr.thresholds);
    }
    // A sample Pearson matrix is positive semidefinite by construction; a
    // singular one (collinear indicators) is still usable. Only an indefinite
    // polychoric matrix is rejected.
    if (out.sigma.kind == CorrelationKind::polychoric && out.sigma.pd_status == PdStatus::failed) {
        throw NumericalError(std::string(to_string(out.sigma.kind)) +
                             " correlation matrix is not positive definite");
    }
    const auto fit = matrix_pls_fit(out.sigma, model, options);
    out.result = estimate(out.sigma.values, model, fit, mode);
    return out;
}

BootstrapSummary bootstrap_inner(const DataMatrix& data, const PathModel& model, FitMode mode,
                                 int replications, std::uint64_t seed, const FitOptions& options,
                                 const PolychoricOptions& poly) {
    if (replications < 2) {
        throw InputError("bootstrap: at least 2 replications are required");
    }
    BootstrapSummary summary;
    const auto base = fit_model(data, model, mode, options, poly);
    for (const auto& eq : base.result.inner) {
        for (Eigen::Index a = 0; a < eq.coefficients.size(); ++a) {
            summary.estimates.push_back(eq.coefficients(a));
        }
    }
    const std::size_t q = summary.estimates.size();
    std::vector<std::vector<double>> draws(q);

    const auto n = static_cast<Eigen::Index>(data.rows());
    for (int b = 0; b < replications; ++b) {
        auto rng = RngState::substream(seed, static_cast<std::uint64_t>(b));
        boost::random::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        DataMatrix sample = data;
        for (Eigen::Index s = 0; s < n; ++s) {
            sample.values.row(s) = data.values.row(pick(rng.engine()));
        }
        try {
            const auto refit = fit_model(sample, model, mode, options, poly);
            std::size_t idx = 0;
            for (const auto& eq : refit.result.inner) {
                for (Eigen::Index a = 0; a < eq.coefficients.size(); ++a) {
                    draws[idx++].push_back(eq.coefficients(a));
                }
            }
        } catch (const std::runtime_error&) {
            ++summary.failures;
        }
    }
    summary.replications = replications - summary.failures;

    for (std::size_t i = 0; i < q; ++i) {
        const auto& d = draws[i];
        const double m = static_cast<double>(d.size());
        if (d.size() < 2) {
            summary.standard_errors.push_back(std::numeric_limits<double>::quiet_NaN());
            summary.p_values.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        double mean = 0.0;
        for (double v : d) {
            mean += v;
        }
        mean /= m;
        double ss = 0.0;
        std::size_t below = 0;
        std::size_t above = 0;
        for (double v : d) {
            ss += (v - mean) * (v - mean);
            below += v <= 0.0 ? 1 : 0;
            above += v >= 0.0 ? 1 : 0;
        }
        summary.standard_errors.push_back(std::sqrt(ss / (m - 1.0)));
        summary.p_values.push_back(
            std::min(1.0, 2.0 * static_cast<double>(std::min(below, above)) / m));
    }
    return summary;
}

} // namespace opls
