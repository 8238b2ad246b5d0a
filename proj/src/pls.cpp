#include "opls/pls.hpp"

#include <cmath>
#include <string>

namespace opls {

namespace {

double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

void check_dimensions(const Eigen::MatrixXd& sigma, const PathModel& model) {
    const auto k = static_cast<Eigen::Index>(model.indicator_count());
    if (sigma.rows() != k || sigma.cols() != k) {
        throw InputError("pls: correlation matrix is " + std::to_string(sigma.rows()) + "x" +
                         std::to_string(sigma.cols()) + ", model has " + std::to_string(k) +
                         " indicators");
    }
}

std::string convergence_message(int max_iter, double delta) {
    return "pls: weights did not converge within " + std::to_string(max_iter) +
           " iterations (last change " + std::to_string(delta) + ")";
}

} // namespace

WeightState initial_weights(const PathModel& model) {
    WeightState state;
    state.raw = model.weight_pattern();
    for (std::size_t j = 0; j < model.latent_count(); ++j) {
        state.raw.col(static_cast<Eigen::Index>(j)) /= static_cast<double>(model.block_size(j));
    }
    state.iteration = 0;
    return state;
}

Eigen::MatrixXd standardizing_weights(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& sigma) {
    const Eigen::VectorXd variances = (raw.transpose() * sigma * raw).diagonal();
    Eigen::MatrixXd sw = raw;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
        if (!(variances(j) > 0.0)) {
            throw NumericalError("pls: composite " + std::to_string(j + 1) + " has zero variance");
        }
        sw.col(j) /= std::sqrt(variances(j));
    }
    return sw;
}

Eigen::MatrixXd centroid_signs(const PathModel& model, const Eigen::MatrixXd& latent_corr) {
    const Eigen::MatrixXd adjacency = model.inner() + model.inner().transpose();
    return adjacency.cwiseProduct(latent_corr.unaryExpr([](double v) { return sign_of(v); }));
}

MatrixFit matrix_pls_fit(const Eigen::MatrixXd& sigma_xx, const PathModel& model,
                         const FitOptions& options) {
    check_dimensions(sigma_xx, model);
    const Eigen::MatrixXd& pattern = model.weight_pattern();
    const auto latents = static_cast<Eigen::Index>(model.latent_count());

    MatrixFit fit;
    fit.trace.tol = options.tol;
    fit.trace.max_iter = options.max_iter;
    fit.weights = initial_weights(model);
    Eigen::MatrixXd w = fit.weights.raw;

    for (int iter = 1; iter <= options.max_iter; ++iter) {
        const Eigen::MatrixXd w_prev = w;
        const Eigen::MatrixXd sw = standardizing_weights(w, sigma_xx);
        const Eigen::MatrixXd p_yy = sw.transpose() * sigma_xx * sw;
        const Eigen::MatrixXd upsilon = centroid_signs(model, p_yy);
        const Eigen::MatrixXd sigma_xy = sigma_xx * sw;
        const Eigen::MatrixXd sigma_xz = sigma_xy * upsilon;
        const Eigen::MatrixXd c = pattern.cwiseProduct(sigma_xz);

        Eigen::VectorXd orientation(latents);
        for (Eigen::Index j = 0; j < latents; ++j) {
            double votes = 0.0;
            for (Eigen::Index r = 0; r < pattern.rows(); ++r) {
                if (pattern(r, j) != 0.0) {
                    votes += sign_of(sigma_xy(r, j));
                }
            }
            orientation(j) = sign_of(votes);
        }

        const Eigen::RowVectorXd column_sums = c.colwise().sum();
        for (Eigen::Index j = 0; j < latents; ++j) {
            if (column_sums(j) == 0.0 || !std::isfinite(column_sums(j))) {
                throw NumericalError("pls: singular block for latent '" +
                                     model.latent_names()[static_cast<std::size_t>(j)] +
                                     "' (indicator-instrument covariances sum to zero)");
            }
            w.col(j) = c.col(j) * (orientation(j) / column_sums(j));
        }

        const double delta = (w - w_prev).norm();
        fit.trace.deltas.push_back(delta);
        fit.weights.iteration = iter;
        fit.weights.delta = delta;
        if (delta < options.tol) {
            fit.weights.raw = w;
            fit.weights.standardizing = standardizing_weights(w, sigma_xx);
            fit.latent_correlations =
                fit.weights.standardizing.transpose() * sigma_xx * fit.weights.standardizing;
            return fit;
        }
    }
    throw PlsConvergenceError(convergence_message(options.max_iter, fit.weights.delta),
                              std::move(fit.trace));
}

ScoreFit score_based_pls_fit(const DataMatrix& data, const PathModel& model,
                             const FitOptions& options) {
    if (data.cols() != model.indicator_count()) {
        throw InputError("pls: data has " + std::to_string(data.cols()) + " columns, model has " +
                         std::to_string(model.indicator_count()) + " indicators");
    }
    const auto n = static_cast<Eigen::Index>(data.rows());
    const double dof = static_cast<double>(n - 1);
    const auto latents = model.latent_count();
    const auto& t = model.inner();

    // Centered, unit-variance indicators.
    Eigen::MatrixXd x = data.values.rowwise() - data.values.colwise().mean();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double sd = std::sqrt(x.col(c).squaredNorm() / dof);
        if (!(sd > 0.0)) {
            throw InputError("pls: indicator '" + data.names[static_cast<std::size_t>(c)] +
                             "' has zero variance");
        }
        x.col(c) /= sd;
    }

    auto block_of = [&](std::size_t j) {
        return x.middleCols(static_cast<Eigen::Index>(model.block_offset(j)),
                            static_cast<Eigen::Index>(model.block_size(j)));
    };
    auto standardize = [&](Eigen::VectorXd y) {
        const double f = 1.0 / std::sqrt(y.squaredNorm() / dof);
        return Eigen::VectorXd(y * f);
    };

    std::vector<Eigen::VectorXd> weights(latents);
    Eigen::MatrixXd y(n, static_cast<Eigen::Index>(latents));
    for (std::size_t j = 0; j < latents; ++j) {
        const auto p = static_cast<Eigen::Index>(model.block_size(j));
        weights[j] = Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
        y.col(static_cast<Eigen::Index>(j)) = standardize(block_of(j) * weights[j]);
    }

    ScoreFit fit;
    fit.trace.tol = options.tol;
    fit.trace.max_iter = options.max_iter;
    double delta = std::numeric_limits<double>::infinity();
    int iter = 0;
    bool converged = false;
    while (iter < options.max_iter) {
        ++iter;
        // Step 1: instruments from sign-weighted neighbouring composites.
        Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(latents));
        for (std::size_t j = 0; j < latents; ++j) {
            for (std::size_t k = 0; k < latents; ++k) {
                const auto jj = static_cast<Eigen::Index>(j);
                const auto kk = static_cast<Eigen::Index>(k);
                const double link = std::max(t(jj, kk), t(kk, jj));
                if (link == 0.0) {
                    continue;
                }
                const double cov = y.col(jj).dot(y.col(kk)) / dof;
                z.col(jj) += link * sign_of(cov) * y.col(kk);
            }
        }

        // Step 2: Mode A weights from indicator-instrument covariances.
        double sq_change = 0.0;
        for (std::size_t j = 0; j < latents; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const auto xb = block_of(j);
            const Eigen::VectorXd zc = z.col(jj).array() - z.col(jj).mean();
            const Eigen::VectorXd yc = y.col(jj).array() - y.col(jj).mean();
            const Eigen::VectorXd cov_xz = xb.transpose() * zc / dof;
            const Eigen::VectorXd cov_xy = xb.transpose() * yc / dof;
            double votes = 0.0;
            for (Eigen::Index h = 0; h < cov_xy.size(); ++h) {
                votes += sign_of(cov_xy(h));
            }
            const double total = cov_xz.sum();
            if (total == 0.0 || !std::isfinite(total)) {
                throw NumericalError("pls: singular block for latent '" + model.latent_names()[j] +
                                     "' (indicator-instrument covariances sum to zero)");
            }
            const Eigen::VectorXd updated = sign_of(votes) * cov_xz / total;
            sq_change += (updated - weights[j]).squaredNorm();
            weights[j] = updated;
        }

        // Step 3: outer approximation, then standardization.
        for (std::size_t j = 0; j < latents; ++j) {
            const Eigen::VectorXd raw = block_of(j) * weights[j] / weights[j].sum();
            y.col(static_cast<Eigen::Index>(j)) = standardize(raw);
        }

        delta = std::sqrt(sq_change);
        fit.trace.deltas.push_back(delta);
        if (delta <= options.tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw PlsConvergenceError(convergence_message(options.max_iter, delta), std::move(fit.trace));
    }

    const auto k = static_cast<Eigen::Index>(model.indicator_count());
    fit.weights.raw = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(latents));
    fit.weights.standardizing = fit.weights.raw;
    for (std::size_t j = 0; j < latents; ++j) {
        const auto off = static_cast<Eigen::Index>(model.block_offset(j));
        const auto p = static_cast<Eigen::Index>(model.block_size(j));
        const auto jj = static_cast<Eigen::Index>(j);
        fit.weights.raw.block(off, jj, p, 1) = weights[j];
        const double sd = std::sqrt((block_of(j) * weights[j]).squaredNorm() / dof);
        fit.weights.standardizing.block(off, jj, p, 1) = weights[j] / sd;
    }
    fit.weights.iteration = iter;
    fit.weights.delta = delta;
    fit.scores = y;
    return fit;
}

} // namespace opls
