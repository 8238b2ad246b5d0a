#pragma once

#include "opls/distributions.hpp"
#include "opls/estimation.hpp"
#include "opls/model.hpp"
#include "opls/pls.hpp"
#include "opls/polychoric.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace opls::test {

/// Phi2 via Plackett's identity: Phi(h)Phi(k) + int_0^rho phi2(h, k, r) dr.
/// Independent of the library's Gauss-Legendre reduction.
inline double plackett_bvn(double h, double k, double rho) {
    const double pi = boost::math::constants::pi<double>();
    auto phi2 = [&](double r) {
        const double s = 1.0 - r * r;
        return std::exp(-(h * h - 2.0 * r * h * k + k * k) / (2.0 * s)) / (2.0 * pi * std::sqrt(s));
    };
    const double base = 0.5 * std::erfc(-h / std::sqrt(2.0)) * 0.5 * std::erfc(-k / std::sqrt(2.0));
    if (rho == 0.0) {
        return base;
    }
    double err = 0.0;
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(phi2, 0.0, rho, 15, 1e-14, &err);
    return base + integral;
}

struct RandomProblem {
    PathModel model;
    DataMatrix data;
};

/// Random recursive model with `latents` latents (1..5 indicators each) and
/// interval data generated from it with positive loadings.
inline RandomProblem random_problem(std::uint64_t seed, int latents, int n = 200) {
    RngState rng(seed);
    auto& eng = rng.engine();
    boost::random::uniform_int_distribution<int> size_dist(1, 5);
    boost::random::uniform_real_distribution<double> coef(0.25, 0.6);
    boost::random::uniform_real_distribution<double> load(0.5, 0.9);
    boost::random::normal_distribution<double> gauss;

    const int exo = boost::random::uniform_int_distribution<int>(1, std::max(1, latents / 2))(eng);
    std::vector<std::vector<int>> parents(static_cast<std::size_t>(latents));
    for (int j = exo; j < latents; ++j) {
        parents[static_cast<std::size_t>(j)].push_back(
            boost::random::uniform_int_distribution<int>(0, j - 1)(eng));
        for (int k = 0; k < j; ++k) {
            if (k != parents[static_cast<std::size_t>(j)].front() &&
                boost::random::uniform_real_distribution<double>(0, 1)(eng) < 0.3) {
                parents[static_cast<std::size_t>(j)].push_back(k);
            }
        }
    }
    // Every exogenous latent needs a child.
    for (int k = 0; k < exo; ++k) {
        bool has_child = false;
        for (const auto& p : parents) {
            for (int q : p) {
                has_child = has_child || q == k;
            }
        }
        if (!has_child) {
            parents[static_cast<std::size_t>(
                        boost::random::uniform_int_distribution<int>(exo, latents - 1)(eng))]
                .push_back(k);
        }
    }

    ModelSpec spec;
    spec.name = "random";
    std::vector<int> sizes;
    for (int j = 0; j < latents; ++j) {
        const std::string name = "L" + std::to_string(j + 1);
        spec.latents.push_back({name, j < exo ? LatentKind::exogenous : LatentKind::endogenous});
        sizes.push_back(size_dist(eng));
        std::vector<std::string> block;
        for (int h = 0; h < sizes.back(); ++h) {
            block.push_back(name + "_" + std::to_string(h + 1));
        }
        spec.blocks.emplace_back(name, block);
        for (int p : parents[static_cast<std::size_t>(j)]) {
            spec.paths.emplace_back("L" + std::to_string(p + 1), name);
        }
    }
    RandomProblem out{build_model(spec), {}};

    Eigen::MatrixXd eta(n, latents);
    for (int j = 0; j < latents; ++j) {
        Eigen::VectorXd col(n);
        for (int r = 0; r < n; ++r) {
            col(r) = gauss(eng);
        }
        for (int p : parents[static_cast<std::size_t>(j)]) {
            col += coef(eng) * eta.col(p);
        }
        eta.col(j) = col;
    }
    std::vector<std::string> names;
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(out.model.indicator_count()));
    Eigen::Index c = 0;
    for (std::size_t j = 0; j < out.model.latent_count(); ++j) {
        // Model latents are reordered exogenous first then topologically; map by name.
        const int src = std::stoi(out.model.latent_names()[j].substr(1)) - 1;
        for (const auto& ind : out.model.block(j)) {
            const double l = load(eng);
            for (int r = 0; r < n; ++r) {
                x(r, c) = l * eta(r, src) + gauss(eng);
            }
            names.push_back(ind);
            ++c;
        }
    }
    out.data = make_data(std::move(x), std::move(names),
                         std::vector<ColumnKind>(static_cast<std::size_t>(c), ColumnKind::interval));
    return out;
}

/// Largest absolute disagreement between the classical score-based engine
/// (ending phase done on the scores by ordinary least squares and direct
/// correlations) and the matrix engine on the Pearson matrix.
struct EngineGap {
    double weights = 0.0;
    double inner = 0.0;
    double loadings = 0.0;
    double max() const { return std::max({weights, inner, loadings}); }
};

inline EngineGap engine_gap(const RandomProblem& p, const FitOptions& options) {
    const auto& model = p.model;
    const auto score = score_based_pls_fit(p.data, model, options);
    const auto sigma = pearson_matrix(p.data);
    const auto mfit = matrix_pls_fit(sigma, model, options);
    const auto res = estimate(sigma.values, model, mfit, FitMode::pls);

    EngineGap gap;
    gap.weights = (score.weights.raw - mfit.weights.raw).cwiseAbs().maxCoeff();

    const auto n = static_cast<double>(p.data.rows());
    Eigen::MatrixXd x = p.data.values.rowwise() - p.data.values.colwise().mean();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        x.col(c) /= std::sqrt(x.col(c).squaredNorm() / (n - 1));
    }
    const Eigen::MatrixXd& y = score.scores;
    for (Eigen::Index r = 0; r < x.cols(); ++r) {
        const auto owner = static_cast<Eigen::Index>(model.owner(static_cast<std::size_t>(r)));
        const double lambda = x.col(r).dot(y.col(owner)) / (n - 1);
        gap.loadings = std::max(gap.loadings, std::abs(lambda - res.loadings(r)));
    }
    for (const auto& eq : res.inner) {
        Eigen::MatrixXd design(y.rows(), static_cast<Eigen::Index>(eq.covariates.size()));
        for (std::size_t c = 0; c < eq.covariates.size(); ++c) {
            design.col(static_cast<Eigen::Index>(c)) = y.col(static_cast<Eigen::Index>(eq.covariates[c]));
        }
        const Eigen::VectorXd beta =
            design.colPivHouseholderQr().solve(Eigen::VectorXd(y.col(static_cast<Eigen::Index>(eq.target))));
        gap.inner = std::max(gap.inner, (beta - eq.coefficients).cwiseAbs().maxCoeff());
    }
    return gap;
}

/// Ordinal codes 1..categories by cutting a continuous column at its
/// empirical quantiles i/categories.
inline Eigen::VectorXd discretize_quantiles(const Eigen::VectorXd& v, int categories) {
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end());
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        int cat = 1;
        for (int q = 1; q < categories; ++q) {
            const auto idx = static_cast<std::size_t>(static_cast<double>(q) * static_cast<double>(sorted.size()) /
                                                      categories);
            if (v(i) > sorted[std::min(idx, sorted.size() - 1)]) {
                cat = q + 1;
            }
        }
        out(i) = cat;
    }
    return out;
}

/// Ordinal version of random_problem: every indicator cut at its quantiles
/// into `categories` codes. With `homogeneous` every indicator of a block
/// repeats the block's first column, so each subject answers a block with a
/// single category.
inline RandomProblem ordinal_problem(std::uint64_t seed, int latents, int n, int categories,
                                     bool homogeneous) {
    auto p = random_problem(seed, latents, n);
    Eigen::MatrixXd codes(p.data.values.rows(), p.data.values.cols());
    for (Eigen::Index c = 0; c < codes.cols(); ++c) {
        codes.col(c) = discretize_quantiles(p.data.values.col(c), categories);
    }
    if (homogeneous) {
        for (std::size_t j = 0; j < p.model.latent_count(); ++j) {
            const auto off = static_cast<Eigen::Index>(p.model.block_offset(j));
            for (Eigen::Index h = 1; h < static_cast<Eigen::Index>(p.model.block_size(j)); ++h) {
                codes.col(off + h) = codes.col(off);
            }
        }
    }
    p.data = make_data(std::move(codes), p.data.names,
                       std::vector<ColumnKind>(p.data.cols(), ColumnKind::ordinal));
    return p;
}

} // namespace opls::test
