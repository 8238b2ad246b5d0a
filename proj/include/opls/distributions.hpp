#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace opls {

inline constexpr double kPosInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Standard normal density.
double std_normal_pdf(double x);

/// Standard normal distribution function. Accepts +-infinity.
double std_normal_cdf(double x);

/// Inverse of std_normal_cdf. Throws NumericalError unless 0 < p < 1.
double std_normal_quantile(double p);

struct BivariateGaussianCdfParams {
    double h = 0.0;
    double k = 0.0;
    double rho = 0.0;
};

/// P(X <= h, Y <= k) for a standard bivariate normal with correlation rho.
///
/// Finite limits go through Genz's Gauss-Legendre reduction of the
/// Drezner-Wesolowsky integral (absolute error around 1e-15); infinite limits
/// are resolved exactly. |rho| must be strictly below 1.
double bvn_cdf(const BivariateGaussianCdfParams& params);

inline double bvn_cdf(double h, double k, double rho) { return bvn_cdf({h, k, rho}); }

struct BetaParams {
    double alpha = 1.0;
    double beta = 1.0;
};

/// Theoretical skewness of a Beta(alpha, beta) law.
double beta_skewness(const BetaParams& params);

/// Seedable generator state. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; variates are drawn through
/// Boost.Random distributions, which are portable across toolchains.
class RngState {
public:
    explicit RngState(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    /// Independent stream for replication `index` of a run seeded with `seed`.
    static RngState substream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t seed() const { return seed_; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::vector<double> sample_standard_normal(RngState& rng, std::size_t n);

/// Beta draws shifted and scaled to exact sample mean 0 and sample
/// variance 1 (1/(n-1) estimator).
std::vector<double> sample_standardized_beta(const BetaParams& params, RngState& rng,
                                             std::size_t n);

} // namespace opls
