#include "opls/distributions.hpp"

#include "opls/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/beta_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

namespace opls {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Gauss-Legendre abscissae (negative half) and weights for 6, 12 and 20 points.
constexpr std::array<double, 3> kGl6X = {-0.9324695142031522, -0.6612093864662647,
                                         -0.2386191860831970};
constexpr std::array<double, 3> kGl6W = {0.1713244923791705, 0.3607615730481384,
                                         0.4679139345726904};
constexpr std::array<double, 6> kGl12X = {-0.9815606342467191, -0.9041172563704750,
                                          -0.7699026741943050, -0.5873179542866171,
                                          -0.3678314989981802, -0.1252334085114692};
constexpr std::array<double, 6> kGl12W = {0.04717533638651177, 0.1069393259953183,
                                          0.1600783285433464,  0.2031674267230659,
                                          0.2334925365383547,  0.2491470458134029};
constexpr std::array<double, 10> kGl20X = {
    -0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188,
    -0.7463319064601508, -0.6360536807265150, -0.5108670019508271, -0.3737060887154196,
    -0.2277858511416451, -0.07652652113349733};
constexpr std::array<double, 10> kGl20W = {
    0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
    0.1019301198172404,  0.1181945319615184,  0.1316886384491766,  0.1420961093183821,
    0.1491729864726037,  0.1527533871307259};

// P(X > h, Y > k) for finite h, k and |r| < 1 (Genz, BVND).
double bvn_upper(double h, double k, double r) {
    const double* x = nullptr;
    const double* w = nullptr;
    std::size_t lg = 0;
    if (std::abs(r) < 0.3) {
        x = kGl6X.data();
        w = kGl6W.data();
        lg = kGl6X.size();
    } else if (std::abs(r) < 0.75) {
        x = kGl12X.data();
        w = kGl12W.data();
        lg = kGl12X.size();
    } else {
        x = kGl20X.data();
        w = kGl20W.data();
        lg = kGl20X.size();
    }

    double hk = h * k;
    double bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r);
        for (std::size_t i = 0; i < lg; ++i) {
            double sn = std::sin(asr * (x[i] + 1.0) / 2.0);
            bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            sn = std::sin(asr * (-x[i] + 1.0) / 2.0);
            bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        return bvn * asr / (2.0 * kTwoPi) + std_normal_cdf(-h) * std_normal_cdf(-k);
    }

    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * std::sqrt(kTwoPi) * std_normal_cdf(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (std::size_t i = 0; i < lg; ++i) {
        double xs = a * (x[i] + 1.0);
        xs *= xs;
        double rs = std::sqrt(1.0 - xs);
        bvn += a * w[i] *
               (std::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs -
                std::exp(-(bs / xs + hk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)));
        xs = as * (-x[i] + 1.0) * (-x[i] + 1.0) / 4.0;
        rs = std::sqrt(1.0 - xs);
        bvn += a * w[i] * std::exp(-(bs / xs + hk) / 2.0) *
               (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                (1.0 + c * xs * (1.0 + d * xs)));
    }
    bvn = -bvn / kTwoPi;

    if (r > 0.0) {
        bvn += std_normal_cdf(-std::max(h, k));
    } else {
        bvn = -bvn;
        if (k > h) {
            if (h < 0.0) {
                bvn += std_normal_cdf(k) - std_normal_cdf(h);
            } else {
                bvn += std_normal_cdf(-h) - std_normal_cdf(-k);
            }
        }
    }
    return bvn;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

double std_normal_pdf(double x) {
    if (std::isinf(x)) {
        return 0.0;
    }
    return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi);
}

double std_normal_cdf(double x) {
    if (x == kPosInf) {
        return 1.0;
    }
    if (x == kNegInf) {
        return 0.0;
    }
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw NumericalError("std_normal_quantile: probability " + std::to_string(p) +
                             " outside (0, 1)");
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double bvn_cdf(const BivariateGaussianCdfParams& params) {
    const double h = params.h;
    const double k = params.k;
    const double rho = params.rho;
    if (!(std::abs(rho) < 1.0)) {
        throw NumericalError("bvn_cdf: correlation must lie strictly inside (-1, 1)");
    }
    if (h == kNegInf || k == kNegInf) {
        return 0.0;
    }
    if (h == kPosInf) {
        return std_normal_cdf(k);
    }
    if (k == kPosInf) {
        return std_normal_cdf(h);
    }
    if (rho == 0.0) {
        return std_normal_cdf(h) * std_normal_cdf(k);
    }
    return std::clamp(bvn_upper(-h, -k, rho), 0.0, 1.0);
}

double beta_skewness(const BetaParams& params) {
    const double a = params.alpha;
    const double b = params.beta;
    return 2.0 * (b - a) * std::sqrt(a + b + 1.0) / ((a + b + 2.0) * std::sqrt(a * b));
}

RngState RngState::substream(std::uint64_t seed, std::uint64_t index) {
    RngState state(seed);
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(seed)),
                      static_cast<std::uint32_t>(splitmix64(seed) >> 32),
                      static_cast<std::uint32_t>(splitmix64(index ^ 0xa0761d6478bd642fULL)),
                      static_cast<std::uint32_t>(splitmix64(index ^ 0xa0761d6478bd642fULL) >> 32)};
    state.engine_.seed(seq);
    return state;
}

std::vector<double> sample_standard_normal(RngState& rng, std::size_t n) {
    boost::random::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& v : out) {
        v = dist(rng.engine());
    }
    return out;
}

std::vector<double> sample_standardized_beta(const BetaParams& params, RngState& rng,
                                             std::size_t n) {
    if (!(params.alpha > 0.0) || !(params.beta > 0.0)) {
        throw NumericalError("sample_standardized_beta: alpha and beta must be positive");
    }
    if (n < 2) {
        throw NumericalError("sample_standardized_beta: at least two draws are needed");
    }
    boost::random::beta_distribution<double> dist(params.alpha, params.beta);
    std::vector<double> out(n);
    for (auto& v : out) {
        v = dist(rng.engine());
    }
    double mean = 0.0;
    for (double v : out) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : out) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
        throw NumericalError("sample_standardized_beta: degenerate sample");
    }
    for (auto& v : out) {
        v = (v - mean) / sd;
    }
    return out;
}

} // namespace opls
