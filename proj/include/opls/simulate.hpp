#pragma once

#include "opls/distributions.hpp"
#include "opls/estimation.hpp"
#include "opls/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace opls {

enum class LatentLaw { normal, beta };

const char* to_string(LatentLaw law);
LatentLaw parse_latent_law(const std::string& text);

/// Three exogenous latents xi1..xi3 and three endogenous eta1..eta3:
///   eta1 = g11 xi1 + z1
///   eta2 = b21 eta1 + g22 xi2 + g23 xi3 + z2
///   eta3 = b32 eta2 + z3
/// with three reflective indicators per latent.
struct SimulationConfig {
    LatentLaw law = LatentLaw::normal;
    int npoints = 4;
    int replications = 100;
    int sample_size = 250;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    double gamma11 = 0.9;
    double gamma22 = 0.5;
    double gamma23 = 0.6;
    double beta21 = 0.5;
    double beta32 = 0.6;
    std::array<double, 3> loadings{0.8, 0.9, 0.95};
    /// Beta laws for xi1, xi2, xi3 under LatentLaw::beta.
    std::array<BetaParams, 3> beta_laws{BetaParams{11, 2}, BetaParams{16, 3}, BetaParams{54, 7}};
    FitOptions fit{};
    /// Zero-cell substitute for the polychoric tables. Kept negligible: at
    /// N=250 a half count in the empty corner cells of strongly associated
    /// tables drags the estimates towards zero.
    double epsilon = 1e-6;
};

/// Throws InputError on out-of-range settings or parameters that leave a
/// negative error variance.
void validate(const SimulationConfig& config);

/// Path model of the study: latents xi1, xi2, xi3, eta1, eta2, eta3 with
/// indicators x11..x33 and y11..y33.
PathModel simulation_model();

/// Names and true values of the five inner parameters, in the order the
/// fitted inner equations list them: g11, g22, g23, b21, b32.
const std::vector<std::string>& inner_parameter_names();
std::vector<double> true_inner_parameters(const SimulationConfig& config);

/// Error variances implied by unit-variance latents and indicators.
struct ErrorVariances {
    std::array<double, 3> zeta;
    std::array<double, 3> epsilon;
};
ErrorVariances error_variances(const SimulationConfig& config);

struct SimulatedData {
    DataMatrix data;         // N x 18 ordinal codes in model order
    Eigen::MatrixXd latents; // N x 6: xi1, xi2, xi3, eta1, eta2, eta3
    Eigen::MatrixXd continuous; // indicators before discretization
};

/// (x - min) / (max - min + 0.01) * npoints + 0.5 on sample extrema, rounded
/// half away from zero. Throws NumericalError on a constant column.
std::vector<int> rescale_to_points(const Eigen::VectorXd& column, int npoints);

SimulatedData generate_dataset(const SimulationConfig& config, RngState& rng);

/// Percentage points 5, 10, 25, 50, 75, 90, 95.
inline constexpr std::array<double, 7> kPercentagePoints{0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95};

/// Linear-interpolation sample quantile (Hyndman-Fan type 7).
double sample_quantile(std::vector<double> values, double p);

struct DistributionSummary {
    std::array<double, 7> percentiles{};
    double mean = 0.0;
    double sd = 0.0; // 1/(n-1)
    std::size_t count = 0;
};

DistributionSummary summarize(const std::vector<double>& values);

struct RatioSummary {
    std::array<double, 7> percentiles{};
    double geometric_mean = 0.0;
    std::size_t used = 0;
    std::size_t excluded_zero = 0; // pairs with an exact-zero PLS bias
};

/// Ratios |b_opls| / |b_pls| per trial; geometric mean exp(mean log ratio).
/// Pairs with a zero PLS bias are excluded and counted; a zero OPLS bias
/// is excluded as well since its log ratio is undefined.
RatioSummary bias_ratio_summary(const std::vector<double>& biases_pls,
                                const std::vector<double>& biases_opls);

/// Per-replication raw results.
struct ReplicationResult {
    bool ok = false;
    std::string failure; // "pls: ..." or "opls: ..." when !ok
    std::vector<double> pls_inner;
    std::vector<double> opls_inner;
    Eigen::VectorXd pls_loadings;
    Eigen::VectorXd opls_loadings;
    Eigen::VectorXd pls_weights; // raw outer weights, one per indicator
    Eigen::VectorXd opls_weights;
};

ReplicationResult run_replication(const SimulationConfig& config, std::uint64_t index);

struct ParameterReport {
    std::string name;
    double true_value = 0.0;
    DistributionSummary pls;
    DistributionSummary opls;
    RatioSummary ratio;
};

struct QuartileRow {
    std::string method;    // pls | opls
    std::string statistic; // loading_bias | weight
    std::string indicator;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

struct BiasReport {
    SimulationConfig config;
    std::vector<ParameterReport> parameters;
    std::vector<QuartileRow> outer;
    int completed = 0;
    int pls_failures = 0;
    int opls_failures = 0;
    std::vector<std::string> failure_messages;
};

/// Runs every replication on its own RNG substream (seed, index), spread over
/// config.threads workers; the report does not depend on the thread count.
BiasReport run_study(const SimulationConfig& config);

/// Tables in the layout section,parameter,true_value,p5..p95,mean,sd,
/// geometric_mean,n_used,n_excluded.
std::string bias_table_csv(const BiasReport& report);
std::string outer_quartiles_csv(const BiasReport& report);
std::string study_metadata_csv(const BiasReport& report);

} // namespace opls
