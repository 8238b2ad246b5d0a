#pragma once

#include "opls/error.hpp"
#include "opls/model.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace opls {

/// Stored thresholds are clipped into [-kThresholdClip, kThresholdClip].
inline constexpr double kThresholdClip = 4.0;
/// Polychoric estimates are confined to [-kRhoClip, kRhoClip].
inline constexpr double kRhoClip = 0.999;

/// Marginal thresholds of one ordinal variable on the standard normal scale.
///
/// `cuts[i-1]` is the quantile of the cumulative relative frequency of
/// categories 1..i, clipped to +-4, for i = 1..I-1 (I = category_count).
/// Categories nobody chose produce repeated cut points there; the likelihood
/// works on the collapsed set of observed categories instead, through
/// `likelihood_cuts` (unclipped, strictly increasing, one fewer than the
/// number of observed categories).
struct ThresholdSet {
    int category_count = 0;
    std::vector<double> cuts;
    std::vector<int> observed;
    std::vector<double> likelihood_cuts;

    int effective_count() const { return static_cast<int>(observed.size()); }
    /// Lower bound a_{c-1} of category c (1-based), -4 for the first category.
    double lower(int category) const;
    /// Upper bound a_c of category c (1-based), +4 for the last category.
    double upper(int category) const;
    /// 0-based position of `category` among the observed ones, -1 if unobserved.
    int collapsed_index(int category) const;
};

/// Throws InputError on an empty column, codes outside 1..max_categories or
/// a single observed category.
ThresholdSet estimate_thresholds(std::span<const int> column, int max_categories);

/// Cross-classification of two ordinal variables over their observed
/// categories. Zero cells hold `epsilon`; nonzero cells keep their counts.
struct ContingencyTable {
    Eigen::MatrixXd counts;
    double epsilon = 0.5;
};

ContingencyTable make_contingency_table(std::span<const int> column_h, const ThresholdSet& th_h,
                                        std::span<const int> column_k, const ThresholdSet& th_k,
                                        double epsilon = 0.5);

/// Cell probabilities pi_ij under correlation rho, outer boundaries at +-inf.
Eigen::MatrixXd cell_probabilities(const ThresholdSet& th_h, const ThresholdSet& th_k,
                                   double rho);

/// sum n_ij ln pi_ij; probabilities are floored at 1e-300.
double polychoric_loglik(const ContingencyTable& table, const ThresholdSet& th_h,
                         const ThresholdSet& th_k, double rho);

struct PolychoricEstimate {
    double rho = 0.0;
    double loglik = 0.0;
    int iterations = 0;
};

class PolychoricConvergenceError : public ConvergenceError {
public:
    PolychoricConvergenceError(const std::string& what, double best_rho)
        : ConvergenceError(what), best_rho_(best_rho) {}
    double best_rho() const { return best_rho_; }

private:
    double best_rho_;
};

/// Maximum likelihood correlation conditional on the marginal thresholds.
/// A coarse scan locates the basin, Brent's method refines it to 1e-6.
PolychoricEstimate polychoric_pair(const ContingencyTable& table, const ThresholdSet& th_h,
                                   const ThresholdSet& th_k);

enum class CorrelationKind { pearson, polychoric };
enum class PdStatus { positive_definite, repaired, failed };

const char* to_string(CorrelationKind kind);
const char* to_string(PdStatus status);

struct CorrelationMatrix {
    Eigen::MatrixXd values;
    CorrelationKind kind = CorrelationKind::pearson;
    PdStatus pd_status = PdStatus::positive_definite;
};

double min_eigenvalue(const Eigen::MatrixXd& m);

/// Sample Pearson correlations; throws InputError on a constant column.
CorrelationMatrix pearson_matrix(const DataMatrix& data);

struct PolychoricOptions {
    double epsilon = 0.5;
    bool repair_pd = false;
    unsigned threads = 1;
    /// Common category count I for every column; 0 uses each column's
    /// largest observed code.
    int categories = 0;
};

struct PolychoricResult {
    CorrelationMatrix matrix;
    std::vector<ThresholdSet> thresholds;
};

/// Pairwise polychoric matrix. Pair failures are rethrown naming the pair.
/// A matrix that is not positive definite is repaired when requested,
/// otherwise returned with pd_status = failed.
PolychoricResult polychoric_matrix(const DataMatrix& data, const PolychoricOptions& options = {});

/// Nearest correlation matrix in Frobenius norm (Higham's alternating
/// projections with Dykstra's correction), finished by eigenvalue clipping at
/// 1e-8 and unit-diagonal rescaling. Already positive definite inputs are
/// returned untouched.
CorrelationMatrix nearest_pd_repair(const CorrelationMatrix& matrix);

} // namespace opls
