#pragma once

#include "opls/model.hpp"
#include "opls/polychoric.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace opls {

/// Composite scores of interval data: indicators centered and scaled to unit
/// sample variance, then multiplied by the standardizing weights.
Eigen::MatrixXd direct_scores(const DataMatrix& data, const Eigen::MatrixXd& sw);

/// Category cut points of each latent on its own standard normal scale,
/// a_i = sum_h SW_jh a_{h,i}, with fixed outer boundaries +-4.
///
/// For set membership the first and last sets are open towards -inf and +inf
/// respectively: subject intervals built from clipped indicator thresholds
/// can reach -4 * sum SW, which lies outside [-4, 4] whenever the weights sum
/// to more than one.
struct LatentThresholds {
    std::vector<int> categories;           // common I per latent
    std::vector<std::vector<double>> cuts; // I-1 interior values per latent

    /// Stored boundary a_{i-1} and a_i of set A_i (1-based), +-4 at the ends.
    double lower(std::size_t latent, int category) const;
    double upper(std::size_t latent, int category) const;
    /// Category whose set (a_{i-1}, a_i] contains x, with the outer sets unbounded.
    int containing(std::size_t latent, double x) const;
};

/// Throws InputError when the indicators of a block disagree on the number
/// of categories.
LatentThresholds latent_thresholds(const std::vector<ThresholdSet>& thresholds,
                                   const Eigen::MatrixXd& sw, const PathModel& model);

/// C_js = (alpha, beta]: weighted sums of the lower and upper thresholds of
/// the categories subject s chose in block j. `swapped` is set when negative
/// weights reversed the endpoints and they were exchanged.
struct SubjectInterval {
    double alpha = 0.0;
    double beta = 0.0;
    bool swapped = false;
};

SubjectInterval subject_interval(const DataMatrix& data, std::size_t row, std::size_t latent,
                                 const std::vector<ThresholdSet>& thresholds,
                                 const Eigen::MatrixXd& sw, const PathModel& model);

/// P(a < Z <= b) for standard normal Z, evaluated in the thinner tail.
double normal_interval_probability(double a, double b);

/// Median of a standard normal truncated to (a, b].
double truncated_normal_median(double a, double b);

/// (phi(a) - phi(b)) / (Phi(b) - Phi(a)). Throws NumericalError when the
/// interval carries less than 1e-300 probability.
double truncated_normal_mean(double a, double b);

enum class ScoreRule { mode, median, mean };

const char* to_string(ScoreRule rule);
ScoreRule parse_score_rule(const std::string& text);

/// Category for one subject interval. Mode picks the set with the largest
/// overlap probability (ties go to the lower category); median and mean pick
/// the set containing the corresponding truncated-normal statistic.
int assign_category(const SubjectInterval& interval, const LatentThresholds& lt,
                    std::size_t latent, ScoreRule rule);

struct CategoryPrediction {
    Eigen::MatrixXi categories; // N x (n+m), values in 1..I
    int swapped_intervals = 0;
};

CategoryPrediction predict_categories(const DataMatrix& data, const LatentThresholds& lt,
                                      const std::vector<ThresholdSet>& thresholds,
                                      const Eigen::MatrixXd& sw, const PathModel& model,
                                      ScoreRule rule);

/// Interval-scale PLS scores brought back to the category scale: raw weights
/// (summing to one in each block) applied to the category codes, rounded and
/// clamped to 1..I.
Eigen::MatrixXi rounded_pls_scores(const DataMatrix& data, const Eigen::MatrixXd& raw_weights,
                                   const LatentThresholds& lt);

struct Concordance {
    double exact = 0.0;      // percent of subjects with equal categories
    double within_one = 0.0; // percent with |difference| <= 1
};

/// Per latent (column) concordance between two category matrices.
std::vector<Concordance> concordance(const Eigen::MatrixXi& a, const Eigen::MatrixXi& b);

} // namespace opls
