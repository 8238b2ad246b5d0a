#include "opls/scores.hpp"

#include "opls/distributions.hpp"
#include "opls/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace opls {

Eigen::MatrixXd direct_scores(const DataMatrix& data, const Eigen::MatrixXd& sw) {
    if (static_cast<std::size_t>(sw.rows()) != data.cols()) {
        throw InputError("direct_scores: weight matrix does not match the data width");
    }
    const double dof = static_cast<double>(data.rows()) - 1.0;
    Eigen::MatrixXd x = data.values.rowwise() - data.values.colwise().mean();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double sd = std::sqrt(x.col(c).squaredNorm() / dof);
        if (!(sd > 0.0)) {
            throw InputError("direct_scores: indicator '" + data.names[static_cast<std::size_t>(c)] +
                             "' has zero variance");
        }
        x.col(c) /= sd;
    }
    return x * sw;
}

double LatentThresholds::lower(std::size_t latent, int category) const {
    return category <= 1 ? -kThresholdClip : cuts[latent][static_cast<std::size_t>(category - 2)];
}

double LatentThresholds::upper(std::size_t latent, int category) const {
    return category >= categories[latent] ? kThresholdClip
                                          : cuts[latent][static_cast<std::size_t>(category - 1)];
}

int LatentThresholds::containing(std::size_t latent, double x) const {
    const auto& c = cuts[latent];
    return static_cast<int>(std::lower_bound(c.begin(), c.end(), x) - c.begin()) + 1;
}

LatentThresholds latent_thresholds(const std::vector<ThresholdSet>& thresholds,
                                   const Eigen::MatrixXd& sw, const PathModel& model) {
    if (thresholds.size() != model.indicator_count() ||
        static_cast<std::size_t>(sw.rows()) != model.indicator_count()) {
        throw InputError("latent_thresholds: thresholds or weights do not match the model");
    }
    LatentThresholds lt;
    for (std::size_t j = 0; j < model.latent_count(); ++j) {
        const std::size_t off = model.block_offset(j);
        const int count = thresholds[off].category_count;
        for (std::size_t h = off; h < off + model.block_size(j); ++h) {
            if (thresholds[h].category_count != count) {
                throw InputError("latent_thresholds: block '" + model.latent_names()[j] +
                                 "' mixes indicators with " + std::to_string(count) + " and " +
                                 std::to_string(thresholds[h].category_count) + " categories");
            }
        }
        std::vector<double> cuts(static_cast<std::size_t>(count - 1), 0.0);
        for (std::size_t h = off; h < off + model.block_size(j); ++h) {
            const double w = sw(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(j));
            for (std::size_t i = 0; i < cuts.size(); ++i) {
                cuts[i] += w * thresholds[h].cuts[i];
            }
        }
        lt.categories.push_back(count);
        lt.cuts.push_back(std::move(cuts));
    }
    return lt;
}

SubjectInterval subject_interval(const DataMatrix& data, std::size_t row, std::size_t latent,
                                 const std::vector<ThresholdSet>& thresholds,
                                 const Eigen::MatrixXd& sw, const PathModel& model) {
    SubjectInterval out;
    const std::size_t off = model.block_offset(latent);
    for (std::size_t h = off; h < off + model.block_size(latent); ++h) {
        const auto r = static_cast<Eigen::Index>(row);
        const auto c = static_cast<Eigen::Index>(h);
        const int category = static_cast<int>(std::lround(data.values(r, c)));
        const double w = sw(c, static_cast<Eigen::Index>(latent));
        out.alpha += w * thresholds[h].lower(category);
        out.beta += w * thresholds[h].upper(category);
    }
    if (out.alpha > out.beta) {
        std::swap(out.alpha, out.beta);
        out.swapped = true;
    }
    return out;
}

double normal_interval_probability(double a, double b) {
    if (a > 0.0) {
        return std_normal_cdf(-a) - std_normal_cdf(-b);
    }
    return std_normal_cdf(b) - std_normal_cdf(a);
}

double truncated_normal_median(double a, double b) {
    if (a > 0.0) {
        return -std_normal_quantile(0.5 * (std_normal_cdf(-b) + std_normal_cdf(-a)));
    }
    return std_normal_quantile(0.5 * (std_normal_cdf(a) + std_normal_cdf(b)));
}

double truncated_normal_mean(double a, double b) {
    const double mass = normal_interval_probability(a, b);
    if (!(mass >= 1e-300)) {
        throw NumericalError("truncated_normal_mean: interval (" + std::to_string(a) + ", " +
                             std::to_string(b) + "] has negligible probability");
    }
    return (std_normal_pdf(a) - std_normal_pdf(b)) / mass;
}

const char* to_string(ScoreRule rule) {
    switch (rule) {
    case ScoreRule::mode:
        return "mode";
    case ScoreRule::median:
        return "median";
    case ScoreRule::mean:
        return "mean";
    }
    return "?";
}

ScoreRule parse_score_rule(const std::string& text) {
    if (text == "mode") {
        return ScoreRule::mode;
    }
    if (text == "median") {
        return ScoreRule::median;
    }
    if (text == "mean") {
        return ScoreRule::mean;
    }
    throw InputError("unknown score rule '" + text + "' (expected mode, median or mean)");
}

int assign_category(const SubjectInterval& interval, const LatentThresholds& lt,
                    std::size_t latent, ScoreRule rule) {
    const double a = interval.alpha;
    const double b = interval.beta;
    switch (rule) {
    case ScoreRule::median:
        return lt.containing(latent, truncated_normal_median(a, b));
    case ScoreRule::mean:
        return lt.containing(latent, truncated_normal_mean(a, b));
    case ScoreRule::mode:
        break;
    }
    if (!(b > a)) {
        return lt.containing(latent, a);
    }
    const int count = lt.categories[latent];
    int best = 0;
    double best_p = 0.0;
    for (int i = 1; i <= count; ++i) {
        const double lo = std::max(a, i == 1 ? kNegInf : lt.lower(latent, i));
        const double hi = std::min(b, i == count ? kPosInf : lt.upper(latent, i));
        const double p = hi > lo ? normal_interval_probability(lo, hi) : 0.0;
        // Equal masses up to rounding count as a tie, which the lower category wins.
        if (p > best_p * (1.0 + 1e-12)) {
            best_p = p;
            best = i;
        }
    }
    if (best == 0) {
        throw std::logic_error("assign_category: subject interval overlaps no category set");
    }
    return best;
}

CategoryPrediction predict_categories(const DataMatrix& data, const LatentThresholds& lt,
                                      const std::vector<ThresholdSet>& thresholds,
                                      const Eigen::MatrixXd& sw, const PathModel& model,
                                      ScoreRule rule) {
    if (!data.all_ordinal()) {
        throw InputError("predict_categories: all columns must be ordinal");
    }
    const auto n = static_cast<Eigen::Index>(data.rows());
    const auto latents = static_cast<Eigen::Index>(model.latent_count());
    CategoryPrediction out;
    out.categories.resize(n, latents);
    for (Eigen::Index s = 0; s < n; ++s) {
        for (Eigen::Index j = 0; j < latents; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            const auto interval =
                subject_interval(data, static_cast<std::size_t>(s), jj, thresholds, sw, model);
            out.swapped_intervals += interval.swapped ? 1 : 0;
            out.categories(s, j) = assign_category(interval, lt, jj, rule);
        }
    }
    return out;
}

Eigen::MatrixXi rounded_pls_scores(const DataMatrix& data, const Eigen::MatrixXd& raw_weights,
                                   const LatentThresholds& lt) {
    const Eigen::MatrixXd scores = data.values * raw_weights;
    Eigen::MatrixXi out(scores.rows(), scores.cols());
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
        const int top = lt.categories[static_cast<std::size_t>(j)];
        for (Eigen::Index s = 0; s < scores.rows(); ++s) {
            const long v = std::lround(scores(s, j));
            out(s, j) = static_cast<int>(std::clamp<long>(v, 1, top));
        }
    }
    return out;
}

std::vector<Concordance> concordance(const Eigen::MatrixXi& a, const Eigen::MatrixXi& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() == 0) {
        throw InputError("concordance: category matrices differ in shape or are empty");
    }
    std::vector<Concordance> out;
    const double n = static_cast<double>(a.rows());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const Eigen::ArrayXi diff = (a.col(j) - b.col(j)).array().abs();
        Concordance c;
        c.exact = 100.0 * static_cast<double>((diff == 0).count()) / n;
        c.within_one = 100.0 * static_cast<double>((diff <= 1).count()) / n;
        out.push_back(c);
    }
    return out;
}

} // namespace opls
