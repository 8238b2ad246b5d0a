#include "opls/polychoric.hpp"

#include "opls/distributions.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include <boost/math/tools/minima.hpp>

namespace opls {

namespace {

constexpr double kMinCellProbability = 1e-300;
constexpr int kScanPoints = 21;
constexpr int kBrentBits = 24;
constexpr std::uintmax_t kBrentMaxIter = 200;

// Threshold vector with +-inf outer boundaries: size effective_count + 1.
std::vector<double> likelihood_boundaries(const ThresholdSet& th) {
    std::vector<double> b;
    b.reserve(th.likelihood_cuts.size() + 2);
    b.push_back(kNegInf);
    b.insert(b.end(), th.likelihood_cuts.begin(), th.likelihood_cuts.end());
    b.push_back(kPosInf);
    return b;
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m, double floor) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
    Eigen::MatrixXd out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd to_unit_diagonal(const Eigen::MatrixXd& m) {
    const Eigen::VectorXd inv_sd = m.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd out = inv_sd.asDiagonal() * m * inv_sd.asDiagonal();
    out.diagonal().setOnes();
    return 0.5 * (out + out.transpose());
}

} // namespace

double ThresholdSet::lower(int category) const {
    return category <= 1 ? -kThresholdClip : cuts[static_cast<std::size_t>(category - 2)];
}

double ThresholdSet::upper(int category) const {
    return category >= category_count ? kThresholdClip : cuts[static_cast<std::size_t>(category - 1)];
}

int ThresholdSet::collapsed_index(int category) const {
    const auto it = std::lower_bound(observed.begin(), observed.end(), category);
    if (it == observed.end() || *it != category) {
        return -1;
    }
    return static_cast<int>(it - observed.begin());
}

ThresholdSet estimate_thresholds(std::span<const int> column, int max_categories) {
    if (column.empty()) {
        throw InputError("estimate_thresholds: empty column");
    }
    if (max_categories < 1) {
        throw InputError("estimate_thresholds: max_categories must be positive");
    }
    std::vector<std::size_t> freq(static_cast<std::size_t>(max_categories), 0);
    for (int v : column) {
        if (v < 1 || v > max_categories) {
            throw InputError("estimate_thresholds: category " + std::to_string(v) +
                             " outside 1.." + std::to_string(max_categories));
        }
        ++freq[static_cast<std::size_t>(v - 1)];
    }

    ThresholdSet th;
    th.category_count = max_categories;
    for (int c = 1; c <= max_categories; ++c) {
        if (freq[static_cast<std::size_t>(c - 1)] > 0) {
            th.observed.push_back(c);
        }
    }
    if (th.observed.size() < 2) {
        throw InputError("estimate_thresholds: a single observed category, no threshold estimable");
    }

    const double n = static_cast<double>(column.size());
    std::size_t cumulative = 0;
    for (int c = 1; c < max_categories; ++c) {
        cumulative += freq[static_cast<std::size_t>(c - 1)];
        double cut = 0.0;
        if (cumulative == 0) {
            cut = -kThresholdClip;
        } else if (cumulative == column.size()) {
            cut = kThresholdClip;
        } else {
            const double q = std_normal_quantile(static_cast<double>(cumulative) / n);
            cut = std::clamp(q, -kThresholdClip, kThresholdClip);
            if (freq[static_cast<std::size_t>(c - 1)] > 0) {
                th.likelihood_cuts.push_back(q);
            }
        }
        th.cuts.push_back(cut);
    }
    return th;
}

ContingencyTable make_contingency_table(std::span<const int> column_h, const ThresholdSet& th_h,
                                        std::span<const int> column_k, const ThresholdSet& th_k,
                                        double epsilon) {
    if (column_h.size() != column_k.size()) {
        throw InputError("contingency table: columns differ in length");
    }
    ContingencyTable table;
    table.epsilon = epsilon;
    table.counts = Eigen::MatrixXd::Zero(th_h.effective_count(), th_k.effective_count());
    for (std::size_t s = 0; s < column_h.size(); ++s) {
        const int i = th_h.collapsed_index(column_h[s]);
        const int j = th_k.collapsed_index(column_k[s]);
        if (i < 0 || j < 0) {
            throw InputError("contingency table: category not covered by the thresholds");
        }
        table.counts(i, j) += 1.0;
    }
    table.counts = (table.counts.array() == 0.0).select(epsilon, table.counts);
    return table;
}

Eigen::MatrixXd cell_probabilities(const ThresholdSet& th_h, const ThresholdSet& th_k,
                                   double rho) {
    const auto a = likelihood_boundaries(th_h);
    const auto b = likelihood_boundaries(th_k);
    const auto rows = static_cast<Eigen::Index>(a.size());
    const auto cols = static_cast<Eigen::Index>(b.size());
    Eigen::MatrixXd cdf(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            cdf(i, j) = bvn_cdf(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)], rho);
        }
    }
    Eigen::MatrixXd pi(rows - 1, cols - 1);
    for (Eigen::Index i = 1; i < rows; ++i) {
        for (Eigen::Index j = 1; j < cols; ++j) {
            pi(i - 1, j - 1) = cdf(i, j) - cdf(i - 1, j) - cdf(i, j - 1) + cdf(i - 1, j - 1);
        }
    }
    return pi;
}

double polychoric_loglik(const ContingencyTable& table, const ThresholdSet& th_h,
                         const ThresholdSet& th_k, double rho) {
    const Eigen::MatrixXd pi = cell_probabilities(th_h, th_k, rho);
    if (pi.rows() != table.counts.rows() || pi.cols() != table.counts.cols()) {
        throw InputError("polychoric: table shape does not match the thresholds");
    }
    return (table.counts.array() * pi.array().max(kMinCellProbability).log()).sum();
}

PolychoricEstimate polychoric_pair(const ContingencyTable& table, const ThresholdSet& th_h,
                                   const ThresholdSet& th_k) {
    if (table.counts.rows() < 2 || table.counts.cols() < 2) {
        throw NumericalError("polychoric: degenerate table, all mass in one row or column");
    }
    auto negloglik = [&](double rho) { return -polychoric_loglik(table, th_h, th_k, rho); };

    const double step = 2.0 * kRhoClip / (kScanPoints - 1);
    int best = 0;
    double best_value = negloglik(-kRhoClip);
    for (int g = 1; g < kScanPoints; ++g) {
        const double v = negloglik(-kRhoClip + g * step);
        if (v < best_value) {
            best_value = v;
            best = g;
        }
    }
    const double lo = -kRhoClip + std::max(best - 1, 0) * step;
    const double hi = std::min(-kRhoClip + (best + 1) * step, kRhoClip);

    std::uintmax_t iters = kBrentMaxIter;
    const auto [rho, value] = boost::math::tools::brent_find_minima(negloglik, lo, hi, kBrentBits, iters);
    if (iters >= kBrentMaxIter) {
        const double best_rho = value < best_value ? rho : -kRhoClip + best * step;
        throw PolychoricConvergenceError("polychoric: Brent search did not converge after " +
                                             std::to_string(iters) + " iterations",
                                         best_rho);
    }
    PolychoricEstimate est;
    if (value <= best_value) {
        est.rho = rho;
        est.loglik = -value;
    } else {
        est.rho = -kRhoClip + best * step;
        est.loglik = -best_value;
    }
    est.iterations = static_cast<int>(iters);
    return est;
}

const char* to_string(CorrelationKind kind) {
    return kind == CorrelationKind::pearson ? "pearson" : "polychoric";
}

const char* to_string(PdStatus status) {
    switch (status) {
    case PdStatus::positive_definite:
        return "positive-definite";
    case PdStatus::repaired:
        return "repaired";
    case PdStatus::failed:
        return "failed";
    }
    return "unknown";
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

CorrelationMatrix pearson_matrix(const DataMatrix& data) {
    const auto n = static_cast<double>(data.rows());
    Eigen::MatrixXd z = data.values.rowwise() - data.values.colwise().mean();
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const double sd = std::sqrt(z.col(c).squaredNorm() / (n - 1.0));
        if (!(sd > 0.0)) {
            throw InputError("pearson: column '" + data.names[static_cast<std::size_t>(c)] +
                             "' has zero variance");
        }
        z.col(c) /= sd;
    }
    CorrelationMatrix out;
    out.kind = CorrelationKind::pearson;
    out.values = z.transpose() * z / (n - 1.0);
    out.values = 0.5 * (out.values + out.values.transpose());
    out.values.diagonal().setOnes();
    out.pd_status = min_eigenvalue(out.values) > 0.0 ? PdStatus::positive_definite : PdStatus::failed;
    return out;
}

PolychoricResult polychoric_matrix(const DataMatrix& data, const PolychoricOptions& options) {
    if (!data.all_ordinal()) {
        throw InputError("polychoric: all columns must be ordinal");
    }
    const std::size_t k = data.cols();
    PolychoricResult result;
    std::vector<std::vector<int>> columns(k);
    for (std::size_t c = 0; c < k; ++c) {
        columns[c] = data.ordinal_column(c);
        try {
            result.thresholds.push_back(estimate_thresholds(
                columns[c], options.categories > 0 ? options.categories : data.max_category(c)));
        } catch (const InputError& e) {
            throw InputError("polychoric: column '" + data.names[c] + "': " + e.what());
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t j = h + 1; j < k; ++j) {
            pairs.emplace_back(h, j);
        }
    }
    std::vector<double> estimates(pairs.size(), 0.0);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= pairs.size()) {
                return;
            }
            const auto [h, j] = pairs[idx];
            try {
                const auto table = make_contingency_table(columns[h], result.thresholds[h], columns[j],
                                                          result.thresholds[j], options.epsilon);
                estimates[idx] = polychoric_pair(table, result.thresholds[h], result.thresholds[j]).rho;
            } catch (const std::exception& e) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    const std::string msg = "polychoric pair (" + data.names[h] + ", " +
                                            data.names[j] + "): " + e.what();
                    if (dynamic_cast<const ConvergenceError*>(&e) != nullptr) {
                        failure = std::make_exception_ptr(ConvergenceError(msg));
                    } else {
                        failure = std::make_exception_ptr(NumericalError(msg));
                    }
                }
                next = pairs.size();
                return;
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(options.threads,
                                                             static_cast<unsigned>(pairs.size())));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    auto& m = result.matrix;
    m.kind = CorrelationKind::polychoric;
    const auto kk = static_cast<Eigen::Index>(k);
    m.values = Eigen::MatrixXd::Identity(kk, kk);
    for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
        const auto h = static_cast<Eigen::Index>(pairs[idx].first);
        const auto j = static_cast<Eigen::Index>(pairs[idx].second);
        m.values(h, j) = estimates[idx];
        m.values(j, h) = estimates[idx];
    }
    if (min_eigenvalue(m.values) > 0.0) {
        m.pd_status = PdStatus::positive_definite;
    } else if (options.repair_pd) {
        m = nearest_pd_repair(m);
    } else {
        m.pd_status = PdStatus::failed;
    }
    return result;
}

CorrelationMatrix nearest_pd_repair(const CorrelationMatrix& matrix) {
    constexpr double kMinEigen = 1e-8;
    const Eigen::MatrixXd a = 0.5 * (matrix.values + matrix.values.transpose());
    const bool unit_diagonal = (a.diagonal().array() == 1.0).all();
    if (unit_diagonal && min_eigenvalue(a) >= kMinEigen) {
        return matrix;
    }

    Eigen::MatrixXd y = a;
    Eigen::MatrixXd correction = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    for (int iter = 0; iter < 500; ++iter) {
        const Eigen::MatrixXd r = y - correction;
        const Eigen::MatrixXd x = project_psd(r, 0.0);
        correction = x - r;
        Eigen::MatrixXd next = x;
        next.diagonal().setOnes();
        const double change = (next - y).norm();
        y = std::move(next);
        if (change < 1e-12 * std::max(1.0, y.norm())) {
            break;
        }
    }

    // Alternating projections converge to a PSD boundary point; push the
    // spectrum strictly above the floor while keeping a unit diagonal.
    for (int iter = 0; iter < 100 && min_eigenvalue(y) < kMinEigen; ++iter) {
        y = to_unit_diagonal(project_psd(y, 2.0 * kMinEigen));
    }

    CorrelationMatrix out;
    out.values = y;
    out.kind = matrix.kind;
    out.pd_status = min_eigenvalue(y) >= kMinEigen ? PdStatus::repaired : PdStatus::failed;
    return out;
}

} // namespace opls
