#include "opls/simulate.hpp"

#include "opls/csv.hpp"
#include "opls/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace opls {

namespace {

constexpr std::array<const char*, 6> kLatents{"xi1", "xi2", "xi3", "eta1", "eta2", "eta3"};

std::string indicator_name(std::size_t latent, std::size_t h) {
    const char prefix = latent < 3 ? 'x' : 'y';
    return std::string(1, prefix) + std::to_string(latent % 3 + 1) + std::to_string(h + 1);
}

std::string fmt(double v) { return csv::format_double(v); }

} // namespace

const char* to_string(LatentLaw law) { return law == LatentLaw::normal ? "normal" : "beta"; }

LatentLaw parse_latent_law(const std::string& text) {
    if (text == "normal") {
        return LatentLaw::normal;
    }
    if (text == "beta") {
        return LatentLaw::beta;
    }
    throw InputError("unknown latent law '" + text + "' (expected normal or beta)");
}

ErrorVariances error_variances(const SimulationConfig& c) {
    ErrorVariances v{};
    v.zeta[0] = 1.0 - c.gamma11 * c.gamma11;
    v.zeta[1] = 1.0 - c.beta21 * c.beta21 - c.gamma22 * c.gamma22 - c.gamma23 * c.gamma23;
    v.zeta[2] = 1.0 - c.beta32 * c.beta32;
    for (std::size_t h = 0; h < 3; ++h) {
        v.epsilon[h] = 1.0 - c.loadings[h] * c.loadings[h];
    }
    return v;
}

void validate(const SimulationConfig& c) {
    if (c.npoints < 2) {
        throw InputError("simulate: npoints must be at least 2");
    }
    if (c.replications < 1) {
        throw InputError("simulate: at least one replication is required");
    }
    if (c.sample_size < 3) {
        throw InputError("simulate: sample size must be at least 3");
    }
    const auto v = error_variances(c);
    for (double z : v.zeta) {
        if (z < 0.0) {
            throw InputError("simulate: inner parameters imply a negative error variance");
        }
    }
    for (double e : v.epsilon) {
        if (e < 0.0) {
            throw InputError("simulate: loadings above 1 imply a negative error variance");
        }
    }
}

PathModel simulation_model() {
    ModelSpec spec;
    spec.name = "simulation";
    for (std::size_t j = 0; j < kLatents.size(); ++j) {
        spec.latents.push_back({kLatents[j], j < 3 ? LatentKind::exogenous : LatentKind::endogenous});
        std::vector<std::string> block;
        for (std::size_t h = 0; h < 3; ++h) {
            block.push_back(indicator_name(j, h));
        }
        spec.blocks.emplace_back(kLatents[j], std::move(block));
    }
    spec.paths = {{"xi1", "eta1"}, {"eta1", "eta2"}, {"xi2", "eta2"}, {"xi3", "eta2"}, {"eta2", "eta3"}};
    return build_model(spec);
}

const std::vector<std::string>& inner_parameter_names() {
    static const std::vector<std::string> names{"gamma11", "gamma22", "gamma23", "beta21", "beta32"};
    return names;
}

std::vector<double> true_inner_parameters(const SimulationConfig& c) {
    return {c.gamma11, c.gamma22, c.gamma23, c.beta21, c.beta32};
}

std::vector<int> rescale_to_points(const Eigen::VectorXd& column, int npoints) {
    const double lo = column.minCoeff();
    const double hi = column.maxCoeff();
    if (!(hi > lo)) {
        throw NumericalError("simulate: constant indicator cannot be rescaled");
    }
    std::vector<int> out(static_cast<std::size_t>(column.size()));
    for (Eigen::Index i = 0; i < column.size(); ++i) {
        const double scaled = (column(i) - lo) / (hi - lo + 0.01) * npoints + 0.5;
        out[static_cast<std::size_t>(i)] = static_cast<int>(std::round(scaled));
    }
    return out;
}

SimulatedData generate_dataset(const SimulationConfig& c, RngState& rng) {
    validate(c);
    const auto n = static_cast<std::size_t>(c.sample_size);
    const auto ni = static_cast<Eigen::Index>(n);
    const auto var = error_variances(c);

    auto normal_column = [&](double variance) {
        const auto draws = sample_standard_normal(rng, n);
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(draws.data(), ni) * std::sqrt(variance));
    };

    SimulatedData out;
    out.latents.resize(ni, 6);
    for (Eigen::Index i = 0; i < 3; ++i) {
        if (c.law == LatentLaw::normal) {
            out.latents.col(i) = normal_column(1.0);
        } else {
            const auto draws = sample_standardized_beta(c.beta_laws[static_cast<std::size_t>(i)], rng, n);
            out.latents.col(i) = Eigen::Map<const Eigen::VectorXd>(draws.data(), ni);
        }
    }
    const Eigen::VectorXd z1 = normal_column(var.zeta[0]);
    const Eigen::VectorXd z2 = normal_column(var.zeta[1]);
    const Eigen::VectorXd z3 = normal_column(var.zeta[2]);
    out.latents.col(3) = c.gamma11 * out.latents.col(0) + z1;
    out.latents.col(4) = c.beta21 * out.latents.col(3) + c.gamma22 * out.latents.col(1) +
                         c.gamma23 * out.latents.col(2) + z2;
    out.latents.col(5) = c.beta32 * out.latents.col(4) + z3;

    out.continuous.resize(ni, 18);
    Eigen::MatrixXd codes(ni, 18);
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < 6; ++j) {
        for (Eigen::Index h = 0; h < 3; ++h) {
            const Eigen::Index col = 3 * j + h;
            const auto hh = static_cast<std::size_t>(h);
            out.continuous.col(col) =
                c.loadings[hh] * out.latents.col(j) + normal_column(var.epsilon[hh]);
            const auto points = rescale_to_points(out.continuous.col(col), c.npoints);
            for (Eigen::Index r = 0; r < ni; ++r) {
                codes(r, col) = points[static_cast<std::size_t>(r)];
            }
            names.push_back(indicator_name(static_cast<std::size_t>(j), hh));
        }
    }
    out.data = make_data(std::move(codes), std::move(names),
                         std::vector<ColumnKind>(18, ColumnKind::ordinal));
    return out;
}

double sample_quantile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw InputError("sample_quantile: empty sample");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

DistributionSummary summarize(const std::vector<double>& values) {
    if (values.empty()) {
        throw InputError("summarize: empty sample");
    }
    DistributionSummary s;
    s.count = values.size();
    for (std::size_t i = 0; i < kPercentagePoints.size(); ++i) {
        s.percentiles[i] = sample_quantile(values, kPercentagePoints[i]);
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.sd = std::sqrt(ss / (static_cast<double>(values.size()) - 1.0));
    } else {
        s.sd = std::numeric_limits<double>::quiet_NaN();
    }
    return s;
}

RatioSummary bias_ratio_summary(const std::vector<double>& biases_pls,
                                const std::vector<double>& biases_opls) {
    if (biases_pls.size() != biases_opls.size()) {
        throw InputError("bias_ratio_summary: bias vectors differ in length");
    }
    if (biases_pls.empty()) {
        throw InputError("bias_ratio_summary: no biases");
    }
    RatioSummary out;
    std::vector<double> ratios;
    double log_sum = 0.0;
    for (std::size_t t = 0; t < biases_pls.size(); ++t) {
        if (biases_pls[t] == 0.0 || biases_opls[t] == 0.0) {
            ++out.excluded_zero;
            continue;
        }
        const double r = std::abs(biases_opls[t]) / std::abs(biases_pls[t]);
        ratios.push_back(r);
        log_sum += std::log(r);
    }
    if (ratios.empty()) {
        throw InputError("bias_ratio_summary: every pair has a zero bias");
    }
    out.used = ratios.size();
    for (std::size_t i = 0; i < kPercentagePoints.size(); ++i) {
        out.percentiles[i] = sample_quantile(ratios, kPercentagePoints[i]);
    }
    out.geometric_mean = std::exp(log_sum / static_cast<double>(ratios.size()));
    return out;
}

ReplicationResult run_replication(const SimulationConfig& config, std::uint64_t index) {
    static const PathModel model = simulation_model();
    ReplicationResult out;
    auto rng = RngState::substream(config.seed, index);
    SimulatedData sim;
    try {
        sim = generate_dataset(config, rng);
    } catch (const std::runtime_error& e) {
        out.failure = std::string("data: ") + e.what();
        return out;
    }

    auto collect = [&](FitMode mode, std::vector<double>& inner, Eigen::VectorXd& loadings,
                       Eigen::VectorXd& weights) {
        PolychoricOptions poly;
        poly.epsilon = config.epsilon;
        poly.categories = config.npoints;
        const auto fit = fit_model(sim.data, model, mode, config.fit, poly);
        for (const auto& eq : fit.result.inner) {
            for (Eigen::Index a = 0; a < eq.coefficients.size(); ++a) {
                inner.push_back(eq.coefficients(a));
            }
        }
        loadings = fit.result.loadings;
        weights = fit.result.weights.raw.rowwise().sum();
    };
    try {
        collect(FitMode::pls, out.pls_inner, out.pls_loadings, out.pls_weights);
    } catch (const std::runtime_error& e) {
        out.failure = std::string("pls: ") + e.what();
        return out;
    }
    try {
        collect(FitMode::opls, out.opls_inner, out.opls_loadings, out.opls_weights);
    } catch (const std::runtime_error& e) {
        out.failure = std::string("opls: ") + e.what();
        return out;
    }
    out.ok = true;
    return out;
}

BiasReport run_study(const SimulationConfig& config) {
    validate(config);
    const auto reps = static_cast<std::size_t>(config.replications);
    std::vector<ReplicationResult> results(reps);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < reps; i = next.fetch_add(1)) {
            results[i] = run_replication(config, i);
        }
    };
    {
        const unsigned workers = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(reps)));
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < workers; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }

    BiasReport report;
    report.config = config;
    const auto truth = true_inner_parameters(config);
    const auto& names = inner_parameter_names();
    std::vector<std::vector<double>> pls_bias(truth.size());
    std::vector<std::vector<double>> opls_bias(truth.size());

    const PathModel model = simulation_model();
    const auto k = static_cast<Eigen::Index>(model.indicator_count());
    std::vector<std::vector<double>> outer(4 * static_cast<std::size_t>(k));

    for (std::size_t i = 0; i < reps; ++i) {
        const auto& r = results[i];
        if (!r.ok) {
            if (r.failure.rfind("opls", 0) == 0) {
                ++report.opls_failures;
            } else {
                ++report.pls_failures;
            }
            report.failure_messages.push_back("replication " + std::to_string(i) + ": " + r.failure);
            continue;
        }
        ++report.completed;
        for (std::size_t p = 0; p < truth.size(); ++p) {
            pls_bias[p].push_back(r.pls_inner[p] - truth[p]);
            opls_bias[p].push_back(r.opls_inner[p] - truth[p]);
        }
        for (Eigen::Index h = 0; h < k; ++h) {
            const double lambda = config.loadings[static_cast<std::size_t>(h % 3)];
            const auto hh = static_cast<std::size_t>(h);
            const auto kk = static_cast<std::size_t>(k);
            outer[hh].push_back(r.pls_loadings(h) - lambda);
            outer[kk + hh].push_back(r.opls_loadings(h) - lambda);
            outer[2 * kk + hh].push_back(r.pls_weights(h));
            outer[3 * kk + hh].push_back(r.opls_weights(h));
        }
    }
    if (report.completed == 0) {
        throw NumericalError("simulate: every replication failed; first failure: " +
                             report.failure_messages.front());
    }

    for (std::size_t p = 0; p < truth.size(); ++p) {
        ParameterReport pr;
        pr.name = names[p];
        pr.true_value = truth[p];
        pr.pls = summarize(pls_bias[p]);
        pr.opls = summarize(opls_bias[p]);
        pr.ratio = bias_ratio_summary(pls_bias[p], opls_bias[p]);
        report.parameters.push_back(std::move(pr));
    }

    const std::array<std::pair<const char*, const char*>, 4> groups{
        std::pair{"pls", "loading_bias"}, std::pair{"opls", "loading_bias"},
        std::pair{"pls", "weight"}, std::pair{"opls", "weight"}};
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (Eigen::Index h = 0; h < k; ++h) {
            const auto& v = outer[g * static_cast<std::size_t>(k) + static_cast<std::size_t>(h)];
            QuartileRow row;
            row.method = groups[g].first;
            row.statistic = groups[g].second;
            row.indicator = model.indicator_names()[static_cast<std::size_t>(h)];
            row.min = *std::min_element(v.begin(), v.end());
            row.q1 = sample_quantile(v, 0.25);
            row.median = sample_quantile(v, 0.5);
            row.q3 = sample_quantile(v, 0.75);
            row.max = *std::max_element(v.begin(), v.end());
            report.outer.push_back(std::move(row));
        }
    }
    return report;
}

std::string bias_table_csv(const BiasReport& report) {
    csv::Writer w({"section", "parameter", "true_value", "p5", "p10", "p25", "p50", "p75", "p90",
                   "p95", "mean", "sd", "geometric_mean", "n_used", "n_excluded"});
    auto add = [&](const char* section, const ParameterReport& p, const std::array<double, 7>& pct,
                   double mean, double sd, double gmean, std::size_t used, std::size_t excluded) {
        std::vector<std::string> row{section, p.name, fmt(p.true_value)};
        for (double v : pct) {
            row.push_back(fmt(v));
        }
        row.push_back(fmt(mean));
        row.push_back(fmt(sd));
        row.push_back(fmt(gmean));
        row.push_back(std::to_string(used));
        row.push_back(std::to_string(excluded));
        w.add_row(std::move(row));
    };
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto failures = static_cast<std::size_t>(report.pls_failures + report.opls_failures);
    for (const auto& p : report.parameters) {
        add("pls", p, p.pls.percentiles, p.pls.mean, p.pls.sd, nan, p.pls.count, failures);
    }
    for (const auto& p : report.parameters) {
        add("opls", p, p.opls.percentiles, p.opls.mean, p.opls.sd, nan, p.opls.count, failures);
    }
    for (const auto& p : report.parameters) {
        add("ratio", p, p.ratio.percentiles, nan, nan, p.ratio.geometric_mean, p.ratio.used,
            failures + p.ratio.excluded_zero);
    }
    return w.str();
}

std::string outer_quartiles_csv(const BiasReport& report) {
    csv::Writer w({"method", "statistic", "indicator", "min", "q1", "median", "q3", "max"});
    for (const auto& r : report.outer) {
        w.add_row({r.method, r.statistic, r.indicator, fmt(r.min), fmt(r.q1), fmt(r.median),
                   fmt(r.q3), fmt(r.max)});
    }
    return w.str();
}

std::string study_metadata_csv(const BiasReport& report) {
    const auto& c = report.config;
    csv::Writer w({"key", "value"});
    w.add_row({"law", to_string(c.law)});
    w.add_row({"npoints", std::to_string(c.npoints)});
    w.add_row({"replications", std::to_string(c.replications)});
    w.add_row({"sample_size", std::to_string(c.sample_size)});
    w.add_row({"seed", std::to_string(c.seed)});
    w.add_row({"rng", "mt19937_64 substreams (splitmix64 of seed and replication index)"});
    w.add_row({"tol", fmt(c.fit.tol)});
    w.add_row({"max_iter", std::to_string(c.fit.max_iter)});
    w.add_row({"epsilon", fmt(c.epsilon)});
    w.add_row({"completed", std::to_string(report.completed)});
    w.add_row({"pls_failures", std::to_string(report.pls_failures)});
    w.add_row({"opls_failures", std::to_string(report.opls_failures)});
    return w.str();
}

} // namespace opls
