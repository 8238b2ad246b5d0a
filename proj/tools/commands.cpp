#include "commands.hpp"

#include "manifest.hpp"

#include "opls/csv.hpp"
#include "opls/error.hpp"
#include "opls/estimation.hpp"
#include "opls/model.hpp"
#include "opls/pls.hpp"
#include "opls/polychoric.hpp"
#include "opls/scores.hpp"
#include "opls/simulate.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <limits>
#include <map>

#ifndef OPLS_VERSION
#define OPLS_VERSION "0.0.0"
#endif

namespace opls::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) { return csv::format_double(v); }

struct GlobalOptions {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out = ".";
};

struct FitFlags {
    double tol = 1e-7;
    int max_iter = 300;
    double epsilon = 0.5;
    bool repair_pd = false;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
    cmd->add_option("--tol", f.tol, "Convergence tolerance on the weight change")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-iter", f.max_iter, "Maximum number of iterations")->check(CLI::PositiveNumber);
    cmd->add_option("--epsilon", f.epsilon, "Value substituted for empty contingency cells")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--repair-pd", f.repair_pd, "Repair a non positive definite polychoric matrix");
}

/// Collects output files so that the manifest can list their checksums.
class OutputSet {
public:
    OutputSet(const GlobalOptions& g, std::string command, const std::vector<std::string>& args)
        : dir_(g.out) {
        manifest_.command = std::move(command);
        manifest_.arguments = args;
        manifest_.tool_version = OPLS_VERSION;
        manifest_.seed = g.seed;
        manifest_.threads = g.threads;
        manifest_.started_at = utc_timestamp();
    }

    void input(const std::string& path) { manifest_.inputs.emplace_back(path, file_sha256(path)); }
    void setting(const std::string& key, const std::string& value) {
        manifest_.settings.emplace_back(key, value);
    }

    void write(const std::string& name, const std::string& content) {
        if (!created_) {
            std::error_code ec;
            fs::create_directories(dir_, ec);
            if (ec) {
                throw InputError("cannot create output directory '" + dir_.string() + "': " + ec.message());
            }
            created_ = true;
        }
        csv::write_file(dir_ / name, content);
        manifest_.outputs.emplace_back(name, sha256_hex(content));
    }

    std::size_t finish() {
        manifest_.finished_at = utc_timestamp();
        const std::size_t files = manifest_.outputs.size();
        write("manifest.json", to_json(manifest_));
        return files;
    }

    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    RunManifest manifest_;
    bool created_ = false;
};

FitMode parse_mode(const std::string& text) {
    if (text == "pls") {
        return FitMode::pls;
    }
    if (text == "opls") {
        return FitMode::opls;
    }
    throw InputError("unknown mode '" + text + "' (expected pls or opls)");
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names) {
    std::vector<std::string> header{"name"};
    header.insert(header.end(), names.begin(), names.end());
    csv::Writer w(header);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<std::string> row{names[static_cast<std::size_t>(r)]};
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(fmt(m(r, c)));
        }
        w.add_row(std::move(row));
    }
    return w.str();
}

std::string thresholds_csv(const std::vector<ThresholdSet>& th, const std::vector<std::string>& names) {
    csv::Writer w({"variable", "index", "threshold", "category_count", "observed_categories"});
    for (std::size_t k = 0; k < th.size(); ++k) {
        for (std::size_t i = 0; i < th[k].cuts.size(); ++i) {
            w.add_row({names[k], std::to_string(i + 1), fmt(th[k].cuts[i]),
                       std::to_string(th[k].category_count), std::to_string(th[k].effective_count())});
        }
    }
    return w.str();
}

/// Every column of the CSV as an ordinal variable, in file order.
DataMatrix read_ordinal_csv(const std::string& path) {
    const auto table = csv::parse(csv::read_file(path));
    if (table.header.empty()) {
        throw InputError("'" + path + "': no header row");
    }
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    const auto k = static_cast<Eigen::Index>(table.header.size());
    if (n < 3) {
        throw InputError("'" + path + "': at least 3 observations are required");
    }
    Eigen::MatrixXd values(n, k);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) {
            const auto& cell = table.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            double v = 0.0;
            if (!csv::parse_double(cell, v)) {
                throw InputError("'" + path + "' line " +
                                 std::to_string(table.lines[static_cast<std::size_t>(r)]) + ", column '" +
                                 table.header[static_cast<std::size_t>(c)] + "': invalid value '" + cell +
                                 "'");
            }
            values(r, c) = v;
        }
    }
    return make_data(std::move(values), table.header,
                     std::vector<ColumnKind>(table.header.size(), ColumnKind::ordinal));
}

int max_code(const DataMatrix& data) { return static_cast<int>(std::lround(data.values.maxCoeff())); }

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string model;
    std::string data;
    std::string mode = "pls";
    std::string engine = "matrix";
    int bootstrap = 0;
    FitFlags flags;
};

int cmd_fit(const FitArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
            std::ostream& out, std::ostream& err) {
    const FitMode mode = parse_mode(a.mode);
    if (a.engine != "matrix" && a.engine != "score") {
        throw InputError("unknown engine '" + a.engine + "' (expected matrix or score)");
    }
    if (a.engine == "score" && mode == FitMode::opls) {
        throw InputError("the score engine works on interval data; use --mode pls");
    }
    const PathModel model = read_model_file(a.model);
    const DataMatrix data =
        read_data_file(a.data, model, mode == FitMode::opls ? KindHint::ordinal : KindHint::infer);

    OutputSet outputs(g, "fit", argv);
    outputs.input(a.model);
    outputs.input(a.data);
    outputs.setting("mode", to_string(mode));
    outputs.setting("engine", a.engine);
    outputs.setting("tol", fmt(a.flags.tol));
    outputs.setting("max_iter", std::to_string(a.flags.max_iter));
    outputs.setting("epsilon", fmt(a.flags.epsilon));
    outputs.setting("repair_pd", a.flags.repair_pd ? "true" : "false");
    outputs.setting("bootstrap", std::to_string(a.bootstrap));

    const FitOptions options{a.flags.tol, a.flags.max_iter};
    PolychoricOptions poly;
    poly.epsilon = a.flags.epsilon;
    poly.repair_pd = a.flags.repair_pd;
    poly.threads = g.threads;

    FitResult result;
    CorrelationMatrix sigma;
    if (a.engine == "score") {
        const ScoreFit sf = score_based_pls_fit(data, model, options);
        sigma = pearson_matrix(data);
        MatrixFit mf;
        mf.weights = sf.weights;
        mf.trace = sf.trace;
        mf.latent_correlations = sf.weights.standardizing.transpose() * sigma.values * sf.weights.standardizing;
        result = estimate(sigma.values, model, mf, mode);
    } else {
        auto fit = fit_model(data, model, mode, options, poly);
        result = std::move(fit.result);
        sigma = std::move(fit.sigma);
        if (mode == FitMode::opls) {
            outputs.write("thresholds.csv", thresholds_csv(fit.thresholds, model.indicator_names()));
        }
    }
    outputs.setting("correlation_pd_status", to_string(sigma.pd_status));

    BootstrapSummary boot;
    if (a.bootstrap > 0) {
        boot = bootstrap_inner(data, model, mode, a.bootstrap, g.seed, options, poly);
    }

    const auto& latents = model.latent_names();
    {
        std::vector<std::string> header{"target", "covariate", "estimate"};
        if (a.bootstrap > 0) {
            header.insert(header.end(), {"bootstrap_se", "bootstrap_p"});
        }
        csv::Writer w(header);
        std::size_t idx = 0;
        for (const auto& eq : result.inner) {
            for (std::size_t c = 0; c < eq.covariates.size(); ++c, ++idx) {
                std::vector<std::string> row{latents[eq.target], latents[eq.covariates[c]],
                                             fmt(eq.coefficients(static_cast<Eigen::Index>(c)))};
                if (a.bootstrap > 0) {
                    row.push_back(fmt(boot.standard_errors[idx]));
                    row.push_back(fmt(boot.p_values[idx]));
                }
                w.add_row(std::move(row));
            }
        }
        outputs.write("inner_coefficients.csv", w.str());
    }
    {
        csv::Writer w({"target", "r_squared", "residual_variance"});
        for (const auto& eq : result.inner) {
            w.add_row({latents[eq.target], fmt(eq.r_squared), fmt(eq.residual_variance)});
        }
        outputs.write("inner_r_squared.csv", w.str());
    }
    {
        csv::Writer w({"latent", "indicator", "loading", "residual_variance", "weight",
                       "standardizing_weight"});
        for (std::size_t h = 0; h < model.indicator_count(); ++h) {
            const auto r = static_cast<Eigen::Index>(h);
            const auto j = static_cast<Eigen::Index>(model.owner(h));
            w.add_row({latents[model.owner(h)], model.indicator_names()[h], fmt(result.loadings(r)),
                       fmt(result.outer_residual_variances(r)), fmt(result.weights.raw(r, j)),
                       fmt(result.weights.standardizing(r, j))});
        }
        outputs.write("outer_model.csv", w.str());
    }
    outputs.write("latent_correlations.csv", matrix_csv(result.latent_correlations, latents));
    {
        csv::Writer w({"latent", "indicators", "cronbach_alpha", "dillon_goldstein_rho"});
        for (std::size_t j = 0; j < latents.size(); ++j) {
            w.add_row({latents[j], std::to_string(model.block_size(j)), fmt(result.cronbach_alpha[j]),
                       fmt(result.dillon_goldstein[j])});
        }
        outputs.write("reliability.csv", w.str());
    }
    {
        csv::Writer w({"iteration", "delta"});
        for (std::size_t i = 0; i < result.trace.deltas.size(); ++i) {
            w.add_row({std::to_string(i + 1), fmt(result.trace.deltas[i])});
        }
        outputs.write("trace.csv", w.str());
    }
    if (a.bootstrap > 0 && boot.failures > 0) {
        err << "warning: " << boot.failures << " bootstrap replications failed and were excluded\n";
    }
    const std::size_t files = outputs.finish();
    out << "fit: mode " << to_string(mode) << ", converged after " << result.weights.iteration
        << " iterations; " << files << " tables written to " << outputs.dir().string() << "\n";
    return kSuccess;
}

// ---------------------------------------------------------------- polychoric

struct PolychoricArgs {
    std::string data;
    double epsilon = 0.5;
    bool repair_pd = false;
    int categories = 0;
};

int cmd_polychoric(const PolychoricArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
                   std::ostream& out) {
    const DataMatrix data = read_ordinal_csv(a.data);
    PolychoricOptions poly;
    poly.epsilon = a.epsilon;
    poly.repair_pd = a.repair_pd;
    poly.threads = g.threads;
    poly.categories = a.categories;
    const auto result = polychoric_matrix(data, poly);

    OutputSet outputs(g, "polychoric", argv);
    outputs.input(a.data);
    outputs.setting("epsilon", fmt(a.epsilon));
    outputs.setting("repair_pd", a.repair_pd ? "true" : "false");
    outputs.setting("categories", std::to_string(a.categories));
    outputs.setting("pd_status", to_string(result.matrix.pd_status));
    outputs.write("polychoric_matrix.csv", matrix_csv(result.matrix.values, data.names));
    outputs.write("thresholds.csv", thresholds_csv(result.thresholds, data.names));
    outputs.finish();
    out << "polychoric: " << data.cols() << " variables, pd_status " << to_string(result.matrix.pd_status)
        << ", minimum eigenvalue " << fmt(min_eigenvalue(result.matrix.values)) << "\n";
    return kSuccess;
}

// ---------------------------------------------------------------- predict-scores

struct PredictArgs {
    std::string model;
    std::string data;
    std::string rule = "all";
    int categories = 0;
    bool coherency = false;
    FitFlags flags;
};

int cmd_predict(const PredictArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
                std::ostream& out, std::ostream& err) {
    std::vector<ScoreRule> rules;
    if (a.rule == "all") {
        rules = {ScoreRule::mode, ScoreRule::median, ScoreRule::mean};
    } else {
        rules = {parse_score_rule(a.rule)};
    }
    const PathModel model = read_model_file(a.model);
    const DataMatrix data = read_data_file(a.data, model, KindHint::ordinal);
    const int categories = a.categories > 0 ? a.categories : max_code(data);

    PolychoricOptions poly;
    poly.epsilon = a.flags.epsilon;
    poly.repair_pd = a.flags.repair_pd;
    poly.threads = g.threads;
    poly.categories = categories;
    const FitOptions options{a.flags.tol, a.flags.max_iter};
    const auto fit = fit_model(data, model, FitMode::opls, options, poly);
    const Eigen::MatrixXd& sw = fit.result.weights.standardizing;
    const auto lt = latent_thresholds(fit.thresholds, sw, model);

    OutputSet outputs(g, "predict-scores", argv);
    outputs.input(a.model);
    outputs.input(a.data);
    outputs.setting("rule", a.rule);
    outputs.setting("categories", std::to_string(categories));
    outputs.setting("tol", fmt(a.flags.tol));
    outputs.setting("max_iter", std::to_string(a.flags.max_iter));
    outputs.setting("epsilon", fmt(a.flags.epsilon));
    outputs.setting("repair_pd", a.flags.repair_pd ? "true" : "false");

    {
        csv::Writer w({"latent", "index", "threshold"});
        for (std::size_t j = 0; j < model.latent_count(); ++j) {
            for (std::size_t i = 0; i < lt.cuts[j].size(); ++i) {
                w.add_row({model.latent_names()[j], std::to_string(i + 1), fmt(lt.cuts[j][i])});
            }
        }
        outputs.write("latent_thresholds.csv", w.str());
    }

    std::vector<std::string> header{"row"};
    header.insert(header.end(), model.latent_names().begin(), model.latent_names().end());
    std::map<ScoreRule, Eigen::MatrixXi> predicted;
    for (ScoreRule rule : rules) {
        const auto p = predict_categories(data, lt, fit.thresholds, sw, model, rule);
        if (p.swapped_intervals > 0) {
            err << "warning: " << p.swapped_intervals << " subject intervals under rule " << to_string(rule)
                << " had reversed endpoints (negative weights) and were swapped\n";
        }
        csv::Writer w(header);
        for (Eigen::Index s = 0; s < p.categories.rows(); ++s) {
            std::vector<std::string> row{std::to_string(s + 1)};
            for (Eigen::Index j = 0; j < p.categories.cols(); ++j) {
                row.push_back(std::to_string(p.categories(s, j)));
            }
            w.add_row(std::move(row));
        }
        outputs.write(std::string("predicted_") + to_string(rule) + ".csv", w.str());
        predicted.emplace(rule, p.categories);
    }

    if (a.coherency) {
        const auto pls = fit_model(data, model, FitMode::pls, options, poly);
        const Eigen::MatrixXi rounded = rounded_pls_scores(data, pls.result.weights.raw, lt);
        std::vector<std::string> ch{"measure", "rule"};
        ch.insert(ch.end(), model.latent_names().begin(), model.latent_names().end());
        csv::Writer w(ch);
        std::vector<std::pair<ScoreRule, std::vector<Concordance>>> rows;
        for (const auto& [rule, cats] : predicted) {
            rows.emplace_back(rule, concordance(rounded, cats));
        }
        for (const char* measure : {"exact", "within_one"}) {
            for (const auto& [rule, conc] : rows) {
                std::vector<std::string> row{measure, to_string(rule)};
                for (const auto& c : conc) {
                    row.push_back(fmt(std::string(measure) == "exact" ? c.exact : c.within_one));
                }
                w.add_row(std::move(row));
            }
        }
        outputs.write("coherency.csv", w.str());
    }
    const std::size_t files = outputs.finish();
    out << "predict-scores: " << data.rows() << " subjects, " << rules.size() << " rule(s); " << files
        << " tables written to " << outputs.dir().string() << "\n";
    return kSuccess;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string law = "normal";
    int npoints = 4;
    int reps = 100;
    int n = 250;
    double tol = 1e-7;
    int max_iter = 300;
    double epsilon = SimulationConfig{}.epsilon;
};

int cmd_simulate(const SimulateArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
                 std::ostream& out, std::ostream& err) {
    SimulationConfig config;
    config.law = parse_latent_law(a.law);
    config.npoints = a.npoints;
    config.replications = a.reps;
    config.sample_size = a.n;
    config.seed = g.seed;
    config.threads = g.threads;
    config.fit = FitOptions{a.tol, a.max_iter};
    config.epsilon = a.epsilon;
    const BiasReport report = run_study(config);

    OutputSet outputs(g, "simulate", argv);
    outputs.setting("law", to_string(config.law));
    outputs.setting("npoints", std::to_string(config.npoints));
    outputs.setting("replications", std::to_string(config.replications));
    outputs.setting("sample_size", std::to_string(config.sample_size));
    outputs.write("bias_table.csv", bias_table_csv(report));
    outputs.write("outer_quartiles.csv", outer_quartiles_csv(report));
    outputs.write("study_metadata.csv", study_metadata_csv(report));
    {
        csv::Writer w({"failure"});
        for (const auto& m : report.failure_messages) {
            w.add_row({m});
        }
        outputs.write("failures.csv", w.str());
    }
    const int failed = report.pls_failures + report.opls_failures;
    if (failed > 0) {
        err << "warning: " << failed << " replications failed and were excluded (see failures.csv)\n";
    }
    outputs.finish();
    out << "simulate: " << report.completed << " of " << config.replications << " replications completed ("
        << to_string(config.law) << ", " << config.npoints << " points, seed " << config.seed << ")\n";
    return kSuccess;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"PLS and ordinal PLS path modeling"};
    app.name(args.empty() ? "opls" : args.front());
    app.set_version_flag("--version", OPLS_VERSION);
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Seed for simulation and bootstrap streams")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--out", g.out, "Output directory")->capture_default_str();

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a path model with PLS or OPLS");
    fit_cmd->add_option("--model", fit.model, "Model description file")->required();
    fit_cmd->add_option("--data", fit.data, "CSV data file")->required();
    fit_cmd->add_option("--mode", fit.mode, "pls (Pearson) or opls (polychoric)")
        ->check(CLI::IsMember({"pls", "opls"}))
        ->capture_default_str();
    fit_cmd->add_option("--engine", fit.engine, "matrix, or score for the score-based iteration (pls only)")
        ->check(CLI::IsMember({"matrix", "score"}))
        ->capture_default_str();
    fit_cmd->add_option("--bootstrap", fit.bootstrap, "Bootstrap replications for inner coefficients")
        ->check(CLI::NonNegativeNumber);
    add_fit_flags(fit_cmd, fit.flags);

    PolychoricArgs poly;
    auto* poly_cmd = app.add_subcommand("polychoric", "Polychoric correlation matrix and thresholds");
    poly_cmd->add_option("--data", poly.data, "CSV of integer categories")->required();
    poly_cmd->add_option("--epsilon", poly.epsilon, "Value substituted for empty contingency cells")
        ->check(CLI::PositiveNumber);
    poly_cmd->add_flag("--repair-pd", poly.repair_pd, "Repair a non positive definite matrix");
    poly_cmd->add_option("--categories", poly.categories, "Common number of categories (default: per column)")
        ->check(CLI::NonNegativeNumber);

    PredictArgs pred;
    auto* pred_cmd = app.add_subcommand("predict-scores", "Predict ordinal latent scores after an OPLS fit");
    pred_cmd->add_option("--model", pred.model, "Model description file")->required();
    pred_cmd->add_option("--data", pred.data, "CSV of integer categories")->required();
    pred_cmd->add_option("--rule", pred.rule, "mode, median, mean or all")
        ->check(CLI::IsMember({"mode", "median", "mean", "all"}))
        ->capture_default_str();
    pred_cmd->add_option("--categories", pred.categories, "Common number of categories (default: largest code)")
        ->check(CLI::NonNegativeNumber);
    pred_cmd->add_flag("--coherency", pred.coherency, "Compare with rounded interval PLS scores");
    add_fit_flags(pred_cmd, pred.flags);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo bias study of PLS versus OPLS");
    sim_cmd->add_option("--law", sim.law, "Law of the exogenous latents: normal or beta")
        ->check(CLI::IsMember({"normal", "beta"}))
        ->capture_default_str();
    sim_cmd->add_option("--npoints", sim.npoints, "Number of scale points")
        ->check(CLI::Range(2, 100))
        ->capture_default_str();
    sim_cmd->add_option("--reps", sim.reps, "Replications")->check(CLI::PositiveNumber)->capture_default_str();
    sim_cmd->add_option("--n", sim.n, "Observations per replication")
        ->check(CLI::Range(3, 10000000))
        ->capture_default_str();
    sim_cmd->add_option("--tol", sim.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--max-iter", sim.max_iter, "Maximum iterations")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--epsilon", sim.epsilon, "Value substituted for empty contingency cells")
        ->check(CLI::PositiveNumber);

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& s : args) {
        argv.push_back(s.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kInputError;
    }

    try {
        if (*fit_cmd) {
            return cmd_fit(fit, g, args, out, err);
        }
        if (*poly_cmd) {
            return cmd_polychoric(poly, g, args, out);
        }
        if (*pred_cmd) {
            return cmd_predict(pred, g, args, out, err);
        }
        return cmd_simulate(sim, g, args, out, err);
    } catch (const ConvergenceError& e) {
        err << "error (non-convergence): " << e.what() << "\n";
        return kNumericalError;
    } catch (const NumericalError& e) {
        err << "error (numerical): " << e.what() << "\n";
        return kNumericalError;
    } catch (const InputError& e) {
        err << "error (input): " << e.what() << "\n";
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        err << "error (input): " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
}

} // namespace opls::cli
