#include "opls/simulate.hpp"

#include "opls/error.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace opls;

TEST(Simulate, ErrorVariancesGiveUnitVariance) {
    const SimulationConfig c;
    const auto v = error_variances(c);
    EXPECT_NEAR(v.zeta[0], 0.19, 1e-15);
    EXPECT_NEAR(v.zeta[1], 0.14, 1e-15);
    EXPECT_NEAR(v.zeta[2], 0.64, 1e-15);
    EXPECT_NEAR(v.epsilon[0], 0.36, 1e-15);
    EXPECT_NEAR(v.epsilon[1], 0.19, 1e-15);
    EXPECT_NEAR(v.epsilon[2], 0.0975, 1e-15);
}

TEST(Simulate, ValidateRejectsBadSettings) {
    SimulationConfig c;
    c.gamma22 = 0.9;
    EXPECT_THROW(validate(c), InputError);
    c = {};
    c.loadings[0] = 1.1;
    EXPECT_THROW(validate(c), InputError);
    c = {};
    c.npoints = 1;
    EXPECT_THROW(validate(c), InputError);
    c = {};
    c.replications = 0;
    EXPECT_THROW(validate(c), InputError);
    EXPECT_NO_THROW(validate(SimulationConfig{}));
}

TEST(Simulate, ModelLayout) {
    const auto m = simulation_model();
    EXPECT_EQ(m.latent_names(), (std::vector<std::string>{"xi1", "xi2", "xi3", "eta1", "eta2", "eta3"}));
    EXPECT_EQ(m.indicator_count(), 18u);
    EXPECT_EQ(m.indicator_names().front(), "x11");
    EXPECT_EQ(m.indicator_names().back(), "y33");
    EXPECT_EQ(m.edge_count(), 5u);
    EXPECT_EQ(inner_parameter_names().size(), 5u);
    EXPECT_EQ(true_inner_parameters(SimulationConfig{}),
              (std::vector<double>{0.9, 0.5, 0.6, 0.5, 0.6}));
}

TEST(Simulate, RescaleCoversAllPoints) {
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(1001, -3.0, 3.0);
    for (int points : {4, 5, 7, 9}) {
        const auto codes = rescale_to_points(v, points);
        EXPECT_EQ(codes.front(), 1);
        EXPECT_EQ(codes.back(), points);
        for (std::size_t i = 1; i < codes.size(); ++i) {
            EXPECT_GE(codes[i], codes[i - 1]);
        }
    }
    EXPECT_THROW(rescale_to_points(Eigen::VectorXd::Constant(5, 2.0), 4), NumericalError);
}

TEST(Simulate, GeneratedDataShape) {
    SimulationConfig c;
    c.sample_size = 5000;
    RngState rng(3);
    const auto d = generate_dataset(c, rng);
    EXPECT_EQ(d.data.rows(), 5000u);
    EXPECT_EQ(d.data.cols(), 18u);
    EXPECT_TRUE(d.data.all_ordinal());
    EXPECT_GE(d.data.values.minCoeff(), 1.0);
    EXPECT_LE(d.data.values.maxCoeff(), 4.0);
    // Latent and indicator variances near one; corr(xi1, eta1) near 0.9.
    auto corr = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        const Eigen::VectorXd ac = a.array() - a.mean();
        const Eigen::VectorXd bc = b.array() - b.mean();
        return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
    };
    for (Eigen::Index j = 0; j < 6; ++j) {
        const Eigen::VectorXd col = d.latents.col(j).array() - d.latents.col(j).mean();
        EXPECT_NEAR(col.squaredNorm() / 4999.0, 1.0, 0.08) << j;
    }
    EXPECT_NEAR(corr(d.latents.col(0), d.latents.col(3)), 0.9, 0.02);
    EXPECT_NEAR(corr(d.latents.col(3), d.continuous.col(11)), 0.95, 0.02);
}

TEST(Simulate, BetaLawIsSkewed) {
    SimulationConfig c;
    c.law = LatentLaw::beta;
    c.sample_size = 20000;
    RngState rng(4);
    const auto d = generate_dataset(c, rng);
    const Eigen::VectorXd x = d.latents.col(0).array() - d.latents.col(0).mean();
    const double m2 = x.squaredNorm() / 20000.0;
    const double m3 = x.array().cube().sum() / 20000.0;
    EXPECT_NEAR(m3 / std::pow(m2, 1.5), beta_skewness({11, 2}), 0.1);
}

TEST(Summaries, Type7Quantiles) {
    const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
    EXPECT_EQ(sample_quantile(v, 0.0), 1.0);
    EXPECT_EQ(sample_quantile(v, 1.0), 4.0);
    EXPECT_NEAR(sample_quantile(v, 0.5), 2.5, 1e-15);
    EXPECT_NEAR(sample_quantile(v, 0.25), 1.75, 1e-15);
    EXPECT_NEAR(sample_quantile(v, 0.9), 3.7, 1e-15);
    EXPECT_EQ(sample_quantile({7.0}, 0.3), 7.0);
    EXPECT_THROW(sample_quantile({}, 0.5), InputError);

    const auto s = summarize(v);
    EXPECT_EQ(s.count, 4u);
    EXPECT_NEAR(s.mean, 2.5, 1e-15);
    EXPECT_NEAR(s.sd, std::sqrt(5.0 / 3.0), 1e-15);
    EXPECT_NEAR(s.percentiles[0], 1.15, 1e-14);
}

TEST(Summaries, RatioGeometricMean) {
    const std::vector<double> pls{-0.2, -0.1, 0.0, -0.4};
    const std::vector<double> opls{0.1, -0.1, 0.05, 0.1};
    const auto r = bias_ratio_summary(pls, opls);
    EXPECT_EQ(r.used, 3u);
    EXPECT_EQ(r.excluded_zero, 1u);
    EXPECT_NEAR(r.geometric_mean, std::cbrt(0.5 * 1.0 * 0.25), 1e-14);
    EXPECT_THROW(bias_ratio_summary({0.1}, {0.1, 0.2}), InputError);
    EXPECT_THROW(bias_ratio_summary({0.0}, {0.1}), InputError);
}

TEST(Study, ReplicationsAreReproducible) {
    SimulationConfig c;
    c.replications = 2;
    const auto a = run_replication(c, 1);
    const auto b = run_replication(c, 1);
    ASSERT_TRUE(a.ok) << a.failure;
    EXPECT_EQ(a.pls_inner, b.pls_inner);
    EXPECT_EQ(a.opls_inner, b.opls_inner);
    EXPECT_EQ(a.pls_inner.size(), 5u);
    EXPECT_EQ(a.pls_weights.size(), 18);
    const auto other = run_replication(c, 2);
    EXPECT_NE(a.pls_inner, other.pls_inner);
}

TEST(Study, ReportIndependentOfThreads) {
    SimulationConfig c;
    c.replications = 12;
    c.sample_size = 120;
    const auto one = run_study(c);
    c.threads = 4;
    const auto four = run_study(c);
    EXPECT_EQ(bias_table_csv(one), bias_table_csv(four));
    EXPECT_EQ(outer_quartiles_csv(one), outer_quartiles_csv(four));
    EXPECT_EQ(one.completed + one.pls_failures + one.opls_failures, 12);
    ASSERT_EQ(one.parameters.size(), 5u);
    EXPECT_EQ(one.parameters[0].name, "gamma11");
    EXPECT_EQ(one.parameters[0].pls.count, static_cast<std::size_t>(one.completed));
}

TEST(Study, CsvLayout) {
    SimulationConfig c;
    c.replications = 4;
    c.sample_size = 100;
    const auto r = run_study(c);
    const auto table = bias_table_csv(r);
    EXPECT_EQ(table.substr(0, table.find('\n')),
              "section,parameter,true_value,p5,p10,p25,p50,p75,p90,p95,mean,sd,geometric_mean,n_used,"
              "n_excluded");
    EXPECT_NE(table.find("\nratio,gamma11,"), std::string::npos);
    EXPECT_NE(table.find("\nopls,beta32,"), std::string::npos);
    const auto outer = outer_quartiles_csv(r);
    EXPECT_EQ(outer.substr(0, outer.find('\n')), "method,statistic,indicator,min,q1,median,q3,max");
    EXPECT_NE(study_metadata_csv(r).find("replications"), std::string::npos);
}
