#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "mlkf/sim_config.hpp"
#include "mlkf/simbench.hpp"
#include "mlkf/toml_lite.hpp"

using namespace mlkf;
using namespace mlkf::sim;

namespace {

ExperimentConfig tiny_ar1() {
  ExperimentConfig cfg = profile("desk");
  cfg.n = 120;
  cfg.N = 40;
  cfg.k = 2;
  cfg.n_nonzero = 8;
  cfg.snr = 1.0;
  cfg.reps = 4;
  cfg.methods = {Method::kf, Method::kf_plus, Method::mkf, Method::mkf_plus, Method::bh, Method::pf,
                 Method::gpf_fisher};
  return cfg;
}

std::string csv_of(const std::vector<ExperimentResult>& results) {
  std::ostringstream os;
  write_results_csv(os, results);
  return os.str();
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  return ca.dot(cb) / (ca.norm() * cb.norm());
}

}  // namespace

TEST(Ar1Design, ZeroCorrelationIsStandardizedNoise) {
  const auto ds = gen_ar1_design(50, 6, 0.0, 3);
  Rng rng(3);
  const Eigen::MatrixXd z = standard_normal_matrix(50, 6, rng);
  const auto ref = standardize(Dataset(z, Eigen::VectorXd::Zero(50)));
  EXPECT_LT((ds.X - ref.X).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_TRUE(ds.standardized);
}

TEST(Ar1Design, LagOneCorrelation) {
  const double rho = 0.3;
  const Index n = 20000;
  const auto ds = gen_ar1_design(n, 5, rho, 11);
  const double se = (1 - rho * rho) / std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j + 1 < 5; ++j) EXPECT_NEAR(correlation(ds.X.col(j), ds.X.col(j + 1)), rho, 3 * se) << j;
  EXPECT_NEAR(correlation(ds.X.col(0), ds.X.col(2)), rho * rho, 3 * se);
}

TEST(Ar1Design, ReproducibleAndValidated) {
  EXPECT_EQ(gen_ar1_design(30, 4, 0.5, 9).X, gen_ar1_design(30, 4, 0.5, 9).X);
  EXPECT_NE(gen_ar1_design(30, 4, 0.5, 9).X, gen_ar1_design(30, 4, 0.5, 10).X);
  EXPECT_THROW(gen_ar1_design(30, 4, 1.0, 9), domain_error);
}

TEST(SparsityPattern, FullSupport) {
  const LayerSpec spec(20, {Partition::singletons(20), Partition::contiguous(20, 5)});
  const auto truth = gen_sparsity_pattern(spec, 4, 20, 1);
  EXPECT_EQ(truth.nonnull_variables().size(), 20u);
}

TEST(SparsityPattern, ExactlyKOccupiedGroups) {
  const LayerSpec spec(400, {Partition::singletons(400), Partition::contiguous(400, 10)});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto truth = gen_sparsity_pattern(spec, 10, 75, seed);
    EXPECT_EQ(truth.nonnull_variables().size(), 75u);
    EXPECT_EQ(truth.num_nonnull_groups(1), 10u);
  }
}

TEST(SparsityPattern, OneSaturatedGroup) {
  const LayerSpec spec(40, {Partition::singletons(40), Partition::contiguous(40, 10)});
  const auto truth = gen_sparsity_pattern(spec, 1, 10, 5);
  EXPECT_EQ(truth.num_nonnull_groups(1), 1u);
  const Index g = spec.group_of(truth.nonnull_variables().front(), 1);
  EXPECT_EQ(truth.nonnull_variables(), spec.layer(1).group(g));
}

TEST(SparsityPattern, EvenAndFirstPatterns) {
  const LayerSpec spec(500, {Partition::singletons(500), Partition::contiguous(500, 10)});
  const auto even = gen_sparsity_pattern(spec, 10, 70, 2, Pattern::even);
  EXPECT_EQ(even.nonnull_variables().size(), 70u);
  EXPECT_EQ(even.num_nonnull_groups(1), 10u);
  for (Index g = 0; g < 50; ++g) {
    if (!even.group_nonnull(1, g)) continue;
    Index count = 0;
    for (Index j : spec.layer(1).group(g)) count += even.variable_nonnull(j);
    EXPECT_EQ(count, 7u);
  }
  const auto first = gen_sparsity_pattern(spec, 1, 5, 0, Pattern::first);
  EXPECT_EQ(first.nonnull_variables(), (std::vector<Index>{0, 1, 2, 3, 4}));
}

TEST(SparsityPattern, InfeasibleCounts) {
  const LayerSpec spec(40, {Partition::singletons(40), Partition::contiguous(40, 10)});
  EXPECT_THROW(gen_sparsity_pattern(spec, 2, 25, 1), config_error);
  EXPECT_THROW(gen_sparsity_pattern(spec, 5, 10, 1), config_error);
  EXPECT_THROW(gen_sparsity_pattern(spec, 3, 2, 1), config_error);
}

TEST(BetaForSnr, ScalingProperties) {
  const auto ds = gen_ar1_design(100, 20, 0.3, 1);
  const LayerSpec spec(20, {Partition::singletons(20), Partition::contiguous(20, 5)});
  const auto truth = gen_sparsity_pattern(spec, 2, 6, 3);
  EXPECT_TRUE(beta_for_snr(ds, truth, 0.0).isZero());
  const Eigen::VectorXd b1 = beta_for_snr(ds, truth, 0.5);
  EXPECT_NEAR((ds.X * b1).squaredNorm() / 100.0, 0.5, 0.5e-10);
  const Eigen::VectorXd b2 = beta_for_snr(ds, truth, 1.0);
  EXPECT_LT((b2 - std::sqrt(2.0) * b1).cwiseAbs().maxCoeff(), 1e-12 * b2.cwiseAbs().maxCoeff());
  for (Index j = 0; j < 20; ++j) EXPECT_EQ(b1[static_cast<Eigen::Index>(j)] != 0.0, truth.variable_nonnull(j));
  EXPECT_THROW(beta_for_snr(ds, truth, -1.0), domain_error);
}

TEST(ZtestPvalues, TwoSided) {
  Eigen::VectorXd x(3);
  x << 0.0, 1.959963984540054, -1.959963984540054;
  const auto p = ztest_pvalues(x);
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_NEAR(p[1], 0.05, 1e-12);
  EXPECT_NEAR(p[2], 0.05, 1e-12);
}

TEST(OlsPvalues, UniformUnderTheNull) {
  // pooled null p-values from several small regressions have mean near 1/2
  double sum = 0;
  int count = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto ds = gen_ar1_design(60, 10, 0.2, s);
    Rng rng(100 + s);
    ds.y = standard_normal_matrix(60, 1, rng).col(0);
    for (double p : ols_pvalues(standardize(ds))) {
      sum += p;
      ++count;
    }
  }
  EXPECT_NEAR(sum / count, 0.5, 3 * std::sqrt(1.0 / 12.0 / count));
}

TEST(ExperimentConfig, ProfilesAndValidation) {
  EXPECT_EQ(profile("desk").n, 900u);
  EXPECT_EQ(profile("desk").N, 400u);
  EXPECT_EQ(profile("paper").N, 2000u);
  EXPECT_EQ(profile("paper").n_nonzero, 75u);
  EXPECT_EQ(profile("figure1").n, 1200u);
  EXPECT_THROW(profile("huge"), config_error);
  auto cfg = profile("desk");
  cfg.n = 700;
  EXPECT_THROW(cfg.validate(), config_error);
  cfg = profile("desk");
  cfg.n_nonzero = 50;
  EXPECT_THROW(cfg.validate(), config_error);
  EXPECT_EQ(saturation_groups("high"), 10u);
  EXPECT_EQ(saturation_groups("medium"), 20u);
  EXPECT_EQ(saturation_groups("low"), 40u);
}

TEST(ExperimentConfig, FromToml) {
  const auto j = toml::parse(R"(
profile = "desk"
reps = 3
q = [0.1, 0.2]
methods = ["KF", "MKF+"]
[sweep]
param = "snr"
values = [0.0, 0.5]
)");
  const auto cfg = config_from_json(j);
  EXPECT_EQ(cfg.reps, 3u);
  EXPECT_EQ(cfg.q, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(cfg.methods, (std::vector<Method>{Method::kf, Method::mkf_plus}));
  EXPECT_EQ(cfg.sweep_values, (std::vector<double>{0.0, 0.5}));
  EXPECT_THROW(config_from_json(toml::parse("snrr = 1.0")), config_error);
  EXPECT_THROW(config_from_json(toml::parse("reps = \"ten\"")), config_error);
  EXPECT_THROW(config_from_json(toml::parse("n = 100")), config_error);
  const auto back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));
}

TEST(RunExperiment, DeterministicAcrossRunsAndThreadCounts) {
  const auto cfg = tiny_ar1();
  setenv("MLKF_THREADS", "1", 1);
  const auto a = csv_of({run_experiment(cfg)});
  setenv("MLKF_THREADS", "3", 1);
  const auto b = csv_of({run_experiment(cfg)});
  unsetenv("MLKF_THREADS");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')), "method,layer,param,param_value,fdr,fdr_se,power,power_se");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 7 * 2);
}

TEST(RunExperiment, RecordsEveryReplicate) {
  const auto cfg = tiny_ar1();
  const auto res = run_experiment(cfg);
  for (const auto& rec : res.methods) {
    EXPECT_EQ(rec.metrics.size() + rec.failures.size(), cfg.reps);
    for (const auto& row : rec.metrics) {
      for (const auto& m : row) {
        EXPECT_GE(m.fdp, 0.0);
        EXPECT_LE(m.fdp, 1.0);
        EXPECT_GE(m.power, 0.0);
        EXPECT_LE(m.power, 1.0);
      }
    }
  }
  for (const auto& row : res.summary()) EXPECT_GE(row.fdr_se, 0.0);
}

TEST(RunExperiment, NullSignalKeepsFdrControlled) {
  auto cfg = tiny_ar1();
  cfg.snr = 0.0;
  cfg.reps = 10;
  cfg.methods = {Method::mkf_plus};
  const auto res = run_experiment(cfg);
  for (Index m = 0; m < 2; ++m) {
    const auto row = res.summary(Method::mkf_plus, m);
    EXPECT_LE(row.fdr, 0.2 + 2 * row.fdr_se);
    EXPECT_EQ(row.power, 0.0);
  }
}

TEST(ZtestExperiment, OffsetLayerLabels) {
  const auto cfg = profile("ztest");
  const auto spec = cfg.layer_spec();
  const auto truth = gen_sparsity_pattern(spec, cfg.k, cfg.n_nonzero, cfg.pattern_seed, cfg.pattern);
  EXPECT_EQ(truth.num_nonnull_groups(0), 20u);
  // groups {5..14}, ..., {195..204} plus the wrapped group {1995..1999, 0..4}
  EXPECT_EQ(truth.num_nonnull_groups(1), 21u);
  EXPECT_TRUE(truth.group_nonnull(1, spec.group_of(1999, 1)));
}

TEST(ZtestExperiment, NullAndPowerBehaviour) {
  auto cfg = profile("ztest");
  cfg.reps = 40;
  cfg.sweep_param = "snr";
  cfg.sweep_values = {0.0, 0.15, 0.3, 0.6};
  const auto results = run_sweep(cfg);
  ASSERT_EQ(results.size(), 4u);
  for (Method method : {Method::pf, Method::gpf_fisher}) {
    for (Index m = 0; m < 2; ++m) {
      const auto null_row = results[0].summary(method, m);
      EXPECT_LE(null_row.fdr, 0.2 + 2 * null_row.fdr_se);
      for (std::size_t i = 1; i < results.size(); ++i) {
        const auto prev = results[i - 1].summary(method, m);
        const auto cur = results[i].summary(method, m);
        EXPECT_GE(cur.power + 2 * std::max(cur.power_se, prev.power_se), prev.power) << to_string(method);
        EXPECT_LE(cur.fdr, 0.2 + 2 * cur.fdr_se);
      }
    }
  }
}

TEST(ZtestExperiment, RejectsKnockoffMethods) {
  auto cfg = profile("ztest");
  cfg.methods = {Method::mkf};
  EXPECT_THROW(run_experiment(cfg), config_error);
}
