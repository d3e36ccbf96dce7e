#include <gtest/gtest.h>

#include <random>

#include "mlkf/pfilter.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mlkf;

TEST(Simes, Examples) {
  const std::vector<double> one{0.03};
  EXPECT_DOUBLE_EQ(simes(one), 0.03);
  const std::vector<double> two{0.01, 0.5};
  EXPECT_DOUBLE_EQ(simes(two), 0.02);
  const std::vector<double> ones(5, 1.0);
  EXPECT_EQ(simes(ones), 1.0);
  EXPECT_THROW(simes(std::vector<double>{}), input_error);
  EXPECT_THROW(simes(std::vector<double>{1.5}), input_error);
}

TEST(Simes, MatchesDefinitionOnRandomInputs) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> p(std::uniform_int_distribution<int>(1, 12)(rng));
    for (auto& v : p) v = u(rng);
    EXPECT_DOUBLE_EQ(simes(p), oracle::simes(p));
  }
}

TEST(Fisher, Examples) {
  for (double u : {0.001, 0.2, 0.73}) {
    const std::vector<double> p{u};
    EXPECT_NEAR(fisher(p).p, u, 1e-14);
  }
  const std::vector<double> halves{0.5, 0.5};
  EXPECT_NEAR(fisher(halves).p, oracle::chi2_even_tail(-4.0 * std::log(0.5), 2), 1e-12);
  EXPECT_NEAR(fisher(halves).p, 0.5966, 5e-5);
  const std::vector<double> ones{1.0, 1.0};
  EXPECT_EQ(fisher(ones).p, 1.0);
}

TEST(Fisher, MatchesPoissonSumOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> p(std::uniform_int_distribution<int>(1, 20)(rng));
    for (auto& v : p) v = u(rng);
    const double ref = oracle::fisher(p);
    EXPECT_NEAR(fisher(p).p, ref, 1e-10 * std::max(ref, 1e-300));
  }
}

TEST(Fisher, ZeroIsClampedWithAFlag) {
  const std::vector<double> p{0.0, 0.4};
  const auto r = fisher(p);
  EXPECT_EQ(r.p, 0.0);
  EXPECT_TRUE(r.zero_clamped);
  EXPECT_FALSE(fisher(std::vector<double>{0.4}).zero_clamped);
}

TEST(Aggregation, MonotoneInEveryInput) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-4, 1.0);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> p(std::uniform_int_distribution<int>(1, 8)(rng));
    for (auto& v : p) v = u(rng);
    auto lower = p;
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, p.size() - 1)(rng);
    lower[k] *= u(rng);
    EXPECT_LE(simes(lower), simes(p));
    EXPECT_LE(fisher(lower).p, fisher(p).p);
  }
}

TEST(Aggregation, SuperuniformUnderTheNull) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u;
  const std::size_t draws = 10000;
  std::vector<double> s(draws);
  std::vector<double> f(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    std::vector<double> p(5);
    for (auto& v : p) v = u(rng);
    s[i] = simes(p);
    f[i] = fisher(p).p;
  }
  const double crit = oracle::ks_one_sided_critical(0.01, draws);
  EXPECT_LT(oracle::ks_below_uniform(s), crit);
  EXPECT_LT(oracle::ks_below_uniform(f), crit);
}

TEST(Bh, Examples) {
  EXPECT_EQ(bh(std::vector<double>{0.001}, 0.2), (std::vector<Index>{0}));
  EXPECT_EQ(bh(std::vector<double>{0.01, 0.02, 0.5, 0.9}, 0.2), (std::vector<Index>{0, 1}));
  EXPECT_TRUE(bh(std::vector<double>{0.9, 0.95}, 0.2).empty());
  EXPECT_THROW(bh(std::vector<double>{0.1}, 1.0), config_error);
}

TEST(Bh, MatchesStepUpDefinition) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> p(std::uniform_int_distribution<int>(1, 40)(rng));
    for (auto& v : p) v = i % 2 ? u(rng) * u(rng) * u(rng) : u(rng);
    EXPECT_EQ(bh(p, 0.2), oracle::bh(p, 0.2));
  }
}

TEST(GeneralizedPfilter, SingleLayerSimesSingletonsIsBh) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < 1000; ++i) {
    const Index N = std::uniform_int_distribution<Index>(1, 30)(rng);
    std::vector<double> p(N);
    for (auto& v : p) v = u(rng) * u(rng);
    const LayerSpec spec(N, {Partition::singletons(N)});
    const auto agg = aggregate_pvalues(p, spec, Aggregation::simes);
    const auto res = generalized_pfilter(agg.layers, spec, PfilterConfig{{0.15}});
    EXPECT_EQ(res.selection.variables, bh(p, 0.15));
  }
}

TEST(GeneralizedPfilter, TwoLayerToy) {
  // hypotheses 1..3; layer 2 pairs {1,2} and {3}
  const LayerSpec spec(3, {Partition::singletons(3), Partition::from_groups(3, {{0, 1}, {2}})});
  const PValueLayers layers{{{0.01, 0.2, 0.9}, {0.02, 0.9}}};
  const std::vector<double> q{0.2, 0.2};
  const auto res = generalized_pfilter(layers, spec, PfilterConfig{q});
  const auto ref = oracle::pfilter_corner(layers.values, testutil::labels_of(spec), q, {1.0, 1.0});
  EXPECT_TRUE(ref.corner_feasible);
  EXPECT_EQ(res.thresholds.t, ref.t);
  EXPECT_EQ(res.selection.variables, ref.selected);
  EXPECT_EQ(res.selection.variables, (std::vector<Index>{0}));
}

TEST(GeneralizedPfilter, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 500; ++trial) {
    const Index N = std::uniform_int_distribution<Index>(2, 8)(rng);
    const Index M = trial % 4 == 0 ? 3 : 2;
    std::vector<Partition> parts;
    for (Index m = 0; m < M; ++m) parts.push_back(testutil::random_partition(N, 4, rng));
    const LayerSpec spec(N, parts);
    PValueLayers layers;
    for (Index m = 0; m < M; ++m) {
      std::vector<double> p(spec.num_groups(m));
      for (auto& v : p) v = u(rng) < 0.5 ? 0.05 * u(rng) : u(rng);
      layers.values.push_back(p);
    }
    std::vector<double> q(M);
    for (auto& v : q) v = std::uniform_real_distribution<double>(0.1, 0.5)(rng);
    const auto correction = trial % 5 == 0 ? Correction::cpf : Correction::none;
    const PfilterConfig cfg{q, correction};
    std::vector<double> factor(M);
    for (Index m = 0; m < M; ++m) factor[m] = cfg.factor(spec.num_groups(m));
    const auto res = generalized_pfilter(layers, spec, cfg);
    const auto ref = oracle::pfilter_corner(layers.values, testutil::labels_of(spec), q, factor);
    EXPECT_TRUE(ref.corner_feasible);
    EXPECT_EQ(res.thresholds.t, ref.t) << "trial " << trial;
    EXPECT_EQ(res.selection.variables, ref.selected);
    for (Index m = 0; m < M; ++m) EXPECT_LE(pfilter_fdp_hat(layers, res.thresholds.t, m, spec, cfg), q[m]);
  }
}

TEST(GeneralizedPfilter, AllOnesSelectsNothing) {
  const LayerSpec spec(4, {Partition::singletons(4), Partition::contiguous(4, 2)});
  const PValueLayers layers{{{1, 1, 1, 1}, {1, 1}}};
  EXPECT_TRUE(generalized_pfilter(layers, spec, PfilterConfig{{0.2, 0.2}}).selection.variables.empty());
}

TEST(GeneralizedPfilter, LargerQNeverShrinksSelection) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 300; ++trial) {
    const Index N = 12;
    const LayerSpec spec(N, {Partition::singletons(N), testutil::random_partition(N, 4, rng)});
    std::vector<double> base(N);
    for (auto& v : base) v = u(rng) * u(rng);
    const auto agg = aggregate_pvalues(base, spec, Aggregation::simes);
    const auto small = generalized_pfilter(agg.layers, spec, PfilterConfig{{0.1, 0.1}}).selection.variables;
    const auto big = generalized_pfilter(agg.layers, spec, PfilterConfig{{0.2, 0.3}}).selection.variables;
    EXPECT_TRUE(std::includes(big.begin(), big.end(), small.begin(), small.end()));
  }
}

TEST(AggregatePvalues, CountsClampedFisherGroups) {
  const LayerSpec spec(4, {Partition::singletons(4), Partition::contiguous(4, 2)});
  const std::vector<double> base{0.0, 0.3, 0.2, 0.4};
  const auto agg = aggregate_pvalues(base, spec, Aggregation::fisher);
  EXPECT_EQ(agg.zero_clamped, 2u);
  EXPECT_EQ(agg.layers.values[1][0], 0.0);
  EXPECT_THROW(aggregate_pvalues(std::vector<double>{0.1}, spec, Aggregation::simes), dimension_error);
  EXPECT_THROW(parse_aggregation("stouffer"), config_error);
}

TEST(PValueLayers, Validation) {
  const LayerSpec spec(2, {Partition::singletons(2)});
  EXPECT_THROW((PValueLayers{{{0.1, 1.2}}}.validate(spec)), input_error);
  EXPECT_THROW((PValueLayers{{{0.1}}}.validate(spec)), dimension_error);
  EXPECT_THROW(generalized_pfilter(PValueLayers{{{0.1, 0.2}}}, spec, PfilterConfig{{0.2, 0.2}}), config_error);
}
