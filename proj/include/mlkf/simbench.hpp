#ifndef MLKF_SIMBENCH_HPP
#define MLKF_SIMBENCH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "mlkf/core_model.hpp"
#include "mlkf/error.hpp"
#include "mlkf/group_knockoffs.hpp"
#include "mlkf/importance.hpp"
#include "mlkf/mkf_filter.hpp"
#include "mlkf/parallel.hpp"
#include "mlkf/pfilter.hpp"
#include "mlkf/rng.hpp"

namespace mlkf::sim {

enum class Method { kf, kf_plus, mkf, mkf_plus, bh, pf, gpf_fisher };

inline Method parse_method(std::string_view s) {
  if (s == "KF") return Method::kf;
  if (s == "KF+") return Method::kf_plus;
  if (s == "MKF") return Method::mkf;
  if (s == "MKF+") return Method::mkf_plus;
  if (s == "BH") return Method::bh;
  if (s == "PF") return Method::pf;
  if (s == "GPF-Fisher") return Method::gpf_fisher;
  throw config_error("unknown method '" + std::string(s) + "' (expected KF, KF+, MKF, MKF+, BH, PF or GPF-Fisher)");
}

inline std::string to_string(Method m) {
  switch (m) {
    case Method::kf:
      return "KF";
    case Method::kf_plus:
      return "KF+";
    case Method::mkf:
      return "MKF";
    case Method::mkf_plus:
      return "MKF+";
    case Method::bh:
      return "BH";
    case Method::pf:
      return "PF";
    case Method::gpf_fisher:
      return "GPF-Fisher";
  }
  return "unknown";
}

inline bool is_knockoff_method(Method m) {
  return m == Method::kf || m == Method::kf_plus || m == Method::mkf || m == Method::mkf_plus;
}

enum class Design { ar1, ztest };
enum class Pattern { random, even, first };

inline Pattern parse_pattern(std::string_view s) {
  if (s == "random") return Pattern::random;
  if (s == "even") return Pattern::even;
  if (s == "first") return Pattern::first;
  throw config_error("unknown sparsity pattern '" + std::string(s) + "' (expected random, even or first)");
}

inline std::string to_string(Pattern p) {
  return p == Pattern::random ? "random" : p == Pattern::even ? "even" : "first";
}

/// Number of occupied groups for a named saturation level.
inline Index saturation_groups(std::string_view level) {
  if (level == "high") return 10;
  if (level == "medium") return 20;
  if (level == "low") return 40;
  throw config_error("unknown saturation '" + std::string(level) + "' (expected high, medium or low)");
}

struct ExperimentConfig {
  std::string profile = "custom";
  Design design = Design::ar1;
  Index n = 900;
  Index N = 400;
  double rho = 0.3;
  double snr = 0.5;
  Index k = 4;  // occupied groups
  Index n_nonzero = 15;
  Index group_size = 10;
  Index layer_offset = 5;  // z-test design: offset of the second grouping
  Pattern pattern = Pattern::random;
  std::vector<Method> methods{Method::kf, Method::kf_plus, Method::mkf, Method::mkf_plus};
  std::vector<double> q{0.2, 0.2};
  double c = 1.0;
  Combiner combiner = Combiner::signed_max;
  Index reps = 50;
  std::uint64_t master_seed = 20240101;
  std::uint64_t pattern_seed = 7;
  std::string sweep_param;  // empty, "snr" or "rho"
  std::vector<double> sweep_values;

  Index num_groups() const { return N / group_size; }

  LayerSpec layer_spec() const {
    if (design == Design::ztest) {
      return LayerSpec(N, {Partition::contiguous(N, group_size, 0), Partition::contiguous(N, group_size, layer_offset)});
    }
    return LayerSpec(N, {Partition::singletons(N), Partition::contiguous(N, group_size, 0)});
  }

  void validate() const {
    if (N == 0 || group_size == 0) throw config_error("N and group_size must be positive");
    if (N % group_size != 0) throw config_error("N must be a multiple of group_size");
    if (methods.empty()) throw config_error("no methods requested");
    if (reps == 0) throw config_error("reps must be positive");
    if (q.size() != 2) throw config_error("q needs one target per layer (2 layers)");
    for (double v : q) {
      if (!(v > 0.0 && v < 1.0)) throw config_error("FDR targets must lie in (0,1)");
    }
    if (!(snr >= 0.0) || !std::isfinite(snr)) throw config_error("snr must be nonnegative");
    if (!(std::abs(rho) < 1.0)) throw config_error("rho must satisfy |rho| < 1");
    if (!(c > 0.0)) throw config_error("c must be positive");
    if (n_nonzero > N) throw config_error("n_nonzero exceeds N");
    if (pattern != Pattern::first) {
      if (k == 0 || k > num_groups()) throw config_error("k must lie in [1, number of groups]");
      if (n_nonzero > k * group_size) throw config_error("n_nonzero exceeds k * group_size");
      if (n_nonzero < k) throw config_error("n_nonzero must be at least k so every chosen group is occupied");
      if (pattern == Pattern::even && n_nonzero % k != 0) throw config_error("even pattern needs k to divide n_nonzero");
    }
    if (!sweep_param.empty() && sweep_param != "snr" && sweep_param != "rho") {
      throw config_error("sweep parameter must be snr or rho");
    }
    if (!sweep_param.empty() && sweep_values.empty()) throw config_error("sweep needs at least one value");
    for (Method m : methods) {
      if (design == Design::ztest && is_knockoff_method(m)) {
        throw config_error("knockoff methods are not available in the z-test design");
      }
      if (design == Design::ar1 && is_knockoff_method(m) && n < 2 * N) {
        throw config_error("knockoff methods need n >= 2N (n = " + std::to_string(n) + ", N = " + std::to_string(N) + ")");
      }
      if (design == Design::ar1 && !is_knockoff_method(m) && n <= N + 1) {
        throw config_error("OLS p-values need n > N + 1");
      }
    }
    if (design == Design::ztest && (layer_offset == 0 || layer_offset >= group_size)) {
      throw config_error("z-test layer offset must lie in [1, group_size)");
    }
  }
};

/// Named configurations. desk: scaled high-saturation study; paper: full-scale study;
/// figure1: the two-method demonstration; ztest: offset-layer z-test design.
inline ExperimentConfig profile(std::string_view name) {
  ExperimentConfig cfg;
  cfg.profile = std::string(name);
  if (name == "desk") return cfg;
  if (name == "paper") {
    cfg.n = 4500;
    cfg.N = 2000;
    cfg.k = saturation_groups("high");
    cfg.n_nonzero = 75;
    return cfg;
  }
  if (name == "figure1") {
    cfg.n = 1200;
    cfg.N = 500;
    cfg.rho = 0.0;
    cfg.snr = 1.0;
    cfg.k = 10;
    cfg.n_nonzero = 70;
    cfg.pattern = Pattern::even;
    cfg.methods = {Method::kf, Method::mkf};
    return cfg;
  }
  if (name == "ztest") {
    cfg.design = Design::ztest;
    cfg.n = 1;
    cfg.N = 2000;
    cfg.rho = 0.0;
    cfg.snr = 0.3;
    cfg.n_nonzero = 200;
    cfg.pattern = Pattern::first;
    cfg.methods = {Method::pf, Method::gpf_fisher};
    cfg.reps = 100;
    return cfg;
  }
  throw config_error("unknown profile '" + std::string(name) + "' (expected desk, paper, figure1 or ztest)");
}

/// Rows i.i.d. N(0, Sigma_rho) with Sigma_ij = rho^|i-j| via x_1 = z_1,
/// x_j = rho x_{j-1} + sqrt(1 - rho^2) z_j; then standardized. y is left at zero.
inline Dataset gen_ar1_design(Index n, Index N, double rho, std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0)) throw domain_error("AR(1) correlation must satisfy |rho| < 1");
  if (n < 2 || N < 1) throw dimension_error("need n >= 2 and N >= 1");
  Rng rng(seed);
  Eigen::MatrixXd x = standard_normal_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(N), rng);
  const double innov = std::sqrt(1.0 - rho * rho);
  for (Eigen::Index j = 1; j < x.cols(); ++j) x.col(j) = rho * x.col(j - 1) + innov * x.col(j);
  return standardize(Dataset(std::move(x), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))));
}

/// Non-null variables in the group layer (layer 2 of `spec`, or its only layer).
/// random: k groups uniformly, then n_nonzero variables uniformly within them, redrawn until
/// all k groups are hit. even: n_nonzero / k variables in each of k random groups.
/// first: variables 0..n_nonzero-1.
inline GroundTruth gen_sparsity_pattern(const LayerSpec& spec, Index k, Index n_nonzero, std::uint64_t seed,
                                        Pattern pattern = Pattern::random) {
  if (pattern == Pattern::first) {
    if (n_nonzero > spec.num_variables()) throw config_error("n_nonzero exceeds N");
    std::vector<Index> nn(n_nonzero);
    std::iota(nn.begin(), nn.end(), Index{0});
    return GroundTruth(spec, nn);
  }
  const Partition& groups = spec.layer(spec.num_layers() - 1);
  if (k == 0 || k > groups.num_groups()) throw config_error("k must lie in [1, number of groups]");
  Rng rng(seed);
  std::vector<Index> order(groups.num_groups());
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(chosen.begin(), chosen.end());

  std::vector<Index> pool;
  for (Index g : chosen) {
    for (Index j : groups.group(g)) pool.push_back(j);
  }
  if (n_nonzero > pool.size()) throw config_error("n_nonzero exceeds the size of the chosen groups");
  if (n_nonzero < k) throw config_error("n_nonzero must be at least k");

  std::vector<Index> nonnull;
  if (pattern == Pattern::even) {
    if (n_nonzero % k != 0) throw config_error("even pattern needs k to divide n_nonzero");
    const Index per = n_nonzero / k;
    for (Index g : chosen) {
      std::vector<Index> members = groups.group(g);
      if (per > members.size()) throw config_error("even pattern asks for more non-nulls than a group holds");
      std::shuffle(members.begin(), members.end(), rng);
      nonnull.insert(nonnull.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(per));
    }
  } else {
    for (int attempt = 0;; ++attempt) {
      if (attempt == 100000) throw config_error("could not occupy all k groups");
      std::shuffle(pool.begin(), pool.end(), rng);
      std::vector<bool> hit(groups.num_groups(), false);
      for (Index i = 0; i < n_nonzero; ++i) hit[groups.group_of(pool[i])] = true;
      bool all = true;
      for (Index g : chosen) all = all && hit[g];
      if (all) break;
    }
    nonnull.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_nonzero));
  }
  return GroundTruth(spec, nonnull);
}

/// Equal coefficients on the support with ||X beta||^2 / n = snr.
inline Eigen::VectorXd beta_for_snr(const Dataset& ds, const GroundTruth& truth, double snr) {
  if (!(snr >= 0.0) || !std::isfinite(snr)) throw domain_error("snr must be nonnegative");
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(ds.X.cols());
  if (snr == 0.0 || truth.nonnull_variables().empty()) return beta;
  Eigen::VectorXd signal = Eigen::VectorXd::Zero(ds.X.rows());
  for (Index j : truth.nonnull_variables()) signal += ds.X.col(static_cast<Eigen::Index>(j));
  const double energy = signal.squaredNorm();
  if (!(energy > 0.0)) throw degenerate_input_error("design columns on the support carry no energy");
  const double a = std::sqrt(snr * static_cast<double>(ds.n()) / energy);
  for (Index j : truth.nonnull_variables()) beta[static_cast<Eigen::Index>(j)] = a;
  return beta;
}

/// Two-sided OLS t-test p-values for a centered design with an intercept (df = n - N - 1).
inline std::vector<double> ols_pvalues(const Dataset& ds) {
  const Eigen::Index n = ds.X.rows();
  const Eigen::Index p = ds.X.cols();
  if (n <= p + 1) throw dimension_error("OLS p-values need n > N + 1");
  const Eigen::MatrixXd gram = ds.X.transpose() * ds.X;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw conditioning_error("X^T X is not positive definite");
  const Eigen::VectorXd coef = llt.solve(ds.X.transpose() * ds.y);
  const Eigen::VectorXd resid = (ds.y.array() - ds.y.mean()).matrix() - ds.X * coef;
  const double df = static_cast<double>(n - p - 1);
  const double sigma2 = resid.squaredNorm() / df;
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  boost::math::students_t dist(df);
  std::vector<double> out(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    const double se = std::sqrt(sigma2 * inv(j, j));
    const double t = std::abs(coef[j]) / se;
    out[static_cast<std::size_t>(j)] = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
  }
  return out;
}

/// Two-sided z-test p-values 2 * (1 - Phi(|x|)).
inline std::vector<double> ztest_pvalues(const Eigen::VectorXd& x) {
  boost::math::normal_distribution<double> nd;
  std::vector<double> out(static_cast<std::size_t>(x.size()));
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    out[static_cast<std::size_t>(j)] = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(nd, std::abs(x[j]))));
  }
  return out;
}

struct MethodRecord {
  Method method = Method::kf;
  std::vector<Index> replicates;                   // successful replicate indices, ascending
  std::vector<std::vector<LayerMetrics>> metrics;  // per successful replicate, per layer
  std::vector<std::string> failures;               // "replicate r: message"
};

struct SummaryRow {
  std::string method;
  Index layer = 0;  // 1-based
  std::string param;
  double param_value = 0.0;
  double fdr = 0.0;
  double fdr_se = 0.0;
  double power = 0.0;
  double power_se = 0.0;
  Index reps = 0;
  Index failures = 0;
};

inline std::pair<double, double> mean_and_se(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

struct ExperimentResult {
  std::string param = "snr";
  double param_value = 0.0;
  Index requested_reps = 0;
  Index num_layers = 2;
  std::vector<MethodRecord> methods;

  const MethodRecord& record(Method m) const {
    for (const auto& r : methods) {
      if (r.method == m) return r;
    }
    throw config_error("method " + to_string(m) + " was not run");
  }

  std::vector<double> fdp_values(Method m, Index layer) const {
    std::vector<double> out;
    for (const auto& row : record(m).metrics) out.push_back(row.at(layer).fdp);
    return out;
  }

  std::vector<double> power_values(Method m, Index layer) const {
    std::vector<double> out;
    for (const auto& row : record(m).metrics) out.push_back(row.at(layer).power);
    return out;
  }

  SummaryRow summary(Method m, Index layer) const {
    const auto& rec = record(m);
    SummaryRow row;
    row.method = to_string(m);
    row.layer = layer + 1;
    row.param = param;
    row.param_value = param_value;
    std::tie(row.fdr, row.fdr_se) = mean_and_se(fdp_values(m, layer));
    std::tie(row.power, row.power_se) = mean_and_se(power_values(m, layer));
    row.reps = rec.metrics.size();
    row.failures = rec.failures.size();
    return row;
  }

  std::vector<SummaryRow> summary() const {
    std::vector<SummaryRow> rows;
    for (const auto& rec : methods) {
      for (Index m = 0; m < num_layers; ++m) rows.push_back(summary(rec.method, m));
    }
    return rows;
  }
};

namespace detail {

struct ReplicateOutcome {
  std::vector<std::vector<LayerMetrics>> metrics;  // per method
  std::vector<std::string> errors;                 // per method; empty when it succeeded
};

inline ExperimentResult collect(const ExperimentConfig& cfg, const std::vector<ReplicateOutcome>& outcomes) {
  ExperimentResult res;
  res.requested_reps = cfg.reps;
  res.param = cfg.sweep_param.empty() ? "snr" : cfg.sweep_param;
  res.param_value = res.param == "rho" ? cfg.rho : cfg.snr;
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    MethodRecord rec;
    rec.method = cfg.methods[i];
    for (Index r = 0; r < outcomes.size(); ++r) {
      if (outcomes[r].errors[i].empty()) {
        rec.replicates.push_back(r);
        rec.metrics.push_back(outcomes[r].metrics[i]);
      } else {
        rec.failures.push_back("replicate " + std::to_string(r) + ": " + outcomes[r].errors[i]);
      }
    }
    res.methods.push_back(std::move(rec));
  }
  return res;
}

template <typename F>
void run_guarded(ReplicateOutcome& out, std::size_t i, const LayerSpec& spec, const GroundTruth& truth, F&& f) {
  try {
    out.metrics[i] = fdp_and_power(f(), truth, spec);
  } catch (const std::exception& e) {
    out.errors[i] = e.what();
  }
}

}  // namespace detail

/// Offset-layer z-test study: x_j ~ N(mu_j, 1) with mu_j = mu on the support and
/// ||mu||^2 / N = snr; base p-values are two-sided z-tests.
inline ExperimentResult run_ztest_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.design != Design::ztest) throw config_error("run_ztest_experiment needs the z-test design");
  const LayerSpec spec = cfg.layer_spec();
  const GroundTruth truth = gen_sparsity_pattern(spec, cfg.k, cfg.n_nonzero, cfg.pattern_seed, cfg.pattern);
  const double nn = static_cast<double>(truth.nonnull_variables().size());
  const double mu = nn == 0.0 ? 0.0 : std::sqrt(cfg.snr * static_cast<double>(cfg.N) / nn);
  std::vector<detail::ReplicateOutcome> outcomes(cfg.reps);
  parallel_for(cfg.reps, [&](std::size_t r) {
    auto& out = outcomes[r];
    out.metrics.resize(cfg.methods.size());
    out.errors.resize(cfg.methods.size());
    Rng rng(derive_seed(cfg.master_seed, {r, 0}));
    Eigen::VectorXd x = standard_normal_matrix(static_cast<Eigen::Index>(cfg.N), 1, rng).col(0);
    for (Index j : truth.nonnull_variables()) x[static_cast<Eigen::Index>(j)] += mu;
    const auto p = ztest_pvalues(x);
    const PfilterConfig pcfg{cfg.q, Correction::none};
    for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
      detail::run_guarded(out, i, spec, truth, [&]() -> SelectionSet {
        switch (cfg.methods[i]) {
          case Method::bh:
            return induce_group_selections(bh(p, cfg.q[0]), spec);
          case Method::pf:
            return generalized_pfilter(aggregate_pvalues(p, spec, Aggregation::simes).layers, spec, pcfg).selection;
          case Method::gpf_fisher:
            return generalized_pfilter(aggregate_pvalues(p, spec, Aggregation::fisher).layers, spec, pcfg).selection;
          default:
            throw config_error("method not available in the z-test design");
        }
      });
    }
  });
  return detail::collect(cfg, outcomes);
}

/// Regression study on AR(1) designs. The sparsity pattern is fixed by pattern_seed; each
/// replicate draws a fresh design, noise and knockoffs from seeds derived from
/// (master_seed, replicate). KF and KF+ reuse the singleton-layer statistics of the MKF run.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.design == Design::ztest) return run_ztest_experiment(cfg);
  cfg.validate();
  const LayerSpec spec = cfg.layer_spec();
  const GroundTruth truth = gen_sparsity_pattern(spec, cfg.k, cfg.n_nonzero, cfg.pattern_seed, cfg.pattern);
  const bool any_knockoff = std::any_of(cfg.methods.begin(), cfg.methods.end(), is_knockoff_method);
  const bool any_pvalue = !std::all_of(cfg.methods.begin(), cfg.methods.end(), is_knockoff_method);

  std::vector<detail::ReplicateOutcome> outcomes(cfg.reps);
  parallel_for(cfg.reps, [&](std::size_t r) {
    auto& out = outcomes[r];
    out.metrics.resize(cfg.methods.size());
    out.errors.resize(cfg.methods.size());
    const std::uint64_t seed = derive_seed(cfg.master_seed, {r});
    Dataset ds = gen_ar1_design(cfg.n, cfg.N, cfg.rho, derive_seed(seed, {0}));
    const Eigen::VectorXd beta = beta_for_snr(ds, truth, cfg.snr);
    Rng noise_rng(derive_seed(seed, {1}));
    const Eigen::VectorXd eps = standard_normal_matrix(ds.X.rows(), 1, noise_rng).col(0);
    ds.y = ds.X * beta + eps;
    ds = standardize(ds);

    std::vector<std::vector<double>> W;
    std::string knockoff_error;
    if (any_knockoff) {
      try {
        const auto designs = build_layer_designs(ds, spec, derive_seed(seed, {2}));
        PenaltySpec pen;
        pen.kind = PenaltyKind::group_l2;
        for (Index m = 0; m < spec.num_layers(); ++m) {
          W.push_back(compute_layer_statistics(ds, designs[m], spec.layer(m), pen, cfg.combiner).W);
        }
      } catch (const std::exception& e) {
        knockoff_error = e.what();
      }
    }
    std::vector<double> p;
    std::string pvalue_error;
    if (any_pvalue) {
      try {
        p = ols_pvalues(ds);
      } catch (const std::exception& e) {
        pvalue_error = e.what();
      }
    }

    const PfilterConfig pcfg{cfg.q, Correction::none};
    for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
      const Method method = cfg.methods[i];
      detail::run_guarded(out, i, spec, truth, [&]() -> SelectionSet {
        if (is_knockoff_method(method) && !knockoff_error.empty()) throw numeric_error(knockoff_error);
        if (!is_knockoff_method(method) && !pvalue_error.empty()) throw numeric_error(pvalue_error);
        switch (method) {
          case Method::kf:
            return induce_group_selections(knockoff_select(W[0], cfg.q[0], Variant::basic, cfg.c), spec);
          case Method::kf_plus:
            return induce_group_selections(knockoff_select(W[0], cfg.q[0], Variant::plus, cfg.c), spec);
          case Method::mkf:
          case Method::mkf_plus: {
            const FilterConfig fcfg{cfg.q, method == Method::mkf ? Variant::basic : Variant::plus, cfg.c};
            const auto tv = find_thresholds(W, spec, fcfg);
            return induce_group_selections(selected_variables(W, tv.t, spec), spec);
          }
          case Method::bh:
            return induce_group_selections(bh(p, cfg.q[0]), spec);
          case Method::pf:
            return generalized_pfilter(aggregate_pvalues(p, spec, Aggregation::simes).layers, spec, pcfg).selection;
          case Method::gpf_fisher:
            return generalized_pfilter(aggregate_pvalues(p, spec, Aggregation::fisher).layers, spec, pcfg).selection;
        }
        throw config_error("unknown method");
      });
    }
  });
  return detail::collect(cfg, outcomes);
}

/// One result per sweep value (or a single result when no sweep is configured). Every sweep
/// point reuses the same replicate seeds.
inline std::vector<ExperimentResult> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.sweep_param.empty()) return {run_experiment(cfg)};
  std::vector<ExperimentResult> out;
  for (double v : cfg.sweep_values) {
    ExperimentConfig point = cfg;
    if (cfg.sweep_param == "snr") {
      point.snr = v;
    } else {
      point.rho = v;
    }
    out.push_back(run_experiment(point));
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_results_csv(std::ostream& os, const std::vector<ExperimentResult>& results) {
  os << "method,layer,param,param_value,fdr,fdr_se,power,power_se\n";
  for (const auto& res : results) {
    for (const auto& row : res.summary()) {
      os << row.method << ',' << row.layer << ',' << row.param << ',' << format_double(row.param_value) << ','
         << format_double(row.fdr) << ',' << format_double(row.fdr_se) << ',' << format_double(row.power) << ','
         << format_double(row.power_se) << '\n';
    }
  }
}

}  // namespace mlkf::sim

#endif  // MLKF_SIMBENCH_HPP
