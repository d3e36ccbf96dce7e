#ifndef MLKF_MKF_FILTER_HPP
#define MLKF_MKF_FILTER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlkf/core_model.hpp"
#include "mlkf/error.hpp"
#include "mlkf/group_knockoffs.hpp"
#include "mlkf/importance.hpp"
#include "mlkf/rng.hpp"

namespace mlkf {

/// Multiplier under which MKF(c)+ has provable multilayer FDR control for arbitrary dependence.
inline constexpr double c_kn = 1.93;

enum class Variant { basic, plus };

inline Variant parse_variant(std::string_view s) {
  if (s == "plus") return Variant::plus;
  if (s == "basic") return Variant::basic;
  throw config_error("unknown variant '" + std::string(s) + "' (expected plus or basic)");
}
inline std::string to_string(Variant v) { return v == Variant::plus ? "plus" : "basic"; }

struct FilterConfig {
  std::vector<double> q;
  Variant variant = Variant::plus;
  double c = 1.0;

  void validate(Index num_layers) const {
    if (q.size() != num_layers) {
      throw config_error("expected " + std::to_string(num_layers) + " FDR targets, got " + std::to_string(q.size()));
    }
    for (double v : q) {
      if (!(v > 0.0 && v < 1.0)) throw config_error("FDR targets must lie in (0,1)");
    }
    if (!(c > 0.0) || !std::isfinite(c)) throw config_error("multiplier c must be positive");
  }
};

/// Sorted distinct |W_g| over nonzero W_g, followed by +inf.
inline std::vector<double> candidate_grid(std::span<const double> W) {
  std::vector<double> grid;
  grid.reserve(W.size() + 1);
  for (double w : W) {
    if (w != 0.0) grid.push_back(std::abs(w));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  grid.push_back(kInf);
  return grid;
}

inline double v_hat(std::span<const double> W, double t, const FilterConfig& cfg) {
  Index negatives = 0;
  for (double w : W) {
    if (w <= -t) ++negatives;
  }
  const double extra = cfg.variant == Variant::plus ? 1.0 : 0.0;
  return cfg.c * (extra + static_cast<double>(negatives));
}

namespace detail {

inline void check_statistics(const std::vector<std::vector<double>>& W, const LayerSpec& spec) {
  if (W.size() != spec.num_layers()) throw dimension_error("need one statistic vector per layer");
  for (Index m = 0; m < W.size(); ++m) {
    if (W[m].size() != spec.num_groups(m)) {
      throw dimension_error("layer " + std::to_string(m + 1) + " has " + std::to_string(spec.num_groups(m)) +
                            " groups but " + std::to_string(W[m].size()) + " statistics");
    }
  }
}

/// Variables whose groups clear the threshold at every layer except `skip` (pass skip = M for all).
inline std::vector<bool> passing_variables(const std::vector<std::vector<double>>& W, std::span<const double> t,
                                           const LayerSpec& spec, Index skip) {
  std::vector<bool> pass(spec.num_variables(), true);
  for (Index m = 0; m < spec.num_layers(); ++m) {
    if (m == skip) continue;
    for (Index j = 0; j < spec.num_variables(); ++j) {
      if (pass[j] && !(W[m][spec.group_of(j, m)] >= t[m])) pass[j] = false;
    }
  }
  return pass;
}

}  // namespace detail

/// Variables in S(t) = {j : W^m_{g(j,m)} >= t_m for all m}, 0-based and sorted.
inline std::vector<Index> selected_variables(const std::vector<std::vector<double>>& W, std::span<const double> t,
                                             const LayerSpec& spec) {
  detail::check_statistics(W, spec);
  const auto pass = detail::passing_variables(W, t, spec, spec.num_layers());
  std::vector<Index> out;
  for (Index j = 0; j < pass.size(); ++j) {
    if (pass[j]) out.push_back(j);
  }
  return out;
}

/// V_hat_m(t_m) / |S_m(t)|; zero when S(t) is empty.
inline double fdp_hat(const std::vector<std::vector<double>>& W, std::span<const double> t, Index m,
                      const LayerSpec& spec, const FilterConfig& cfg) {
  const auto vars = selected_variables(W, t, spec);
  if (vars.empty()) return 0.0;
  const auto sel = induce_group_selections(vars, spec);
  return v_hat(W[m], t[m], cfg) / static_cast<double>(sel.layer_groups[m].size());
}

/// Coordinatewise-minimal threshold vector among those with a non-empty selection and
/// FDP_hat_m <= q_m at every layer; all +inf when no such vector exists.
inline ThresholdVector find_thresholds(const std::vector<std::vector<double>>& W, const LayerSpec& spec,
                                       const FilterConfig& cfg) {
  detail::check_statistics(W, spec);
  cfg.validate(spec.num_layers());
  const Index M = spec.num_layers();
  ThresholdVector tv;
  tv.grids.resize(M);
  for (Index m = 0; m < M; ++m) tv.grids[m] = candidate_grid(W[m]);
  tv.t.assign(M, kInf);

  // Sorted |W| of the negative statistics per layer, for counting W <= -t by binary search.
  std::vector<std::vector<double>> negative_magnitudes(M);
  for (Index m = 0; m < M; ++m) {
    for (double w : W[m]) {
      if (w < 0.0) negative_magnitudes[m].push_back(-w);
    }
    std::sort(negative_magnitudes[m].begin(), negative_magnitudes[m].end());
  }
  auto count_at_least = [](const std::vector<double>& sorted, double t) {
    return static_cast<Index>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
  };

  std::vector<std::size_t> pos(M, 0);
  std::vector<double> t(M);
  for (Index m = 0; m < M; ++m) t[m] = tv.grids[m][0];
  const double extra = cfg.variant == Variant::plus ? 1.0 : 0.0;

  bool changed = true;
  while (changed) {
    changed = false;
    for (Index m = 0; m < M; ++m) {
      const auto pass = detail::passing_variables(W, t, spec, m);
      std::vector<double> eligible;  // W_g > 0 of groups that still contain a variable passing elsewhere
      for (Index g = 0; g < spec.num_groups(m); ++g) {
        if (!(W[m][g] > 0.0)) continue;
        for (Index j : spec.layer(m).group(g)) {
          if (pass[j]) {
            eligible.push_back(W[m][g]);
            break;
          }
        }
      }
      std::sort(eligible.begin(), eligible.end());
      const auto& grid = tv.grids[m];
      std::size_t k = pos[m];
      for (; k + 1 < grid.size(); ++k) {
        const Index selected = count_at_least(eligible, grid[k]);
        if (selected == 0) {
          k = grid.size() - 1;
          break;
        }
        const double vh = cfg.c * (extra + static_cast<double>(count_at_least(negative_magnitudes[m], grid[k])));
        if (vh / static_cast<double>(selected) <= cfg.q[m]) break;
      }
      if (k + 1 >= grid.size()) return tv;  // this layer cannot be satisfied with a non-empty selection
      if (k != pos[m]) {
        pos[m] = k;
        t[m] = grid[k];
        changed = true;
      }
    }
  }
  tv.t = t;
  return tv;
}

/// Single-layer knockoff filter threshold: smallest grid t with V_hat(t) / max(1, #{W >= t}) <= q.
inline double knockoff_threshold(std::span<const double> W, double q, Variant variant, double c = 1.0) {
  FilterConfig cfg{{q}, variant, c};
  for (double t : candidate_grid(W)) {
    if (std::isinf(t)) break;
    Index positives = 0;
    for (double w : W) {
      if (w >= t) ++positives;
    }
    if (v_hat(W, t, cfg) / static_cast<double>(std::max<Index>(1, positives)) <= q) return t;
  }
  return kInf;
}

inline std::vector<Index> knockoff_select(std::span<const double> W, double q, Variant variant, double c = 1.0) {
  const double t = knockoff_threshold(W, q, variant, c);
  std::vector<Index> out;
  for (Index j = 0; j < W.size(); ++j) {
    if (W[j] >= t) out.push_back(j);
  }
  return out;
}

struct MkfResult {
  SelectionSet selection;
  ThresholdVector thresholds;
  std::vector<KnockoffStatistics> statistics;
  std::vector<ImportancePair> importance;
};

inline std::vector<std::vector<double>> statistic_values(const std::vector<KnockoffStatistics>& stats) {
  std::vector<std::vector<double>> out;
  out.reserve(stats.size());
  for (const auto& s : stats) out.push_back(s.W);
  return out;
}

/// Runs the threshold search on precomputed statistics and returns the selection.
inline MkfResult filter_statistics(std::vector<KnockoffStatistics> stats, const LayerSpec& spec,
                                   const FilterConfig& cfg) {
  MkfResult res;
  res.statistics = std::move(stats);
  const auto W = statistic_values(res.statistics);
  res.thresholds = find_thresholds(W, spec, cfg);
  res.selection = induce_group_selections(selected_variables(W, res.thresholds.t, spec), spec);
  return res;
}

/// Fixed-design knockoffs for every layer; layer m uses the seed derived from (seed, m).
inline std::vector<KnockoffDesign> build_layer_designs(const Dataset& ds, const LayerSpec& spec, std::uint64_t seed) {
  const Eigen::MatrixXd sigma = ds.X.transpose() * ds.X;
  std::vector<KnockoffDesign> designs;
  designs.reserve(spec.num_layers());
  for (Index m = 0; m < spec.num_layers(); ++m) {
    const auto pkg = build_equicorrelated_S(sigma, spec.layer(m));
    designs.push_back(fixed_design_knockoffs(ds, pkg, derive_seed(seed, {m}), m));
  }
  return designs;
}

inline MkfResult run_mkf(const Dataset& ds, const LayerSpec& spec, const std::vector<KnockoffDesign>& designs,
                         const PenaltySpec& pen, Combiner combiner, const FilterConfig& cfg,
                         const SolverOptions& opts = {}) {
  cfg.validate(spec.num_layers());
  if (ds.num_variables() != spec.num_variables()) throw dimension_error("dataset and LayerSpec disagree on N");
  if (ds.n() < 2 * ds.num_variables()) throw dimension_error("fixed-design knockoffs need n >= 2N");
  if (designs.size() != spec.num_layers()) throw dimension_error("need one knockoff design per layer");
  std::vector<KnockoffStatistics> stats;
  std::vector<ImportancePair> pairs;
  for (Index m = 0; m < spec.num_layers(); ++m) {
    pairs.push_back(layer_importance(ds, designs[m], spec.layer(m), pen, opts));
    stats.push_back(combine(pairs.back(), combiner));
  }
  auto res = filter_statistics(std::move(stats), spec, cfg);
  res.importance = std::move(pairs);
  return res;
}

}  // namespace mlkf

#endif  // MLKF_MKF_FILTER_HPP
