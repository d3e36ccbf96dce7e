#ifndef MLKF_PFILTER_HPP
#define MLKF_PFILTER_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "mlkf/bounds_lab.hpp"
#include "mlkf/core_model.hpp"
#include "mlkf/error.hpp"

namespace mlkf {

namespace detail {

inline void check_unit_interval(std::span<const double> p, const char* what) {
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw input_error(std::string(what) + ": p-values must lie in [0,1]");
  }
}

}  // namespace detail

/// Simes combination min_i (k/i) p_(i), capped at 1.
inline double simes(std::span<const double> p) {
  if (p.empty()) throw input_error("simes needs at least one p-value");
  detail::check_unit_interval(p, "simes");
  std::vector<double> s(p.begin(), p.end());
  std::sort(s.begin(), s.end());
  const double k = static_cast<double>(s.size());
  double best = 1.0;
  for (std::size_t i = 0; i < s.size(); ++i) best = std::min(best, k / static_cast<double>(i + 1) * s[i]);
  return best;
}

struct FisherResult {
  double p = 1.0;
  bool zero_clamped = false;  // some input was exactly 0; the combined p-value is reported as 0
};

/// Fisher combination: chi-square(2k) upper tail at -2 sum log p_i.
inline FisherResult fisher(std::span<const double> p) {
  if (p.empty()) throw input_error("fisher needs at least one p-value");
  detail::check_unit_interval(p, "fisher");
  double stat = 0.0;
  for (double v : p) {
    if (v == 0.0) return {0.0, true};
    stat -= 2.0 * std::log(v);
  }
  if (stat <= 0.0) return {1.0, false};
  return {boost::math::gamma_q(static_cast<double>(p.size()), 0.5 * stat), false};
}

/// Benjamini-Hochberg step-up: indices (0-based, sorted) of the k_hat smallest p-values.
inline std::vector<Index> bh(std::span<const double> p, double q) {
  detail::check_unit_interval(p, "bh");
  if (!(q > 0.0 && q < 1.0)) throw config_error("BH level must lie in (0,1)");
  std::vector<Index> order(p.size());
  for (Index i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return p[a] < p[b]; });
  const double n = static_cast<double>(p.size());
  std::size_t k_hat = 0;
  for (std::size_t k = 1; k <= order.size(); ++k) {
    if (p[order[k - 1]] <= static_cast<double>(k) * q / n) k_hat = k;
  }
  std::vector<Index> out(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_hat));
  std::sort(out.begin(), out.end());
  return out;
}

/// Group p-values p^m_g, one vector per layer.
struct PValueLayers {
  std::vector<std::vector<double>> values;

  void validate(const LayerSpec& spec) const {
    if (values.size() != spec.num_layers()) throw dimension_error("need one p-value vector per layer");
    for (Index m = 0; m < values.size(); ++m) {
      if (values[m].size() != spec.num_groups(m)) {
        throw dimension_error("layer " + std::to_string(m + 1) + " has " + std::to_string(spec.num_groups(m)) +
                              " groups but " + std::to_string(values[m].size()) + " p-values");
      }
      detail::check_unit_interval(values[m], "group p-values");
    }
  }
};

enum class Aggregation { simes, fisher };

inline Aggregation parse_aggregation(std::string_view s) {
  if (s == "simes") return Aggregation::simes;
  if (s == "fisher") return Aggregation::fisher;
  throw config_error("unknown aggregation '" + std::string(s) + "' (expected simes or fisher)");
}

struct AggregatedPValues {
  PValueLayers layers;
  Index zero_clamped = 0;  // number of Fisher groups containing an exact zero
};

/// Aggregates base p-values (one per variable) into group p-values at every layer.
inline AggregatedPValues aggregate_pvalues(std::span<const double> base, const LayerSpec& spec, Aggregation how) {
  if (base.size() != spec.num_variables()) throw dimension_error("need one base p-value per variable");
  detail::check_unit_interval(base, "base p-values");
  AggregatedPValues out;
  out.layers.values.resize(spec.num_layers());
  std::vector<double> buf;
  for (Index m = 0; m < spec.num_layers(); ++m) {
    for (const auto& g : spec.layer(m).groups()) {
      buf.clear();
      for (Index j : g) buf.push_back(base[j]);
      if (how == Aggregation::simes) {
        out.layers.values[m].push_back(simes(buf));
      } else {
        const auto f = fisher(buf);
        if (f.zero_clamped) ++out.zero_clamped;
        out.layers.values[m].push_back(f.p);
      }
    }
  }
  return out;
}

enum class Correction { none, cpf };

inline Correction parse_correction(std::string_view s) {
  if (s == "none") return Correction::none;
  if (s == "cpf" || s == "c_pf") return Correction::cpf;
  throw config_error("unknown correction '" + std::string(s) + "' (expected none or cpf)");
}
inline std::string to_string(Correction c) { return c == Correction::none ? "none" : "cpf"; }

/// Per-layer targets and the optional c_pf(G_m) multiplier. With the multiplier the procedure
/// targets mFDR under independence; no FDR claim is made for it.
struct PfilterConfig {
  std::vector<double> q;
  Correction correction = Correction::none;

  void validate(Index num_layers) const {
    if (q.size() != num_layers) {
      throw config_error("expected " + std::to_string(num_layers) + " FDR targets, got " + std::to_string(q.size()));
    }
    for (double v : q) {
      if (!(v > 0.0 && v < 1.0)) throw config_error("FDR targets must lie in (0,1)");
    }
  }

  double factor(Index groups) const {
    return correction == Correction::cpf ? bounds::cpf_formula(static_cast<double>(groups)) : 1.0;
  }
};

struct PfilterResult {
  SelectionSet selection;
  ThresholdVector thresholds;
};

namespace detail {

inline std::vector<bool> pvalue_passing(const PValueLayers& layers, std::span<const double> t, const LayerSpec& spec,
                                        Index skip) {
  std::vector<bool> pass(spec.num_variables(), true);
  for (Index m = 0; m < spec.num_layers(); ++m) {
    if (m == skip) continue;
    for (Index j = 0; j < spec.num_variables(); ++j) {
      if (pass[j] && !(layers.values[m][spec.group_of(j, m)] <= t[m])) pass[j] = false;
    }
  }
  return pass;
}

}  // namespace detail

/// Variables in S(t) = {j : p^m_{g(j,m)} <= t_m for all m}.
inline std::vector<Index> pvalue_selected(const PValueLayers& layers, std::span<const double> t,
                                          const LayerSpec& spec) {
  const auto pass = detail::pvalue_passing(layers, t, spec, spec.num_layers());
  std::vector<Index> out;
  for (Index j = 0; j < pass.size(); ++j) {
    if (pass[j]) out.push_back(j);
  }
  return out;
}

/// factor * G_m * t_m / max(1, |S_m(t)|).
inline double pfilter_fdp_hat(const PValueLayers& layers, std::span<const double> t, Index m, const LayerSpec& spec,
                              const PfilterConfig& cfg) {
  const auto sel = induce_group_selections(pvalue_selected(layers, t, spec), spec);
  const double groups = static_cast<double>(spec.num_groups(m));
  return cfg.factor(spec.num_groups(m)) * groups * t[m] /
         static_cast<double>(std::max<std::size_t>(1, sel.layer_groups[m].size()));
}

/// Coordinatewise-maximal threshold vector with every FDP_hat_m <= q_m, searched over the
/// grids {p^m_g} U {0} by lowering one coordinate at a time from the top.
inline PfilterResult generalized_pfilter(const PValueLayers& layers, const LayerSpec& spec, const PfilterConfig& cfg) {
  layers.validate(spec);
  cfg.validate(spec.num_layers());
  const Index M = spec.num_layers();
  PfilterResult res;
  res.thresholds.grids.resize(M);
  std::vector<std::size_t> pos(M);
  std::vector<double> t(M);
  std::vector<double> factor(M);
  for (Index m = 0; m < M; ++m) {
    auto& grid = res.thresholds.grids[m];
    grid = layers.values[m];
    grid.push_back(0.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    pos[m] = grid.size() - 1;
    t[m] = grid[pos[m]];
    factor[m] = cfg.factor(spec.num_groups(m));
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (Index m = 0; m < M; ++m) {
      const auto pass = detail::pvalue_passing(layers, t, spec, m);
      std::vector<double> eligible;  // p-values of groups that contain a variable passing at the other layers
      for (Index g = 0; g < spec.num_groups(m); ++g) {
        for (Index j : spec.layer(m).group(g)) {
          if (pass[j]) {
            eligible.push_back(layers.values[m][g]);
            break;
          }
        }
      }
      std::sort(eligible.begin(), eligible.end());
      const auto& grid = res.thresholds.grids[m];
      const double groups = static_cast<double>(spec.num_groups(m));
      std::size_t k = pos[m];
      for (; k > 0; --k) {
        const auto selected = static_cast<std::size_t>(
            std::upper_bound(eligible.begin(), eligible.end(), grid[k]) - eligible.begin());
        const double fdp = factor[m] * groups * grid[k] / static_cast<double>(std::max<std::size_t>(1, selected));
        if (fdp <= cfg.q[m]) break;
      }
      if (k != pos[m]) {
        pos[m] = k;
        t[m] = grid[k];
        changed = true;
      }
    }
  }
  res.thresholds.t = t;
  res.selection = induce_group_selections(pvalue_selected(layers, t, spec), spec);
  return res;
}

}  // namespace mlkf

#endif  // MLKF_PFILTER_HPP
