#ifndef MLKF_CORE_MODEL_HPP
#define MLKF_CORE_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mlkf/error.hpp"

namespace mlkf {

using Index = std::size_t;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One layer: a partition of {0..N-1} into disjoint groups.
class Partition {
 public:
  Partition() = default;

  /// Builds from a per-variable group label (0-based, dense in 0..G-1).
  static Partition from_labels(std::vector<Index> group_of) {
    Partition p;
    Index num_groups = 0;
    for (Index g : group_of) num_groups = std::max(num_groups, g + 1);
    p.groups_.assign(num_groups, {});
    for (Index j = 0; j < group_of.size(); ++j) p.groups_[group_of[j]].push_back(j);
    for (Index g = 0; g < num_groups; ++g) {
      if (p.groups_[g].empty()) {
        throw input_error("partition has an empty group " + std::to_string(g + 1) +
                          "; group labels must be dense");
      }
    }
    p.group_of_ = std::move(group_of);
    return p;
  }

  /// Builds from explicit groups; they must be disjoint and cover {0..N-1}.
  static Partition from_groups(Index num_variables, std::vector<std::vector<Index>> groups) {
    std::vector<Index> labels(num_variables, num_variables);
    for (Index g = 0; g < groups.size(); ++g) {
      if (groups[g].empty()) throw input_error("partition contains an empty group");
      for (Index j : groups[g]) {
        if (j >= num_variables) throw input_error("variable index out of range in partition");
        if (labels[j] != num_variables) {
          throw input_error("variable " + std::to_string(j + 1) + " appears in two groups");
        }
        labels[j] = g;
      }
    }
    for (Index j = 0; j < num_variables; ++j) {
      if (labels[j] == num_variables) {
        throw input_error("variable " + std::to_string(j + 1) + " is not covered by the partition");
      }
    }
    Partition p;
    p.group_of_ = std::move(labels);
    p.groups_ = std::move(groups);
    for (auto& g : p.groups_) std::sort(g.begin(), g.end());
    return p;
  }

  static Partition singletons(Index num_variables) {
    std::vector<Index> labels(num_variables);
    for (Index j = 0; j < num_variables; ++j) labels[j] = j;
    return from_labels(std::move(labels));
  }

  /// Consecutive blocks of `size` variables, shifted by `offset`; blocks wrap around the end.
  static Partition contiguous(Index num_variables, Index size, Index offset = 0) {
    if (size == 0 || num_variables % size != 0) {
      throw input_error("group size must divide the number of variables");
    }
    std::vector<Index> labels(num_variables);
    for (Index j = 0; j < num_variables; ++j) {
      Index shifted = (j + num_variables - offset % num_variables) % num_variables;
      labels[j] = shifted / size;
    }
    return from_labels(std::move(labels));
  }

  Index num_variables() const { return group_of_.size(); }
  Index num_groups() const { return groups_.size(); }
  Index group_of(Index j) const { return group_of_.at(j); }
  const std::vector<Index>& group(Index g) const { return groups_.at(g); }
  const std::vector<std::vector<Index>>& groups() const { return groups_; }
  const std::vector<Index>& labels() const { return group_of_; }

  bool operator==(const Partition&) const = default;

 private:
  std::vector<Index> group_of_;
  std::vector<std::vector<Index>> groups_;
};

/// The M partitions of the variable set, one per layer.
class LayerSpec {
 public:
  LayerSpec() = default;
  LayerSpec(Index num_variables, std::vector<Partition> layers)
      : num_variables_(num_variables), layers_(std::move(layers)) {
    if (num_variables_ == 0) throw input_error("LayerSpec needs at least one variable");
    if (layers_.empty()) throw input_error("LayerSpec needs at least one layer");
    for (Index m = 0; m < layers_.size(); ++m) {
      if (layers_[m].num_variables() != num_variables_) {
        throw input_error("layer " + std::to_string(m + 1) + " does not cover all " +
                          std::to_string(num_variables_) + " variables");
      }
    }
  }

  Index num_variables() const { return num_variables_; }
  Index num_layers() const { return layers_.size(); }
  Index num_groups(Index m) const { return layers_.at(m).num_groups(); }
  Index group_of(Index j, Index m) const { return layers_.at(m).group_of(j); }
  const Partition& layer(Index m) const { return layers_.at(m); }
  const std::vector<Partition>& layers() const { return layers_; }

 private:
  Index num_variables_ = 0;
  std::vector<Partition> layers_;
};

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  bool standardized = false;
  // Populated by standardize(): original column means and centered norms, and the mean of y.
  Eigen::VectorXd column_means;
  Eigen::VectorXd column_scales;
  double y_mean = 0.0;

  Dataset() = default;
  Dataset(Eigen::MatrixXd x, Eigen::VectorXd response) : X(std::move(x)), y(std::move(response)) {
    validate();
  }

  Index n() const { return static_cast<Index>(X.rows()); }
  Index num_variables() const { return static_cast<Index>(X.cols()); }

  void validate() const {
    if (X.rows() < 1 || X.cols() < 1) throw dimension_error("design matrix must be non-empty");
    if (y.size() != X.rows()) {
      throw dimension_error("response has " + std::to_string(y.size()) + " entries but X has " +
                            std::to_string(X.rows()) + " rows");
    }
    if (!X.allFinite()) throw input_error("design matrix contains non-finite entries");
    if (!y.allFinite()) throw input_error("response contains non-finite entries");
  }
};

struct SelectionSet {
  std::vector<Index> variables;                 // sorted
  std::vector<std::vector<Index>> layer_groups;  // sorted, one list per layer
};

/// Non-null variables; a group is null at a layer iff all of its variables are null.
class GroundTruth {
 public:
  GroundTruth(const LayerSpec& spec, std::vector<Index> nonnull) : nonnull_(std::move(nonnull)) {
    std::sort(nonnull_.begin(), nonnull_.end());
    nonnull_.erase(std::unique(nonnull_.begin(), nonnull_.end()), nonnull_.end());
    is_nonnull_.assign(spec.num_variables(), false);
    for (Index j : nonnull_) {
      if (j >= spec.num_variables()) throw input_error("non-null index out of range");
      is_nonnull_[j] = true;
    }
    group_nonnull_.resize(spec.num_layers());
    for (Index m = 0; m < spec.num_layers(); ++m) {
      group_nonnull_[m].assign(spec.num_groups(m), false);
      for (Index j : nonnull_) group_nonnull_[m][spec.group_of(j, m)] = true;
    }
  }

  const std::vector<Index>& nonnull_variables() const { return nonnull_; }
  bool variable_nonnull(Index j) const { return is_nonnull_.at(j); }
  bool group_nonnull(Index m, Index g) const { return group_nonnull_.at(m).at(g); }
  Index num_nonnull_groups(Index m) const {
    return static_cast<Index>(std::count(group_nonnull_.at(m).begin(), group_nonnull_.at(m).end(), true));
  }

 private:
  std::vector<Index> nonnull_;
  std::vector<bool> is_nonnull_;
  std::vector<std::vector<bool>> group_nonnull_;
};

/// A threshold per layer together with the candidate grids it was searched over.
struct ThresholdVector {
  std::vector<double> t;
  std::vector<std::vector<double>> grids;
};

inline SelectionSet induce_group_selections(std::vector<Index> vars, const LayerSpec& spec) {
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  SelectionSet sel;
  sel.layer_groups.resize(spec.num_layers());
  for (Index j : vars) {
    if (j >= spec.num_variables()) {
      throw input_error("selected variable " + std::to_string(j + 1) + " out of range");
    }
  }
  for (Index m = 0; m < spec.num_layers(); ++m) {
    std::vector<bool> hit(spec.num_groups(m), false);
    for (Index j : vars) hit[spec.group_of(j, m)] = true;
    for (Index g = 0; g < hit.size(); ++g) {
      if (hit[g]) sel.layer_groups[m].push_back(g);
    }
  }
  sel.variables = std::move(vars);
  return sel;
}

namespace detail {
inline bool column_is_standard(const Eigen::Ref<const Eigen::VectorXd>& c) {
  return std::abs(c.mean()) <= 1e-10 && std::abs(c.norm() - 1.0) <= 1e-8;
}
}  // namespace detail

/// Centers every column and scales it to unit Euclidean norm; centers y.
/// Columns that already satisfy the standardized invariant are left untouched, so the
/// operation is an exact fixed point on standardized input.
inline Dataset standardize(const Dataset& ds) {
  ds.validate();
  Dataset out = ds;
  const Index p = ds.num_variables();
  out.column_means = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  out.column_scales = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));
  for (Index j = 0; j < p; ++j) {
    const auto col = ds.X.col(static_cast<Eigen::Index>(j));
    if (detail::column_is_standard(col)) continue;
    const double mean = col.mean();
    Eigen::VectorXd centered = col.array() - mean;
    const double norm = centered.norm();
    const double scale = std::max(1.0, col.cwiseAbs().maxCoeff());
    if (!(norm > 1e-12 * scale * std::sqrt(static_cast<double>(ds.n())))) {
      throw degenerate_input_error("column " + std::to_string(j + 1) + " of X has zero variance");
    }
    out.X.col(static_cast<Eigen::Index>(j)) = centered / norm;
    out.column_means[static_cast<Eigen::Index>(j)] = mean;
    out.column_scales[static_cast<Eigen::Index>(j)] = norm;
  }
  const double ym = ds.y.mean();
  if (std::abs(ym) > 1e-10) {
    out.y = ds.y.array() - ym;
    out.y_mean = ym;
  }
  out.standardized = true;
  return out;
}

struct LayerMetrics {
  double fdp = 0.0;
  double power = 0.0;
};

/// Per-layer false discovery proportion (0/0 = 0) and power against a known truth.
inline std::vector<LayerMetrics> fdp_and_power(const SelectionSet& sel, const GroundTruth& truth,
                                               const LayerSpec& spec) {
  std::vector<LayerMetrics> out(spec.num_layers());
  for (Index m = 0; m < spec.num_layers(); ++m) {
    const auto& groups = sel.layer_groups.at(m);
    Index false_hits = 0;
    Index true_hits = 0;
    for (Index g : groups) {
      if (truth.group_nonnull(m, g)) {
        ++true_hits;
      } else {
        ++false_hits;
      }
    }
    out[m].fdp = groups.empty() ? 0.0 : static_cast<double>(false_hits) / static_cast<double>(groups.size());
    const Index nonnull = truth.num_nonnull_groups(m);
    out[m].power = nonnull == 0 ? 0.0 : static_cast<double>(true_hits) / static_cast<double>(nonnull);
  }
  return out;
}

}  // namespace mlkf

#endif  // MLKF_CORE_MODEL_HPP
