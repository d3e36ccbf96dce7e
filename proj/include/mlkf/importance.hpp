#ifndef MLKF_IMPORTANCE_HPP
#define MLKF_IMPORTANCE_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mlkf/core_model.hpp"
#include "mlkf/error.hpp"
#include "mlkf/group_knockoffs.hpp"

namespace mlkf {

enum class PenaltyKind { l1, group_l2 };
enum class Combiner { difference, signed_max };

inline PenaltyKind parse_penalty(std::string_view s) {
  if (s == "l1") return PenaltyKind::l1;
  if (s == "group_l2") return PenaltyKind::group_l2;
  throw config_error("unknown penalty '" + std::string(s) + "' (expected l1 or group_l2)");
}

inline Combiner parse_combiner(std::string_view s) {
  if (s == "difference") return Combiner::difference;
  if (s == "signed_max") return Combiner::signed_max;
  throw config_error("unknown combiner '" + std::string(s) + "' (expected difference or signed_max)");
}

inline std::string to_string(PenaltyKind k) { return k == PenaltyKind::l1 ? "l1" : "group_l2"; }
inline std::string to_string(Combiner c) { return c == Combiner::difference ? "difference" : "signed_max"; }

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::l1;
  std::size_t grid_size = 100;
  double min_ratio = 1e-3;
  // When non-empty, used verbatim instead of the geometric grid anchored at lambda_max.
  std::vector<double> lambda_grid;
};

struct SolverOptions {
  double tolerance = 1e-8;          // on coordinate updates, relative to lambda_max
  double nonzero_threshold = 1e-9;  // relative to lambda_max
  int max_iterations = 10000;       // sweeps per grid point
};

struct ImportancePair {
  std::vector<double> Z;
  std::vector<double> Z_tilde;
  std::vector<double> lambda_grid;
};

struct KnockoffStatistics {
  std::vector<double> W;
  Combiner combiner = Combiner::signed_max;
};

/// Geometric grid from lambda_max down to min_ratio * lambda_max.
inline std::vector<double> geometric_grid(double lambda_max, std::size_t size, double min_ratio) {
  if (size < 2) throw config_error("lambda grid needs at least two points");
  if (!(min_ratio > 0.0 && min_ratio < 1.0)) throw config_error("lambda grid ratio must be in (0,1)");
  std::vector<double> grid(size);
  for (std::size_t k = 0; k < size; ++k) {
    grid[k] = lambda_max * std::pow(min_ratio, static_cast<double>(k) / static_cast<double>(size - 1));
  }
  return grid;
}

inline void validate_grid(const std::vector<double>& grid) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0.0) || !std::isfinite(grid[k])) throw config_error("lambda grid must be positive");
    if (k > 0 && !(grid[k] < grid[k - 1])) throw config_error("lambda grid must be strictly decreasing");
  }
}

namespace detail {

/// Blocks of the augmented problem: original groups first, then their knockoff copies.
inline std::vector<std::vector<Eigen::Index>> augmented_blocks(const Partition& partition) {
  const auto p = static_cast<Eigen::Index>(partition.num_variables());
  std::vector<std::vector<Eigen::Index>> blocks;
  blocks.reserve(2 * partition.num_groups());
  for (int copy = 0; copy < 2; ++copy) {
    for (const auto& g : partition.groups()) {
      std::vector<Eigen::Index> b;
      b.reserve(g.size());
      for (Index j : g) b.push_back(static_cast<Eigen::Index>(j) + copy * p);
      blocks.push_back(std::move(b));
    }
  }
  return blocks;
}

inline double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

}  // namespace detail

/// Entry values of each original and knockoff group along a warm-started penalized
/// regression path. Works only on the augmented Gram matrix and X^T y.
inline ImportancePair penalized_path(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty,
                                     const Partition& partition, const PenaltySpec& pen,
                                     const SolverOptions& opts = {}) {
  const Index p = partition.num_variables();
  const auto p2 = static_cast<Eigen::Index>(2 * p);
  if (gram.rows() != p2 || gram.cols() != p2 || xty.size() != p2) {
    throw dimension_error("augmented Gram must be 2N x 2N with N = " + std::to_string(p));
  }
  const Index num_groups = partition.num_groups();
  const auto blocks = detail::augmented_blocks(partition);
  std::vector<double> weight(blocks.size(), 1.0);
  if (pen.kind == PenaltyKind::group_l2) {
    for (std::size_t b = 0; b < blocks.size(); ++b) weight[b] = std::sqrt(static_cast<double>(blocks[b].size()));
  }

  double lambda_max = 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    double dual = 0.0;
    if (pen.kind == PenaltyKind::l1) {
      for (auto j : blocks[b]) dual = std::max(dual, std::abs(xty[j]));
    } else {
      for (auto j : blocks[b]) dual += xty[j] * xty[j];
      dual = std::sqrt(dual) / weight[b];
    }
    lambda_max = std::max(lambda_max, dual);
  }

  ImportancePair out;
  out.Z.assign(num_groups, 0.0);
  out.Z_tilde.assign(num_groups, 0.0);
  if (!pen.lambda_grid.empty()) {
    validate_grid(pen.lambda_grid);
    out.lambda_grid = pen.lambda_grid;
  } else if (lambda_max > 0.0) {
    out.lambda_grid = geometric_grid(lambda_max, pen.grid_size, pen.min_ratio);
  }
  if (!(lambda_max > 0.0) || out.lambda_grid.empty()) return out;
  const double scale = std::max(lambda_max, out.lambda_grid.front());

  // Largest eigenvalue of each diagonal block: step size for the block proximal update.
  std::vector<double> lipschitz(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].size() == 1 || pen.kind == PenaltyKind::l1) continue;
    const auto k = static_cast<Eigen::Index>(blocks[b].size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
      for (Eigen::Index c = 0; c < k; ++c) sub(r, c) = gram(blocks[b][r], blocks[b][c]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub, Eigen::EigenvaluesOnly);
    lipschitz[b] = es.eigenvalues().maxCoeff();
  }
  for (Eigen::Index j = 0; j < p2; ++j) {
    if (!(gram(j, j) > 0.0)) throw degenerate_input_error("augmented design has a zero column");
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p2);
  Eigen::VectorXd resid = xty;  // X^T y - G beta
  std::vector<bool> entered(blocks.size(), false);
  std::size_t num_entered = 0;

  // One pass over the given blocks at level lambda; returns the largest scaled update.
  auto sweep = [&](double lambda, const std::vector<std::size_t>& which) {
    double max_change = 0.0;
    for (std::size_t b : which) {
      const auto& blk = blocks[b];
      if (pen.kind == PenaltyKind::l1 || blk.size() == 1) {
        for (auto j : blk) {
          const double gjj = gram(j, j);
          const double old = beta[j];
          const double fresh = detail::soft_threshold(resid[j] + gjj * old, lambda * weight[b]) / gjj;
          const double delta = fresh - old;
          if (delta != 0.0) {
            beta[j] = fresh;
            resid.noalias() -= gram.col(j) * delta;
            max_change = std::max(max_change, std::abs(delta) * gjj);
          }
        }
      } else {
        const double step = lipschitz[b];
        double norm2 = 0.0;
        std::vector<double> u(blk.size());
        for (std::size_t i = 0; i < blk.size(); ++i) {
          u[i] = beta[blk[i]] + resid[blk[i]] / step;
          norm2 += u[i] * u[i];
        }
        const double norm = std::sqrt(norm2);
        const double shrink = norm > 0.0 ? std::max(0.0, 1.0 - lambda * weight[b] / (step * norm)) : 0.0;
        for (std::size_t i = 0; i < blk.size(); ++i) {
          const auto j = blk[i];
          const double delta = shrink * u[i] - beta[j];
          if (delta != 0.0) {
            beta[j] += delta;
            resid.noalias() -= gram.col(j) * delta;
            max_change = std::max(max_change, std::abs(delta) * step);
          }
        }
      }
    }
    return max_change;
  };

  std::vector<std::size_t> all_blocks(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) all_blocks[b] = b;
  const double tol = opts.tolerance * scale;
  const double nonzero = opts.nonzero_threshold * scale;

  // With scalar penalties the solution on a fixed active set and sign pattern solves
  // G_AA beta_A = (X^T y)_A - lambda w_A sign_A. Near-collinear knockoff pairs make coordinate
  // descent crawl, so once it stalls we jump to that solution and let a full sweep confirm it.
  bool scalar = pen.kind == PenaltyKind::l1;
  if (!scalar) {
    scalar = std::all_of(blocks.begin(), blocks.end(), [](const auto& blk) { return blk.size() == 1; });
  }
  std::vector<double> coord_weight(static_cast<std::size_t>(p2), 1.0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (auto j : blocks[b]) coord_weight[static_cast<std::size_t>(j)] = weight[b];
  }
  std::vector<Eigen::Index> factored;  // support whose G_AA factor is cached
  Eigen::LLT<Eigen::MatrixXd> factor;
  // Fast jump: solve on the current support and signs, drop every coordinate whose sign flips,
  // add every KKT violator, repeat. Exact when it stops, but it can cycle.
  auto greedy_jump = [&](double lambda) {
    std::vector<Eigen::Index> act;
    std::vector<double> sign;
    for (Eigen::Index j = 0; j < p2; ++j) {
      if (beta[j] != 0.0) {
        act.push_back(j);
        sign.push_back(beta[j] > 0.0 ? 1.0 : -1.0);
      }
    }
    Eigen::VectorXd sol;
    for (int round = 0; round < 20; ++round) {
      if (act.empty()) return false;
      const auto k = static_cast<Eigen::Index>(act.size());
      if (act != factored) {
        Eigen::MatrixXd gaa(k, k);
        for (Eigen::Index r = 0; r < k; ++r) {
          for (Eigen::Index c = 0; c < k; ++c) gaa(r, c) = gram(act[r], act[c]);
        }
        factor.compute(gaa);
        if (factor.info() != Eigen::Success) {
          factored.clear();
          return false;
        }
        factored = act;
      }
      Eigen::VectorXd rhs(k);
      for (Eigen::Index r = 0; r < k; ++r) {
        rhs[r] = xty[act[r]] - lambda * coord_weight[static_cast<std::size_t>(act[r])] * sign[r];
      }
      sol = factor.solve(rhs);
      std::vector<Eigen::Index> kept;
      std::vector<double> kept_sign;
      for (Eigen::Index r = 0; r < k; ++r) {
        if (sol[r] * sign[r] > 0.0) {
          kept.push_back(act[r]);
          kept_sign.push_back(sign[r]);
        }
      }
      if (kept.size() != act.size()) {
        act = std::move(kept);
        sign = std::move(kept_sign);
        continue;
      }
      Eigen::VectorXd grad = xty;
      for (Eigen::Index r = 0; r < k; ++r) grad.noalias() -= gram.col(act[r]) * sol[r];
      std::vector<bool> in(static_cast<std::size_t>(p2), false);
      for (auto j : act) in[static_cast<std::size_t>(j)] = true;
      bool added = false;
      for (Eigen::Index j = 0; j < p2; ++j) {
        if (in[static_cast<std::size_t>(j)]) continue;
        if (std::abs(grad[j]) > lambda * coord_weight[static_cast<std::size_t>(j)] * (1.0 + 1e-12)) {
          act.push_back(j);
          sign.push_back(grad[j] > 0.0 ? 1.0 : -1.0);
          added = true;
        }
      }
      if (added) {
        std::vector<std::size_t> order(act.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return act[x] < act[y]; });
        std::vector<Eigen::Index> sorted_act;
        std::vector<double> sorted_sign;
        for (auto i : order) {
          sorted_act.push_back(act[i]);
          sorted_sign.push_back(sign[i]);
        }
        act = std::move(sorted_act);
        sign = std::move(sorted_sign);
        continue;
      }
      beta.setZero();
      for (Eigen::Index r = 0; r < k; ++r) beta[act[r]] = sol[r];
      resid = grad;
      return true;
    }
    return false;
  };
  // Fallback when the fast jump cycles: solve on the current support and signs,
  // move toward that solution only until the first coordinate reaches zero and drop it; once
  // the support solution is sign-consistent, add the worst KKT violator. The objective
  // decreases at every step, so supports never repeat.
  auto safe_jump = [&](double lambda) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index j = 0; j < p2; ++j) {
      if (beta[j] != 0.0) act.push_back(j);
    }
    if (act.empty()) return false;
    Eigen::VectorXd b = beta;
    std::vector<double> sgn(static_cast<std::size_t>(p2), 0.0);
    for (auto j : act) sgn[static_cast<std::size_t>(j)] = b[j] > 0.0 ? 1.0 : -1.0;
    const int max_rounds = 4 * static_cast<int>(p2) + 20;
    for (int round = 0; round < max_rounds; ++round) {
      if (act.empty()) return false;
      std::sort(act.begin(), act.end());
      const auto k = static_cast<Eigen::Index>(act.size());
      if (act != factored) {
        Eigen::MatrixXd gaa(k, k);
        for (Eigen::Index r = 0; r < k; ++r) {
          for (Eigen::Index c = 0; c < k; ++c) gaa(r, c) = gram(act[r], act[c]);
        }
        factor.compute(gaa);
        if (factor.info() != Eigen::Success) {
          factored.clear();
          return false;
        }
        factored = act;
      }
      Eigen::VectorXd rhs(k);
      Eigen::VectorXd sign_of(k);
      for (Eigen::Index r = 0; r < k; ++r) {
        sign_of[r] = sgn[static_cast<std::size_t>(act[r])];
        rhs[r] = xty[act[r]] - lambda * coord_weight[static_cast<std::size_t>(act[r])] * sign_of[r];
      }
      const Eigen::VectorXd sol = factor.solve(rhs);
      double step = 1.0;
      Eigen::Index blocking = -1;
      for (Eigen::Index r = 0; r < k; ++r) {
        if (sol[r] * sign_of[r] > 0.0) continue;
        const double bj = b[act[r]];
        if (bj == 0.0) return false;  // a freshly added coordinate pointing the wrong way
        const double t = bj / (bj - sol[r]);
        if (t < step) {
          step = t;
          blocking = r;
        }
      }
      if (blocking >= 0) {
        std::vector<Eigen::Index> kept;
        for (Eigen::Index r = 0; r < k; ++r) {
          const auto j = act[r];
          b[j] += step * (sol[r] - b[j]);
          if (r == blocking || b[j] * sign_of[r] <= 0.0) {
            b[j] = 0.0;
          } else {
            kept.push_back(j);
          }
        }
        act = std::move(kept);
        continue;
      }
      for (Eigen::Index r = 0; r < k; ++r) b[act[r]] = sol[r];
      Eigen::VectorXd grad = xty;
      for (Eigen::Index r = 0; r < k; ++r) grad.noalias() -= gram.col(act[r]) * sol[r];
      Eigen::Index worst = -1;
      double worst_excess = 0.0;
      std::vector<bool> in(static_cast<std::size_t>(p2), false);
      for (auto j : act) in[static_cast<std::size_t>(j)] = true;
      for (Eigen::Index j = 0; j < p2; ++j) {
        if (in[static_cast<std::size_t>(j)]) continue;
        const double excess = std::abs(grad[j]) - lambda * coord_weight[static_cast<std::size_t>(j)] * (1.0 + 1e-12);
        if (excess > worst_excess) {
          worst_excess = excess;
          worst = j;
        }
      }
      if (worst < 0) {
        beta = b;
        resid = grad;
        return true;
      }
      act.push_back(worst);
      sgn[static_cast<std::size_t>(worst)] = grad[worst] > 0.0 ? 1.0 : -1.0;
    }
    return false;
  };
  auto newton = [&](double lambda) { return greedy_jump(lambda) || safe_jump(lambda); };
  constexpr int kStallSweeps = 20;

  for (double lambda : out.lambda_grid) {
    int iterations = 0;
    bool converged = false;
    int newton_attempts = 0;
    // Reusing the factor from the previous grid point costs only two triangular solves.
    if (scalar && !factored.empty()) newton(lambda);
    while (!converged) {
      if (++iterations > opts.max_iterations) {
        throw solver_error("coordinate descent did not converge at lambda = " + std::to_string(lambda), lambda);
      }
      const double full_change = sweep(lambda, all_blocks);
      if (full_change <= tol) {
        converged = true;
        break;
      }
      std::vector<std::size_t> active;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (auto j : blocks[b]) {
          if (beta[j] != 0.0) {
            active.push_back(b);
            break;
          }
        }
      }
      int inner = 0;
      while (true) {
        if (++iterations > opts.max_iterations) {
          throw solver_error("coordinate descent did not converge at lambda = " + std::to_string(lambda), lambda);
        }
        if (sweep(lambda, active) <= tol) break;
        if (scalar && ++inner % kStallSweeps == 0 && newton_attempts < 5) {
          ++newton_attempts;
          if (newton(lambda)) break;
        }
      }
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (entered[b]) continue;
      for (auto j : blocks[b]) {
        if (std::abs(beta[j]) * gram(j, j) > nonzero) {
          entered[b] = true;
          ++num_entered;
          if (b < num_groups) {
            out.Z[b] = lambda;
          } else {
            out.Z_tilde[b - num_groups] = lambda;
          }
          break;
        }
      }
    }
    if (num_entered == blocks.size()) break;
  }
  return out;
}

/// Same, from an augmented dataset whose columns are [X, X~].
inline ImportancePair penalized_path(const Dataset& augmented, const Partition& partition, const PenaltySpec& pen,
                                     const SolverOptions& opts = {}) {
  augmented.validate();
  if (augmented.num_variables() != 2 * partition.num_variables()) {
    throw dimension_error("augmented dataset must have 2N columns");
  }
  const Eigen::MatrixXd gram = augmented.X.transpose() * augmented.X;
  const Eigen::VectorXd xty = augmented.X.transpose() * augmented.y;
  return penalized_path(gram, xty, partition, pen, opts);
}

/// Antisymmetric contrast f(a, b) = -f(b, a).
inline double combine(double z, double z_tilde, Combiner combiner) {
  switch (combiner) {
    case Combiner::difference:
      return z - z_tilde;
    case Combiner::signed_max: {
      if (z > z_tilde) return std::max(z, z_tilde);
      if (z < z_tilde) return -std::max(z, z_tilde);
      return 0.0;
    }
  }
  throw config_error("unknown combiner");
}

inline KnockoffStatistics combine(const ImportancePair& pair, Combiner combiner) {
  if (pair.Z.size() != pair.Z_tilde.size()) throw dimension_error("Z and Z~ lengths differ");
  KnockoffStatistics stats;
  stats.combiner = combiner;
  stats.W.resize(pair.Z.size());
  for (std::size_t g = 0; g < pair.Z.size(); ++g) stats.W[g] = combine(pair.Z[g], pair.Z_tilde[g], combiner);
  return stats;
}

/// Importance pair for one layer from the data and that layer's knockoff design.
inline ImportancePair layer_importance(const Dataset& ds, const KnockoffDesign& design, const Partition& partition,
                                       const PenaltySpec& pen, const SolverOptions& opts = {}) {
  if (design.X_tilde.rows() != ds.X.rows() || design.X_tilde.cols() != ds.X.cols()) {
    throw dimension_error("knockoff design does not match the dataset");
  }
  if (static_cast<Index>(ds.X.cols()) != partition.num_variables()) {
    throw dimension_error("partition does not match the dataset");
  }
  const Eigen::Index p = ds.X.cols();
  const Eigen::MatrixXd gram = augmented_gram(ds.X, design.X_tilde);
  Eigen::VectorXd xty(2 * p);
  xty.head(p) = ds.X.transpose() * ds.y;
  xty.tail(p) = design.X_tilde.transpose() * ds.y;
  return penalized_path(gram, xty, partition, pen, opts);
}

inline KnockoffStatistics compute_layer_statistics(const Dataset& ds, const KnockoffDesign& design,
                                                   const Partition& partition, const PenaltySpec& pen,
                                                   Combiner combiner, const SolverOptions& opts = {}) {
  return combine(layer_importance(ds, design, partition, pen, opts), combiner);
}

}  // namespace mlkf

#endif  // MLKF_IMPORTANCE_HPP
