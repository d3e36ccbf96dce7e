#ifndef MLKF_TESTS_TEST_UTIL_HPP
#define MLKF_TESTS_TEST_UTIL_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlkf/core_model.hpp"
#include "mlkf/rng.hpp"
#include "oracles.hpp"

namespace testutil {

using mlkf::Index;

inline Eigen::MatrixXd random_spd(Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) a(i, j) = normal(rng);
  }
  Eigen::MatrixXd s = a * a.transpose() / static_cast<double>(p) + 0.2 * Eigen::MatrixXd::Identity(p, p);
  const Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
  return d.asDiagonal() * s * d.asDiagonal();
}

// Random partition of {0..N-1} into at most max_groups non-empty groups.
inline mlkf::Partition random_partition(Index N, Index max_groups, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> pick(1, std::min(N, max_groups));
  const Index G = pick(rng);
  std::vector<Index> perm(N);
  for (Index j = 0; j < N; ++j) perm[j] = j;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Index> labels(N);
  for (Index i = 0; i < N; ++i) labels[perm[i]] = i < G ? i : std::uniform_int_distribution<Index>(0, G - 1)(rng);
  return mlkf::Partition::from_labels(labels);
}

inline mlkf::Dataset random_standardized(Index n, Index N, std::uint64_t seed) {
  mlkf::Rng rng(seed);
  Eigen::MatrixXd x = mlkf::standard_normal_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(N), rng);
  Eigen::VectorXd y = mlkf::standard_normal_matrix(static_cast<Eigen::Index>(n), 1, rng).col(0);
  return mlkf::standardize(mlkf::Dataset(x, y));
}

inline oracle::Labels labels_of(const mlkf::LayerSpec& spec) {
  oracle::Labels out;
  for (const auto& p : spec.layers()) out.push_back(p.labels());
  return out;
}

// Random statistics whose magnitudes come from a small pool so grids stay short.
inline std::vector<double> random_statistics(Index G, Index distinct, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> level(0, distinct);
  std::bernoulli_distribution positive(0.7);
  std::vector<double> w(G);
  for (auto& v : w) {
    const Index l = level(rng);
    v = l == 0 ? 0.0 : static_cast<double>(l) * (positive(rng) ? 1.0 : -1.0);
  }
  return w;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testutil

#endif  // MLKF_TESTS_TEST_UTIL_HPP
