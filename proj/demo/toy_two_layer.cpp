// Two-layer toy run: 40 variables in 8 groups of 5, signal in two groups.
#include <cstdio>

#include "mlkf/mlkf.hpp"

int main() {
  using namespace mlkf;
  const Index n = 200, N = 40;
  const LayerSpec spec(N, {Partition::singletons(N), Partition::contiguous(N, 5)});
  Dataset ds = sim::gen_ar1_design(n, N, 0.2, 11);
  const GroundTruth truth(spec, {0, 1, 2, 5, 6});
  const Eigen::VectorXd beta = sim::beta_for_snr(ds, truth, 1.0);
  Rng rng(12);
  ds.y = ds.X * beta + standard_normal_matrix(static_cast<Eigen::Index>(n), 1, rng).col(0);
  ds = standardize(ds);

  const auto designs = build_layer_designs(ds, spec, 13);
  const FilterConfig cfg{{0.2, 0.2}, Variant::basic, 1.0};
  const auto res = run_mkf(ds, spec, designs, PenaltySpec{PenaltyKind::l1}, Combiner::signed_max, cfg);

  std::printf("selected variables:");
  for (Index j : res.selection.variables) std::printf(" %zu", j + 1);
  std::printf("\n");
  const auto metrics = fdp_and_power(res.selection, truth, spec);
  for (Index m = 0; m < spec.num_layers(); ++m) {
    std::printf("layer %zu: t = %g, FDP = %.3f, power = %.3f\n", m + 1, res.thresholds.t[m], metrics[m].fdp,
                metrics[m].power);
  }
  return 0;
}
