// Recover the column space of a 500 x 1000 matrix with 20% outlier columns
// from a 100-column, 50-row sketch, then report the verdict.

#include "rsr/rsr.hpp"

#include <iostream>

int main() {
  rsr::SyntheticParams params;
  params.n1 = 500;
  params.n2 = 1000;
  params.rank = 5;
  params.outlier_prob = 0.2;
  params.seed = 7;
  const auto instance = rsr::generate_synthetic(params);

  const auto plan = rsr::SketchPlan::for_alg1(100, 50, rsr::Design::red, 11);
  const auto result = rsr::recover_subspace_alg1(instance, plan);
  const auto verdict = rsr::classify_recovery(instance, result.basis, result.report);

  std::cout << "sampled columns:  " << result.sketch.effective_m1 << '\n'
            << "estimated rank:   " << result.basis.est_rank << '\n'
            << "outliers found:   " << result.report.outliers().size() << " of "
            << instance.outlier_indices->size() << '\n'
            << "subspace error:   " << verdict.subspace_error << '\n'
            << "exact recovery:   " << (verdict.exact ? "yes" : "no") << '\n';
  return verdict.exact ? 0 : 1;
}
