#include "checks.hpp"

#include <gtest/gtest.h>

using namespace rsr;

namespace {

ConvexSolveConfig with_lambda(double lambda) {
  ConvexSolveConfig cfg;
  cfg.lambda = lambda;
  return cfg;
}

}  // namespace

TEST(ConvexPrimitives, Norms) {
  DenseMatrix m(2, 2);
  m << 3, 0, 4, 0;
  EXPECT_NEAR(nuclear_norm(m), 5.0, 1e-12);
  EXPECT_NEAR(l12_norm(m), 5.0, 1e-12);
  EXPECT_NEAR(nuclear_norm(DenseMatrix::Identity(3, 3)), 3.0, 1e-12);
  EXPECT_NEAR(l12_norm(DenseMatrix::Identity(3, 3)), 3.0, 1e-12);
  EXPECT_NEAR(decomposition_objective(m, DenseMatrix::Identity(2, 2), 0.5), 6.0, 1e-12);
}

TEST(ConvexPrimitives, SingularValueThreshold) {
  Rng rng(1);
  const DenseMatrix u = orthonormalize(gaussian_matrix(5, 3, 1.0, rng));
  const DenseMatrix v = orthonormalize(gaussian_matrix(4, 3, 1.0, rng));
  Vector s(3);
  s << 3.0, 1.5, 0.5;
  const DenseMatrix m = u * s.asDiagonal() * v.transpose();
  Vector shrunk(3);
  shrunk << 2.0, 0.5, 0.0;
  const DenseMatrix want = u * shrunk.asDiagonal() * v.transpose();
  EXPECT_LT((singular_value_threshold(m, 1.0) - want).norm(), 1e-12);
  EXPECT_TRUE(singular_value_threshold(m, 10.0).isZero(0.0));
}

TEST(ConvexPrimitives, ColumnShrink) {
  DenseMatrix m(2, 2);
  m << 3, 0.1, 4, 0.1;
  const DenseMatrix got = column_shrink(m, 1.0);
  EXPECT_NEAR(got(0, 0), 3.0 * 4.0 / 5.0, 1e-12);
  EXPECT_NEAR(got(1, 0), 4.0 * 4.0 / 5.0, 1e-12);
  EXPECT_TRUE(got.col(1).isZero(0.0));
}

TEST(DefaultLambda, Values) {
  EXPECT_NEAR(default_lambda(1), 3.0 / 7.0, 1e-15);
  EXPECT_NEAR(default_lambda(9), 1.0 / 7.0, 1e-15);
  EXPECT_THROW(default_lambda(0), InvalidParameter);
}

TEST(Decompose, MatchesConicOracle) {
  const auto cases = rsr::testing::load_convex_oracle(RSR_ORACLE_FILE);
  ASSERT_EQ(cases.size(), 20u);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto dec = decompose(cases[i].data, with_lambda(cases[i].lambda));
    EXPECT_LT(std::abs(dec.objective - cases[i].objective) / cases[i].objective, 1e-6) << "instance " << i;
    EXPECT_LT((dec.low_rank + dec.column_sparse - cases[i].data).norm(), 1e-5 * cases[i].data.norm());
    EXPECT_LT(optimality_certificate(dec, cases[i].lambda).worst(), 1e-4) << "instance " << i;
  }
}

TEST(Decompose, LargeLambdaKeepsEverythingLowRank) {
  Rng rng(2);
  const DenseMatrix d = rsr::testing::random_low_rank(rng, 8, 10, 2);
  const auto dec = decompose(d, with_lambda(1.0));
  EXPECT_LT(dec.column_sparse.norm(), 1e-5 * d.norm());
  EXPECT_LT((dec.low_rank - d).norm(), 1e-5 * d.norm());
  EXPECT_NEAR(dec.objective, nuclear_norm(d), 1e-6 * nuclear_norm(d));
}

TEST(Decompose, SingleColumnGoesToSparsePart) {
  Rng rng(3);
  const DenseMatrix d = gaussian_matrix(6, 1, 1.0, rng);
  const auto dec = decompose(d, with_lambda(0.5));
  EXPECT_LT(dec.low_rank.norm(), 1e-6);
  EXPECT_LT((dec.column_sparse - d).norm(), 1e-6);
  EXPECT_NEAR(dec.objective, 0.5 * d.norm(), 1e-6);
}

TEST(Decompose, ZeroMatrix) {
  const auto dec = decompose(DenseMatrix::Zero(3, 4), with_lambda(0.3));
  EXPECT_TRUE(dec.low_rank.isZero(0.0));
  EXPECT_TRUE(dec.column_sparse.isZero(0.0));
  EXPECT_EQ(dec.objective, 0.0);
}

TEST(Decompose, SeparatesPlantedOutliers) {
  SyntheticParams p;
  p.n1 = 30;
  p.n2 = 200;
  p.rank = 2;
  p.fixed_outlier_count = 2;
  p.outlier_sigma = 1.0;
  p.seed = 5;
  const auto inst = generate_synthetic(p);
  const auto dec = decompose(inst.observed, with_lambda(default_lambda(2)));
  for (Index j = 0; j < 200; ++j) {
    const bool outlier = std::binary_search(inst.outlier_indices->begin(), inst.outlier_indices->end(), j);
    const double ratio = dec.column_sparse.col(j).norm() / inst.observed.col(j).norm();
    if (outlier)
      EXPECT_GT(ratio, 0.5) << j;
    else
      EXPECT_LT(ratio, 1e-4) << j;
  }
  const auto svd = detail::compact_svd(dec.low_rank, 1e-6);
  EXPECT_EQ(svd.rank, 2);
  EXPECT_LT(subspace_distance(svd.u, truth_basis(inst)), 1e-6);
}

TEST(Decompose, Validation) {
  const DenseMatrix d = DenseMatrix::Ones(2, 2);
  EXPECT_THROW(decompose(d, ConvexSolveConfig{}), InvalidParameter);
  EXPECT_THROW(decompose(d, with_lambda(-1.0)), InvalidParameter);
  auto cfg = with_lambda(0.5);
  cfg.max_iters = 0;
  EXPECT_THROW(decompose(d, cfg), InvalidParameter);
  DenseMatrix bad = d;
  bad(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(decompose(bad, with_lambda(0.5)), InvalidParameter);
}

TEST(Decompose, IterationCapRaisesWithPartialResult) {
  Rng rng(4);
  const DenseMatrix d = gaussian_matrix(10, 12, 1.0, rng);
  auto cfg = with_lambda(0.3);
  cfg.max_iters = 3;
  try {
    decompose(d, cfg);
    FAIL() << "expected DecompositionNotConverged";
  } catch (const DecompositionNotConverged& e) {
    EXPECT_FALSE(e.timed_out());
    EXPECT_EQ(e.partial().iterations, 3);
    EXPECT_EQ(e.partial().low_rank.rows(), 10);
  }
}

TEST(Decompose, MeritIsMonotoneProperty) {
  for (std::uint64_t s = 0; s < 50; ++s) EXPECT_EQ(rsr::testing::check_merit_monotone(s), "") << "seed " << s;
}

TEST(DecomposeNoisy, ZeroEpsilonMatchesExactProgram) {
  const auto cases = rsr::testing::load_convex_oracle(RSR_ORACLE_FILE);
  for (std::size_t i = 0; i < 5; ++i) {
    auto cfg = with_lambda(cases[i].lambda);
    const auto exact = decompose(cases[i].data, cfg);
    cfg.noise_epsilon = 0.0;
    const auto noisy = decompose_noisy(cases[i].data, cfg);
    EXPECT_NEAR(noisy.objective, exact.objective, 1e-6 * exact.objective);
  }
}

TEST(DecomposeNoisy, LargeEpsilonGivesZeros) {
  Rng rng(6);
  const DenseMatrix d = gaussian_matrix(5, 7, 1.0, rng);
  auto cfg = with_lambda(0.4);
  cfg.noise_epsilon = d.norm();
  const auto dec = decompose_noisy(d, cfg);
  EXPECT_TRUE(dec.low_rank.isZero(0.0));
  EXPECT_TRUE(dec.column_sparse.isZero(0.0));
  EXPECT_EQ(dec.objective, 0.0);
}

TEST(DecomposeNoisy, ResidualStaysInsideBall) {
  Rng rng(7);
  const DenseMatrix d = rsr::testing::random_low_rank(rng, 12, 15, 2) + 0.01 * gaussian_matrix(12, 15, 1.0, rng);
  auto cfg = with_lambda(0.3);
  cfg.noise_epsilon = 0.1;
  const auto dec = decompose_noisy(d, cfg);
  EXPECT_LE((d - dec.low_rank - dec.column_sparse).norm(), 0.1 * (1.0 + 1e-5));
  const auto exact = decompose(d, cfg);
  EXPECT_LT(dec.objective, exact.objective);
  cfg.noise_epsilon.reset();
  EXPECT_THROW(decompose_noisy(d, cfg), InvalidParameter);
}

TEST(Alg2, RecoversSparseOutliers) {
  SyntheticParams p;
  p.n1 = 100;
  p.n2 = 300;
  p.rank = 3;
  p.outlier_prob = 0.02;
  p.seed = 8;
  const auto inst = generate_synthetic(p);
  const auto plan = SketchPlan::for_alg2(80, 30, Design::red, 9);
  const auto sketch = build_sketch(inst.observed, plan);
  Index sampled = 0;
  for (Index j : sketch.column_indices)
    sampled += std::binary_search(inst.outlier_indices->begin(), inst.outlier_indices->end(), j);
  Alg2Options opt;
  opt.k_estimate = std::max<Index>(1, sampled);
  const auto res = recover_subspace_alg2(inst, plan, ConvexSolveConfig{}, opt);
  EXPECT_NEAR(res.lambda, default_lambda(*opt.k_estimate), 1e-15);
  const auto v = classify_recovery(inst, res.recovery.basis, res.recovery.report);
  EXPECT_TRUE(v.exact) << v.subspace_error;
}

TEST(Alg2, DefaultLambdaFallsBackToSketchWidth) {
  SyntheticParams p;
  p.n1 = 20;
  p.n2 = 40;
  p.rank = 2;
  p.outlier_prob = 0.0;
  p.seed = 1;
  const auto inst = generate_synthetic(p);
  // The fallback lambda is small enough to push every column into C, so
  // keep all columns as inliers to get a result back.
  Alg2Options opt;
  opt.column_norm_tol = 10.0;
  const auto res =
      recover_subspace_alg2(inst, SketchPlan::for_alg2(16, 10, Design::red, 2), ConvexSolveConfig{}, opt);
  EXPECT_NEAR(res.lambda, default_lambda(res.recovery.sketch.effective_m1), 1e-15);
}
