#include "checks.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace rsr;

TEST(JlConfig, ExponentAtOneHalf) {
  const JlConfig jl;
  EXPECT_DOUBLE_EQ(jl.f_epsilon(0.5), 1.0 / 24.0);
  double prev = 0.0;
  for (double eps = 0.05; eps < 1.0; eps += 0.05) {
    EXPECT_GT(jl.f_epsilon(eps), prev);
    prev = jl.f_epsilon(eps);
  }
  EXPECT_THROW(jl.f_epsilon(0.0), InvalidParameter);
  EXPECT_THROW(jl.f_epsilon(1.0), InvalidParameter);
}

TEST(SampleColumns, ExhaustiveWithoutReplacementIsPermutation) {
  const DenseMatrix d = DenseMatrix::Random(3, 100);
  const auto s = sample_columns(d, 100, false, false, 4);
  std::set<Index> seen(s.indices.begin(), s.indices.end());
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(s.columns, d(Eigen::all, s.indices));
}

TEST(SampleColumns, DedupeKeepsFirstOccurrence) {
  const DenseMatrix d = DenseMatrix::Random(2, 4000);
  const auto s = sample_columns(d, 25, true, true, 9);
  EXPECT_LE(s.indices.size(), 25u);
  std::set<Index> seen(s.indices.begin(), s.indices.end());
  EXPECT_EQ(seen.size(), s.indices.size());
  // Same draws without dedupe, filtered by first occurrence.
  const auto raw = sample_columns(d, 25, true, false, 9);
  IndexList first;
  std::set<Index> have;
  for (Index j : raw.indices)
    if (have.insert(j).second) first.push_back(j);
  EXPECT_EQ(first, s.indices);
}

TEST(SampleColumns, CouponCollectorMean) {
  const DenseMatrix d = DenseMatrix::Zero(1, 10);
  for (Index m : {5, 20}) {
    double total = 0.0;
    for (std::uint64_t s = 0; s < 2000; ++s)
      total += static_cast<double>(sample_columns(d, m, true, true, s).indices.size());
    const double expected = 10.0 * (1.0 - std::pow(0.9, static_cast<double>(m)));
    EXPECT_NEAR(total / 2000.0, expected, 0.1) << "m1 = " << m;
  }
  EXPECT_EQ(sample_columns(d, 10000, true, true, 1).indices.size(), 10u);
}

TEST(SampleColumns, Errors) {
  const DenseMatrix d = DenseMatrix::Zero(2, 5);
  EXPECT_THROW(sample_columns(d, 6, false, false, 0), InvalidParameter);
  EXPECT_THROW(sample_columns(d, 0, true, false, 0), InvalidParameter);
  EXPECT_NO_THROW(sample_columns(d, 6, true, false, 0));
}

TEST(EmbedRows, ZeroMapsToZero) {
  const auto r = embed_rows_gaussian(DenseMatrix::Zero(30, 4), 30, 2);
  EXPECT_TRUE(r.compressed.isZero(0.0));
  const auto& phi = std::get<GaussianEmbedding>(r.op).phi;
  EXPECT_EQ(phi.rows(), 30);
  EXPECT_EQ(phi.cols(), 30);
}

TEST(EmbedRows, EntryVarianceIsOneOverM2) {
  const auto r = embed_rows_gaussian(DenseMatrix::Zero(500, 1), 100, 3);
  const auto& phi = std::get<GaussianEmbedding>(r.op).phi;
  const double var = phi.squaredNorm() / static_cast<double>(phi.size());
  EXPECT_NEAR(var, 0.01, 0.0005);
}

TEST(EmbedRows, ConcentrationBelowJlBound) {
  Rng rng(12);
  const DenseMatrix v = gaussian_matrix(200, 1, 1.0, rng);
  const double norm2 = v.squaredNorm();
  int bad = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const double got = embed_rows_gaussian(v, 64, s).compressed.squaredNorm();
    bad += std::abs(got - norm2) > 0.5 * norm2;
  }
  EXPECT_LT(bad / 10000.0, JlConfig{}.tail_bound(64, 0.5));
}

TEST(EmbedRows, ClusteredRowsKeepRankAtM2EqualR) {
  int full = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    ClusteredRowsParams p;
    p.n_clusters = 50;
    p.per_cluster_dims = 1;
    p.sizes = two_regime_sizes(50, 600);
    p.ambient = 200;
    p.seed = s;
    full += numerical_rank(embed_rows_gaussian(generate_clustered_rows(p), 50, s + 77).compressed) == 50;
  }
  EXPECT_GE(full, 95);
}

TEST(EmbedRows, GaussianLowRankKeepsRank) {
  int full = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(s);
    const DenseMatrix l = rsr::testing::random_low_rank(rng, 200, 60, 10);
    full += numerical_rank(embed_rows_gaussian(l, 20, s).compressed) == 10;
  }
  EXPECT_GE(full, 99);
}

TEST(SampleRows, FullSampleIsIdentity) {
  const DenseMatrix d = DenseMatrix::Random(12, 7);
  const auto r = sample_rows(d, 12, 5);
  EXPECT_EQ(r.compressed, d);
  const auto& sel = std::get<RowSelection>(r.op);
  EXPECT_TRUE(std::is_sorted(sel.rows.begin(), sel.rows.end()));
  EXPECT_THROW(sample_rows(d, 13, 5), InvalidParameter);
}

TEST(SampleRows, UniformRowsSufficeButClusteredRowsDoNot) {
  auto frequency = [](Index n_clusters, Index m2) {
    int full = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      ClusteredRowsParams p;
      p.n_clusters = n_clusters;
      p.per_cluster_dims = 50 / n_clusters;
      p.sizes = two_regime_sizes(n_clusters, 3000);
      p.ambient = 300;
      p.seed = s;
      full += numerical_rank(sample_rows(generate_clustered_rows(p), m2, s + 3).compressed) == 50;
    }
    return full;
  };
  EXPECT_GE(frequency(1, 50), 45);
  EXPECT_LE(frequency(50, 52), 5);
  EXPECT_GE(frequency(50, 600), 40);
}

TEST(BuildSketch, FullRrdPlanIsPermutedData) {
  const DenseMatrix d = DenseMatrix::Random(6, 9);
  const SketchPlan plan{9, 6, Design::rrd, false, false, 3};
  const auto s = build_sketch(d, plan);
  EXPECT_EQ(s.compressed, d(Eigen::all, s.column_indices));
}

TEST(BuildSketch, TypicalOperatingPointShape) {
  SyntheticParams p;
  p.n1 = 2000;
  p.n2 = 4000;
  p.rank = 5;
  p.outlier_prob = 0.2;
  p.seed = 1;
  const auto inst = generate_synthetic(p);
  const auto s = build_sketch(inst, SketchPlan::for_alg1(25, 30, Design::red, 8));
  EXPECT_EQ(s.compressed.rows(), 30);
  EXPECT_LE(s.compressed.cols(), 25);
  EXPECT_EQ(s.effective_m1, s.compressed.cols());
}

TEST(BuildSketch, BookkeepingAndOperatorConsistency) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticParams p;
    p.n1 = 30;
    p.n2 = 50;
    p.rank = 3;
    p.outlier_prob = 0.2;
    p.seed = seed;
    const auto inst = generate_synthetic(p);
    for (Design design : {Design::red, Design::rrd}) {
      const auto s = build_sketch(inst, SketchPlan::for_alg1(20, 15, design, seed));
      EXPECT_TRUE(rsr::testing::bit_equal(s.sampled_columns, inst.observed(Eigen::all, s.column_indices)));
      const DenseMatrix again = apply(s.row_operator, s.sampled_columns);
      EXPECT_LE((again - s.compressed).norm(), 1e-12 * s.compressed.norm());
      const Index rank_d = numerical_rank(inst.observed);
      const Index rank_s = numerical_rank(s.sampled_columns);
      EXPECT_LE(numerical_rank(s.compressed), rank_s);
      EXPECT_LE(rank_s, rank_d);
    }
  }
}

TEST(BuildSketch, DeterministicPerSeed) {
  const DenseMatrix d = DenseMatrix::Random(20, 40);
  for (Design design : {Design::red, Design::rrd}) {
    const auto a = build_sketch(d, SketchPlan::for_alg2(10, 8, design, 5));
    const auto b = build_sketch(d, SketchPlan::for_alg2(10, 8, design, 5));
    EXPECT_TRUE(rsr::testing::bit_equal(a.compressed, b.compressed));
    EXPECT_EQ(a.column_indices, b.column_indices);
  }
}

TEST(BuildSketch, PlanValidation) {
  const DenseMatrix d = DenseMatrix::Random(5, 8);
  EXPECT_THROW(build_sketch(d, SketchPlan{9, 3, Design::red, false, false, 0}), InvalidParameter);
  EXPECT_THROW(build_sketch(d, SketchPlan::for_alg1(4, 6, Design::rrd, 0)), InvalidParameter);
  EXPECT_THROW(build_sketch(d, SketchPlan::for_alg1(4, 0, Design::red, 0)), InvalidParameter);
  EXPECT_NO_THROW(build_sketch(d, SketchPlan::for_alg1(4, 6, Design::red, 0)));
}

TEST(BuildSketch, RankMonotonicityProperty) {
  for (std::uint64_t s = 0; s < 200; ++s) EXPECT_EQ(rsr::testing::check_sketch_rank_monotone(s), "") << "seed " << s;
}
