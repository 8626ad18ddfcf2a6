#pragma once

// Two-stage data sketch: uniform column sampling followed by row compression,
// either a Gaussian embedding (RED) or uniform row sampling (RRD).

#include "rsr/matstore.hpp"

#include <unordered_set>
#include <variant>

namespace rsr {

enum class Design { red, rrd };

inline const char* to_string(Design d) { return d == Design::red ? "red" : "rrd"; }

/// Concentration exponent of the distributional JL property,
/// P(| |Phi v|^2 - |v|^2 | >= eps |v|^2) <= 2 exp(-m f(eps)).
struct JlConfig {
  enum class Distribution { gaussian };
  Distribution distribution = Distribution::gaussian;

  /// f(eps) = eps^2/4 - eps^3/6 for Gaussian embeddings.
  double f_epsilon(double eps) const {
    require(eps > 0.0 && eps < 1.0, "JlConfig: epsilon must lie in (0, 1)");
    return eps * eps / 4.0 - eps * eps * eps / 6.0;
  }

  /// P-bound of the JL property for an embedding dimension m.
  double tail_bound(Index m, double eps) const {
    return 2.0 * std::exp(-static_cast<double>(m) * f_epsilon(eps));
  }
};

struct SketchPlan {
  Index m1 = 0;
  Index m2 = 0;
  Design design = Design::red;
  bool column_replacement = false;
  bool dedupe = false;
  std::uint64_t seed = 0;

  /// Independence-test pipeline: columns drawn with replacement, repeats removed.
  static SketchPlan for_alg1(Index m1, Index m2, Design design, std::uint64_t seed) {
    return {m1, m2, design, true, true, seed};
  }

  /// Convex pipeline: columns drawn with replacement, repeats kept.
  static SketchPlan for_alg2(Index m1, Index m2, Design design, std::uint64_t seed) {
    return {m1, m2, design, true, false, seed};
  }
};

/// Stored m2 x N1 Gaussian operator.
struct GaussianEmbedding {
  DenseMatrix phi;
};

/// Sorted row indices into an N1-row matrix.
struct RowSelection {
  IndexList rows;
  Index ambient_rows = 0;
};

using RowOperator = std::variant<GaussianEmbedding, RowSelection>;

inline Index operator_input_rows(const RowOperator& op) {
  return std::visit(
      [](const auto& o) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(o)>, GaussianEmbedding>)
          return o.phi.cols();
        else
          return o.ambient_rows;
      },
      op);
}

/// Applies the row operator to every column of `m`.
inline DenseMatrix apply(const RowOperator& op, const DenseMatrix& m) {
  require(operator_input_rows(op) == m.rows(), "row operator: dimension mismatch");
  return std::visit(
      [&m](const auto& o) -> DenseMatrix {
        if constexpr (std::is_same_v<std::decay_t<decltype(o)>, GaussianEmbedding>)
          return o.phi * m;
        else
          return m(o.rows, Eigen::all);
      },
      op);
}

struct ColumnSample {
  DenseMatrix columns;
  IndexList indices;
};

struct RowCompression {
  DenseMatrix compressed;
  RowOperator op;
};

/// Uniform column sampling. With replacement and dedupe the first occurrence
/// of every drawn index is kept, in draw order.
inline ColumnSample sample_columns(const DenseMatrix& data, Index m1, bool replacement, bool dedupe,
                                   std::uint64_t seed) {
  const Index n2 = data.cols();
  require(m1 >= 1, "sample_columns: m1 must be positive");
  require(replacement || m1 <= n2, "sample_columns: m1 exceeds N2 without replacement");
  Rng rng(seed);
  ColumnSample out;
  if (replacement) {
    std::uniform_int_distribution<Index> pick(0, n2 - 1);
    std::unordered_set<Index> seen;
    for (Index k = 0; k < m1; ++k) {
      const Index j = pick(rng);
      if (!dedupe || seen.insert(j).second) out.indices.push_back(j);
    }
  } else {
    IndexList perm(static_cast<std::size_t>(n2));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index k = 0; k < m1; ++k) {
      std::uniform_int_distribution<Index> pick(k, n2 - 1);
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    out.indices.assign(perm.begin(), perm.begin() + m1);
  }
  out.columns = data(Eigen::all, out.indices);
  return out;
}

/// Phi with i.i.d. N(0, 1/m2) entries; returns Phi * columns and Phi.
inline RowCompression embed_rows_gaussian(const DenseMatrix& columns, Index m2, std::uint64_t seed) {
  require(m2 >= 1, "embed_rows_gaussian: m2 must be positive");
  Rng rng(seed);
  GaussianEmbedding op{gaussian_matrix(m2, columns.rows(), 1.0 / std::sqrt(static_cast<double>(m2)), rng)};
  DenseMatrix compressed = op.phi * columns;
  return {std::move(compressed), RowOperator{std::move(op)}};
}

/// Uniform row subset without replacement, indices sorted ascending.
inline RowCompression sample_rows(const DenseMatrix& columns, Index m2, std::uint64_t seed) {
  const Index n1 = columns.rows();
  require(m2 >= 1 && m2 <= n1, "sample_rows: m2 must lie in [1, N1]");
  Rng rng(seed);
  IndexList perm(static_cast<std::size_t>(n1));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index k = 0; k < m2; ++k) {
    std::uniform_int_distribution<Index> pick(k, n1 - 1);
    std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(pick(rng))]);
  }
  RowSelection sel{IndexList(perm.begin(), perm.begin() + m2), n1};
  std::sort(sel.rows.begin(), sel.rows.end());
  DenseMatrix compressed = columns(sel.rows, Eigen::all);
  return {std::move(compressed), RowOperator{std::move(sel)}};
}

struct Sketch {
  DenseMatrix sampled_columns;  // D_s, N1 x m1'
  DenseMatrix compressed;       // Phi D_s, m2 x m1'
  IndexList column_indices;     // into the original columns
  RowOperator row_operator;
  Index effective_m1 = 0;
  Design design = Design::red;
};

inline void validate_plan(const SketchPlan& plan, Index n1, Index n2) {
  require(plan.m1 >= 1, "sketch plan: m1 must be positive");
  require(plan.column_replacement || plan.m1 <= n2,
          "sketch plan: m1 exceeds N2 without replacement");
  require(plan.m2 >= 1, "sketch plan: m2 must be positive");
  require(plan.design == Design::red || plan.m2 <= n1, "sketch plan: RRD requires m2 <= N1");
}

inline Sketch build_sketch(const DenseMatrix& data, const SketchPlan& plan) {
  validate_plan(plan, data.rows(), data.cols());
  auto cols = sample_columns(data, plan.m1, plan.column_replacement, plan.dedupe,
                             derive_seed(plan.seed, 1));
  auto rows = plan.design == Design::red
                  ? embed_rows_gaussian(cols.columns, plan.m2, derive_seed(plan.seed, 2))
                  : sample_rows(cols.columns, plan.m2, derive_seed(plan.seed, 3));
  Sketch s;
  s.effective_m1 = static_cast<Index>(cols.indices.size());
  s.sampled_columns = std::move(cols.columns);
  s.column_indices = std::move(cols.indices);
  s.compressed = std::move(rows.compressed);
  s.row_operator = std::move(rows.op);
  s.design = plan.design;
  return s;
}

inline Sketch build_sketch(const DataInstance& instance, const SketchPlan& plan) {
  return build_sketch(instance.observed, plan);
}

}  // namespace rsr
