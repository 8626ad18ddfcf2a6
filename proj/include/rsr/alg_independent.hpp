#pragma once

// Subspace recovery under the independent-outlier model: a sampled column of
// the sketch is an inlier iff it is (numerically) a linear combination of the
// other sampled columns. Inliers then supply a column basis T drawn from the
// uncompressed sample.

#include "rsr/metrics.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <functional>
#include <optional>

namespace rsr {

/// Minimum residual of regressing each sketch column on all the others.
struct ResidualProfile {
  std::vector<double> residuals;
  std::vector<double> relative;
  double threshold_used = 0.0;
  /// True when the sketch holds a single column, which then has no
  /// regressors and is reported as an outlier candidate.
  bool degenerate = false;
};

enum class NormType { l1, l2 };

/// Norm-ball constraint |z|_p <= omega on the regression coefficients.
struct NoisyConstraint {
  double omega = 1.0;
  NormType p = NormType::l2;
};

namespace detail {

/// Euclidean projection onto {z : |z|_1 <= radius}.
inline Vector project_l1_ball(const Vector& v, double radius) {
  if (radius <= 0.0) return Vector::Zero(v.size());
  if (v.lpNorm<1>() <= radius) return v;
  std::vector<double> mags(v.data(), v.data() + v.size());
  for (auto& m : mags) m = std::abs(m);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    cumulative += mags[k];
    const double t = (cumulative - radius) / static_cast<double>(k + 1);
    if (mags[k] > t) theta = t;
  }
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i)
    out(i) = std::copysign(std::max(std::abs(v(i)) - theta, 0.0), v(i));
  return out;
}

inline Vector project_l2_ball(const Vector& v, double radius) {
  const double n = v.norm();
  if (n <= radius) return v;
  return radius <= 0.0 ? Vector::Zero(v.size()) : Vector(v * (radius / n));
}

inline Vector project_ball(const Vector& v, const NoisyConstraint& c) {
  return c.p == NormType::l1 ? project_l1_ball(v, c.omega) : project_l2_ball(v, c.omega);
}

}  // namespace detail

/// Caches a rank-reduced copy of the sketch for repeated per-column solves.
///
/// All columns of the compressed sketch live in span(U_R), the leading R left
/// singular vectors (R = numerical rank). Rotating onto that span preserves
/// every regression residual, so each per-column solve runs on the R x m1'
/// coefficient matrix instead of the m2 x m1' sketch.
class ResidualSolver {
 public:
  static constexpr double kReductionTol = 1e-12;
  static constexpr double kLsqRankTol = 1e-10;

  explicit ResidualSolver(const DenseMatrix& compressed) : cols_(compressed.cols()) {
    require(cols_ >= 1, "ResidualSolver: empty sketch");
    require_finite(compressed, "ResidualSolver");
    column_norms_ = compressed.colwise().norm().transpose();
    if (compressed.rows() <= cols_) {
      coeffs_ = compressed;
    } else {
      // Tall sketch: the R factor of a thin QR is an equivalent square problem.
      Eigen::HouseholderQR<DenseMatrix> qr(compressed);
      coeffs_ = qr.matrixQR().topRows(cols_).triangularView<Eigen::Upper>();
    }
    reduce_by_svd();
  }

  Index columns() const { return cols_; }
  double column_norm(Index i) const { return column_norms_(i); }

  /// min_z |d_i - Q_i z|_2 via a column-pivoted QR of Q_i.
  double residual(Index i) const {
    require(i >= 0 && i < cols_, "residual_test: column index out of range");
    const Vector d = coeffs_.col(i);
    if (cols_ == 1) return d.norm();
    const DenseMatrix q = others(i);
    Eigen::ColPivHouseholderQR<DenseMatrix> qr(q);
    qr.setThreshold(kLsqRankTol);
    const Index rank = qr.rank();
    const Vector rotated = qr.householderQ().transpose() * d;
    return rotated.tail(rotated.size() - rank).norm();
  }

  /// min_z |d_i - Q_i z|_2 s.t. |z|_p <= omega, by accelerated projected
  /// gradient with function-value restart.
  double residual_constrained(Index i, const NoisyConstraint& c, double tol = 1e-8,
                              Index max_iters = 10000) const {
    require(i >= 0 && i < cols_, "residual_test_noisy: column index out of range");
    require(c.omega >= 0.0, "residual_test_noisy: omega must be nonnegative");
    const Vector d = coeffs_.col(i);
    if (cols_ == 1 || c.omega == 0.0) return d.norm();
    const DenseMatrix q = others(i);
    const Vector qtd = q.transpose() * d;
    const double grad0 = qtd.norm();
    if (grad0 == 0.0) return d.norm();

    Eigen::JacobiSVD<DenseMatrix> svd(q);
    const double lipschitz = svd.singularValues()(0) * svd.singularValues()(0);
    const double step = 1.0 / lipschitz;
    auto objective = [&](const Vector& z) { return 0.5 * (d - q * z).squaredNorm(); };

    Vector z = Vector::Zero(q.cols());
    Vector y = z;
    double t = 1.0;
    double f_prev = objective(z);
    for (Index it = 0; it < max_iters; ++it) {
      const Vector grad = q.transpose() * (q * y) - qtd;
      const Vector z_next = detail::project_ball(y - step * grad, c);
      const double mapping = lipschitz * (y - z_next).norm();
      const double f_next = objective(z_next);
      if (mapping <= tol * grad0) return std::sqrt(2.0 * f_next);
      if (f_next > f_prev) {
        // A plain projected step from z cannot increase f in exact
        // arithmetic, so this is the rounding floor.
        if (y == z) return std::sqrt(2.0 * f_prev);
        // Restart momentum from the last accepted iterate.
        y = z;
        t = 1.0;
        continue;
      }
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = z_next + ((t - 1.0) / t_next) * (z_next - z);
      z = z_next;
      t = t_next;
      f_prev = f_next;
    }
    throw ConvergenceError("residual_test_noisy: iteration cap reached", std::sqrt(2.0 * f_prev));
  }

 private:
  DenseMatrix others(Index i) const {
    DenseMatrix q(coeffs_.rows(), cols_ - 1);
    q.leftCols(i) = coeffs_.leftCols(i);
    q.rightCols(cols_ - 1 - i) = coeffs_.rightCols(cols_ - 1 - i);
    return q;
  }

  void reduce_by_svd() {
    Eigen::BDCSVD<DenseMatrix> svd(coeffs_, Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return;
    Index rank = 0;
    while (rank < s.size() && s(rank) > kReductionTol * s(0)) ++rank;
    coeffs_ = s.head(rank).asDiagonal() * svd.matrixV().leftCols(rank).transpose();
  }

  Index cols_;
  Vector column_norms_;
  DenseMatrix coeffs_;
};

inline double residual_test(const Sketch& sketch, Index column_index) {
  return ResidualSolver(sketch.compressed).residual(column_index);
}

inline double residual_test_noisy(const Sketch& sketch, Index column_index, double omega,
                                  NormType p) {
  require(omega >= 0.0, "residual_test_noisy: omega must be nonnegative");
  return ResidualSolver(sketch.compressed).residual_constrained(column_index, {omega, p});
}

inline ResidualProfile residual_profile(const DenseMatrix& compressed,
                                        const std::optional<NoisyConstraint>& noisy = std::nullopt) {
  const ResidualSolver solver(compressed);
  ResidualProfile profile;
  profile.degenerate = solver.columns() == 1;
  for (Index i = 0; i < solver.columns(); ++i) {
    const double res = noisy ? solver.residual_constrained(i, *noisy) : solver.residual(i);
    const double norm = solver.column_norm(i);
    profile.residuals.push_back(res);
    profile.relative.push_back(norm > 0.0 ? std::min(1.0, res / norm) : 0.0);
  }
  return profile;
}

struct SketchOutliers {
  OutlierReport report;  // sketch-local, one entry per sampled column
  ResidualProfile profile;
};

/// Column i of the sketch is an outlier iff its relative residual exceeds
/// rel_threshold.
inline SketchOutliers detect_outliers_alg1(const Sketch& sketch, double rel_threshold,
                                           const std::optional<NoisyConstraint>& noisy = std::nullopt) {
  require(rel_threshold >= 0.0 && rel_threshold < 1.0,
          "detect_outliers_alg1: rel_threshold must lie in [0, 1)");
  SketchOutliers out;
  out.profile = residual_profile(sketch.compressed, noisy);
  out.profile.threshold_used = rel_threshold;
  out.report = make_report(out.profile.relative, rel_threshold, DetectionSpace::compressed);
  return out;
}

/// Picks est_rank independent inlier columns of the sketch by column-pivoted
/// QR and returns the matching uncompressed columns as T.
inline SubspaceBasis learn_basis(const Sketch& sketch, const std::vector<bool>& inlier_mask,
                                 double rank_tol = 1e-8) {
  require(static_cast<Index>(inlier_mask.size()) == sketch.effective_m1,
          "learn_basis: mask length must equal the number of sampled columns");
  IndexList inliers;
  for (std::size_t i = 0; i < inlier_mask.size(); ++i)
    if (inlier_mask[i]) inliers.push_back(static_cast<Index>(i));
  if (inliers.empty()) throw RecoveryFailure("learn_basis: no inlier columns");

  const DenseMatrix block = sketch.compressed(Eigen::all, inliers);
  const Index est_rank = numerical_rank(block, rank_tol);
  if (est_rank == 0) throw RecoveryFailure("learn_basis: inlier block is zero");

  Eigen::ColPivHouseholderQR<DenseMatrix> qr(block);
  IndexList picked;
  for (Index k = 0; k < est_rank; ++k)
    picked.push_back(inliers[static_cast<std::size_t>(qr.colsPermutation().indices()(k))]);
  if (numerical_rank(sketch.compressed(Eigen::all, picked), rank_tol) != est_rank)
    throw InternalError("learn_basis: pivoted selection lost rank");

  IndexList sources;
  for (Index k : picked) sources.push_back(sketch.column_indices[static_cast<std::size_t>(k)]);
  try {
    return make_basis(sketch.sampled_columns(Eigen::all, picked), std::move(sources));
  } catch (const DegenerateInput& e) {
    throw InternalError(std::string("learn_basis: ") + e.what());
  }
}

struct Alg1Options {
  double rel_threshold = 1e-6;
  double rank_tol = 1e-8;
  double detection_threshold = 1e-6;
  DetectionSpace detection_space = DetectionSpace::full_data;
  std::optional<NoisyConstraint> noisy;
};

/// Output of an end-to-end recovery run.
struct RecoveryResult {
  SubspaceBasis basis;
  OutlierReport report;  // one entry per column of the full data
  Sketch sketch;
  std::vector<bool> sketch_outliers;
};

inline OutlierReport detect_on_full_data(const DenseMatrix& data, const Sketch& sketch,
                                         const SubspaceBasis& basis, DetectionSpace space,
                                         double threshold) {
  const RowOperator* op = space == DetectionSpace::compressed ? &sketch.row_operator : nullptr;
  return detect_outliers_full(data, basis, op, threshold);
}

inline RecoveryResult recover_subspace_alg1(const DenseMatrix& data, const SketchPlan& plan,
                                            const Alg1Options& options = {}) {
  RecoveryResult result;
  result.sketch = build_sketch(data, plan);
  auto local = detect_outliers_alg1(result.sketch, options.rel_threshold, options.noisy);
  std::vector<bool> inliers(local.report.mask.size());
  for (std::size_t i = 0; i < inliers.size(); ++i) inliers[i] = !local.report.mask[i];
  if (std::none_of(inliers.begin(), inliers.end(), [](bool b) { return b; }))
    throw RecoveryFailure("recover_subspace_alg1: every sampled column was flagged as an outlier");
  result.basis = learn_basis(result.sketch, inliers, options.rank_tol);
  result.report = detect_on_full_data(data, result.sketch, result.basis, options.detection_space,
                                      options.detection_threshold);
  result.sketch_outliers = std::move(local.report.mask);
  return result;
}

inline RecoveryResult recover_subspace_alg1(const DataInstance& instance, const SketchPlan& plan,
                                            const Alg1Options& options = {}) {
  return recover_subspace_alg1(instance.observed, plan, options);
}

}  // namespace rsr
