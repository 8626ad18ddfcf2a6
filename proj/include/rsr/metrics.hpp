#pragma once

// Evaluation primitives: projection-residual outlier detection, subspace
// distance, numerical rank and recovery classification.

#include "rsr/sketch.hpp"

#include <Eigen/QR>

namespace rsr {

/// Count of singular values >= rank_tol * sigma_1 (0 for the zero matrix).
inline Index numerical_rank(const DenseMatrix& m, double rank_tol = 1e-9) {
  require_finite(m, "numerical_rank");
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<DenseMatrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  Index rank = 0;
  while (rank < s.size() && s(rank) >= rank_tol * s(0)) ++rank;
  return rank;
}

/// Orthonormal basis of span(m). Throws DegenerateInput when m is not
/// numerically full column rank.
inline DenseMatrix orthonormalize(const DenseMatrix& m, double rank_tol = 1e-10) {
  require(m.cols() >= 1, "orthonormalize: empty basis");
  require(m.cols() <= m.rows(), "orthonormalize: more columns than rows");
  require_finite(m, "orthonormalize");
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(m);
  const auto diag = qr.matrixQR().diagonal().cwiseAbs();
  if (diag(0) <= 0.0 || diag(m.cols() - 1) < rank_tol * diag(0))
    throw DegenerateInput("orthonormalize: basis is numerically rank deficient");
  return qr.householderQ() * DenseMatrix::Identity(m.rows(), m.cols());
}

/// Column basis T of the recovered subspace, and its orthonormalized form.
struct SubspaceBasis {
  DenseMatrix basis;
  DenseMatrix orthonormal;
  Index est_rank = 0;
  IndexList source_indices;
};

inline SubspaceBasis make_basis(DenseMatrix basis, IndexList source_indices = {}) {
  SubspaceBasis b;
  b.orthonormal = orthonormalize(basis);
  b.est_rank = basis.cols();
  b.basis = std::move(basis);
  b.source_indices = std::move(source_indices);
  return b;
}

/// Sine of the largest principal angle between span(a) and span(b).
/// Subspaces of different dimension are at distance 1.
inline double subspace_distance(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows(), "subspace_distance: ambient dimensions differ");
  const DenseMatrix qa = orthonormalize(a);
  const DenseMatrix qb = orthonormalize(b);
  if (qa.cols() != qb.cols()) return 1.0;
  // |(I - Qa Qa^T) Qb|_2 stays accurate for tiny angles, unlike sqrt(1 - cos^2).
  const DenseMatrix residual = qb - qa * (qa.transpose() * qb);
  Eigen::JacobiSVD<DenseMatrix> svd(residual);
  return std::min(1.0, svd.singularValues()(0));
}

enum class DetectionSpace { full_data, compressed };

inline const char* to_string(DetectionSpace s) {
  return s == DetectionSpace::full_data ? "full_data" : "compressed";
}

/// Per-column relative residual scores and the thresholded outlier mask.
struct OutlierReport {
  std::vector<double> scores;
  std::vector<bool> mask;
  double threshold = 0.0;
  DetectionSpace detection_space = DetectionSpace::full_data;

  IndexList outliers() const {
    IndexList out;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) out.push_back(static_cast<Index>(i));
    return out;
  }
};

inline OutlierReport make_report(std::vector<double> scores, double threshold, DetectionSpace space) {
  OutlierReport r;
  r.mask.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) r.mask[i] = scores[i] > threshold;
  r.scores = std::move(scores);
  r.threshold = threshold;
  r.detection_space = space;
  return r;
}

/// Relative norm of each column's residual after projecting onto span(q),
/// q orthonormal. Zero columns score 0.
inline std::vector<double> projection_scores(const DenseMatrix& data, const DenseMatrix& q) {
  const DenseMatrix h = data - q * (q.transpose() * data);
  std::vector<double> scores(static_cast<std::size_t>(data.cols()));
  for (Index j = 0; j < data.cols(); ++j) {
    const double norm = data.col(j).norm();
    scores[static_cast<std::size_t>(j)] = norm > 0.0 ? std::min(1.0, h.col(j).norm() / norm) : 0.0;
  }
  return scores;
}

/// Flags columns of `data` that leave span(T). With a row operator the test
/// runs on Phi D against an orthonormal basis of Phi T; otherwise it runs on
/// the full data with the projector onto span(T).
inline OutlierReport detect_outliers_full(const DenseMatrix& data, const SubspaceBasis& basis,
                                          const RowOperator* row_operator, double threshold) {
  if (basis.est_rank == 0 || basis.basis.cols() == 0)
    throw InvalidParameter("detect_outliers_full: basis has rank 0");
  require(threshold >= 0.0, "detect_outliers_full: threshold must be nonnegative");
  require(basis.basis.rows() == data.rows(), "detect_outliers_full: basis/data row mismatch");
  if (row_operator == nullptr)
    return make_report(projection_scores(data, basis.orthonormal), threshold,
                       DetectionSpace::full_data);
  const DenseMatrix compressed = apply(*row_operator, data);
  const DenseMatrix u_phi = orthonormalize(apply(*row_operator, basis.basis));
  return make_report(projection_scores(compressed, u_phi), threshold, DetectionSpace::compressed);
}

/// Success criterion of a single recovery run.
struct RecoveryVerdict {
  double subspace_error = 1.0;
  double outlier_precision = 0.0;
  double outlier_recall = 0.0;
  bool exact = false;
};

/// Orthonormal basis of the column space of the ground-truth low-rank part.
/// With a known rank the range is captured as span(L * Omega) for a fixed
/// Gaussian Omega, which is exact with probability one for an exactly
/// rank-r matrix and avoids a full SVD of large matrices.
inline DenseMatrix truth_basis(const DataInstance& instance) {
  if (!instance.truth_low_rank) throw InvalidParameter("classify_recovery: missing ground truth");
  const DenseMatrix& l = *instance.truth_low_rank;
  if (instance.true_rank && *instance.true_rank > 0) {
    Rng rng(0x5eed);
    const DenseMatrix omega = gaussian_matrix(l.cols(), *instance.true_rank, 1.0, rng);
    return orthonormalize(l * omega);
  }
  const auto svd = detail::compact_svd(l, 1e-9);
  if (svd.rank == 0) throw DegenerateInput("classify_recovery: zero ground truth");
  return svd.u;
}

inline RecoveryVerdict score_recovery(const DenseMatrix& truth_orthonormal, const IndexList& true_outliers,
                                      const SubspaceBasis& basis, const OutlierReport& report,
                                      double tol = 1e-6) {
  RecoveryVerdict v;
  v.subspace_error = subspace_distance(basis.orthonormal, truth_orthonormal);
  std::vector<bool> truth(report.mask.size(), false);
  for (Index i : true_outliers) truth.at(static_cast<std::size_t>(i)) = true;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (report.mask[i] && truth[i]) ++tp;
    if (report.mask[i] && !truth[i]) ++fp;
    if (!report.mask[i] && truth[i]) ++fn;
  }
  v.outlier_precision = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  v.outlier_recall = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  v.exact = v.subspace_error < tol && fp == 0 && fn == 0;
  return v;
}

inline RecoveryVerdict classify_recovery(const DataInstance& instance, const SubspaceBasis& basis,
                                         const OutlierReport& report, double tol = 1e-6) {
  if (!instance.has_truth()) throw InvalidParameter("classify_recovery: missing ground truth");
  require(static_cast<Index>(report.mask.size()) == instance.cols(),
          "classify_recovery: report does not cover every column");
  return score_recovery(truth_basis(instance), *instance.outlier_indices, basis, report, tol);
}

}  // namespace rsr
