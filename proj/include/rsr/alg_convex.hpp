#pragma once

// Column-sparse outlier model: split the sketch into low-rank plus
// column-sparse parts by
//
//   min |L|_* + lambda |C|_{1,2}   s.t.  L + C = D   (or |L + C - D|_F <= eps)
//
// solved with ADMM, then learn the basis from the columns left out of C.

#include "rsr/alg_independent.hpp"

#include <chrono>

namespace rsr {

/// lambda = 3 / (7 sqrt(k)).
inline double default_lambda(Index k_estimate) {
  require(k_estimate >= 1, "default_lambda: outlier count estimate must be >= 1");
  return 3.0 / (7.0 * std::sqrt(static_cast<double>(k_estimate)));
}

struct ConvexSolveConfig {
  std::optional<double> lambda;
  Index max_iters = 5000;
  double primal_tol = 1e-7;
  double dual_tol = 1e-7;
  double penalty = 1.0;
  bool penalty_adapt = true;
  std::optional<double> noise_epsilon;
  std::optional<double> time_limit_seconds;
  bool record_merit = false;
};

struct Decomposition {
  DenseMatrix low_rank;
  DenseMatrix column_sparse;
  DenseMatrix dual;  // Lagrange multiplier of the coupling constraint
  Index iterations = 0;
  double final_primal_residual = 0.0;
  double final_dual_residual = 0.0;
  double objective = 0.0;
  /// rho |C_k - C_{k-1}|^2 + |Y_k - Y_{k-1}|^2 / rho per iteration (scaled
  /// problem), recorded when requested. Non-increasing for fixed rho.
  std::vector<double> merit_history;
};

class DecompositionNotConverged : public ConvergenceError {
 public:
  DecompositionNotConverged(const std::string& what, Decomposition partial, bool timed_out)
      : ConvergenceError(what, partial.final_primal_residual),
        partial_(std::move(partial)),
        timed_out_(timed_out) {}

  const Decomposition& partial() const noexcept { return partial_; }
  bool timed_out() const noexcept { return timed_out_; }

 private:
  Decomposition partial_;
  bool timed_out_;
};

inline double nuclear_norm(const DenseMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<DenseMatrix> svd(m);
  return svd.singularValues().sum();
}

/// Sum of column Euclidean norms.
inline double l12_norm(const DenseMatrix& m) { return m.colwise().norm().sum(); }

inline double decomposition_objective(const DenseMatrix& low_rank, const DenseMatrix& column_sparse,
                                      double lambda) {
  return nuclear_norm(low_rank) + lambda * l12_norm(column_sparse);
}

/// Proximal map of tau |.|_*.
inline DenseMatrix singular_value_threshold(const DenseMatrix& m, double tau) {
  Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Index keep = 0;
  while (keep < s.size() && s(keep) > tau) ++keep;
  if (keep == 0) return DenseMatrix::Zero(m.rows(), m.cols());
  const Vector shrunk = s.head(keep).array() - tau;
  return svd.matrixU().leftCols(keep) * shrunk.asDiagonal() *
         svd.matrixV().leftCols(keep).transpose();
}

/// Proximal map of tau |.|_{1,2}: block soft threshold of each column.
inline DenseMatrix column_shrink(const DenseMatrix& m, double tau) {
  DenseMatrix out(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    const double n = m.col(j).norm();
    if (n > tau)
      out.col(j) = m.col(j) * ((n - tau) / n);
    else
      out.col(j).setZero();
  }
  return out;
}

namespace detail {

inline double spectral_norm_estimate(const DenseMatrix& m) {
  Vector x = Vector::Ones(m.cols()) / std::sqrt(static_cast<double>(m.cols()));
  double est = 0.0;
  for (int it = 0; it < 50; ++it) {
    const Vector y = m.transpose() * (m * x);
    const double n = y.norm();
    if (n == 0.0) break;
    const double next = std::sqrt(n);
    x = y / n;
    if (std::abs(next - est) <= 1e-3 * next) return next;
    est = next;
  }
  return est;
}

inline constexpr Index kAdaptInterval = 10;

inline Decomposition run_admm(const DenseMatrix& data, double lambda, double epsilon,
                              const ConvexSolveConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  const Index m = data.rows();
  const Index n = data.cols();
  Decomposition out;
  out.low_rank = DenseMatrix::Zero(m, n);
  out.column_sparse = DenseMatrix::Zero(m, n);
  out.dual = DenseMatrix::Zero(m, n);

  const double data_norm = data.norm();
  if (data_norm == 0.0 || epsilon >= data_norm) return out;  // zero is optimal

  // The program is positively homogeneous, so solve it for D / s and rescale.
  double scale = spectral_norm_estimate(data);
  if (!(scale > 0.0)) scale = data_norm;
  const DenseMatrix d = data / scale;
  const double eps = epsilon / scale;
  const double d_norm = data_norm / scale;

  DenseMatrix low_rank = DenseMatrix::Zero(m, n);
  DenseMatrix sparse = DenseMatrix::Zero(m, n);
  DenseMatrix slack = DenseMatrix::Zero(m, n);  // noise term, |E|_F <= eps
  DenseMatrix y = DenseMatrix::Zero(m, n);
  double rho = cfg.penalty;
  double primal = 0.0;
  double dual = 0.0;
  Index it = 0;
  bool converged = false;
  bool timed_out = false;

  for (; it < cfg.max_iters; ++it) {
    low_rank = singular_value_threshold(d - sparse - slack + y / rho, 1.0 / rho);
    DenseMatrix sparse_next = column_shrink(d - low_rank - slack + y / rho, lambda / rho);
    DenseMatrix slack_next = DenseMatrix::Zero(m, n);
    if (eps > 0.0) {
      slack_next = d - low_rank - sparse_next + y / rho;
      const double sn = slack_next.norm();
      if (sn > eps) slack_next *= eps / sn;
    }
    const DenseMatrix residual = d - low_rank - sparse_next - slack_next;
    const DenseMatrix y_next = y + rho * residual;

    const double change = ((sparse_next - sparse) + (slack_next - slack)).norm();
    primal = residual.norm() / d_norm;
    dual = rho * change / d_norm;
    if (cfg.record_merit)
      out.merit_history.push_back(rho * (sparse_next - sparse).squaredNorm() +
                                  (y_next - y).squaredNorm() / rho);

    sparse = std::move(sparse_next);
    slack = std::move(slack_next);
    y = y_next;

    if (primal < cfg.primal_tol && dual < cfg.dual_tol) {
      converged = true;
      ++it;
      break;
    }
    // Balancing on every step can cycle between two penalties.
    if (cfg.penalty_adapt && (it + 1) % kAdaptInterval == 0) {
      if (primal > 10.0 * dual)
        rho *= 2.0;
      else if (dual > 10.0 * primal)
        rho /= 2.0;
    }
    if (cfg.time_limit_seconds &&
        std::chrono::duration<double>(Clock::now() - start).count() > *cfg.time_limit_seconds) {
      timed_out = true;
      ++it;
      break;
    }
  }

  out.low_rank = low_rank * scale;
  out.column_sparse = sparse * scale;
  out.dual = y;
  out.iterations = it;
  out.final_primal_residual = primal;
  out.final_dual_residual = dual;
  out.objective = decomposition_objective(out.low_rank, out.column_sparse, lambda);
  if (!converged)
    throw DecompositionNotConverged(timed_out ? "decompose: time limit reached"
                                              : "decompose: iteration cap reached",
                                    std::move(out), timed_out);
  return out;
}

inline void validate_config(const ConvexSolveConfig& cfg) {
  require(cfg.lambda.has_value() && *cfg.lambda > 0.0, "decompose: lambda must be positive");
  require(cfg.max_iters >= 1, "decompose: max_iters must be positive");
  require(cfg.primal_tol > 0.0 && cfg.dual_tol > 0.0, "decompose: tolerances must be positive");
  require(cfg.penalty > 0.0, "decompose: penalty must be positive");
}

}  // namespace detail

/// min |L|_* + lambda |C|_{1,2} s.t. L + C = D.
inline Decomposition decompose(const DenseMatrix& matrix, const ConvexSolveConfig& config) {
  detail::validate_config(config);
  require_finite(matrix, "decompose");
  return detail::run_admm(matrix, *config.lambda, 0.0, config);
}

/// min |L|_* + lambda |C|_{1,2} s.t. |L + C - D|_F <= noise_epsilon.
inline Decomposition decompose_noisy(const DenseMatrix& matrix, const ConvexSolveConfig& config) {
  detail::validate_config(config);
  require(config.noise_epsilon.has_value() && *config.noise_epsilon >= 0.0,
          "decompose_noisy: noise_epsilon must be set and nonnegative");
  require_finite(matrix, "decompose_noisy");
  return detail::run_admm(matrix, *config.lambda, *config.noise_epsilon, config);
}

/// Violation of the optimality conditions Y in d|L|_* and Y in lambda d|C|_{1,2}
/// at a returned point, with Y the returned multiplier.
struct OptimalityCertificate {
  double tangent_residual = 0.0;  // |P_T(Y) - U V^T|_2
  double spectral_excess = 0.0;   // max(0, |P_T^perp(Y)|_2 - 1)
  double column_residual = 0.0;   // max_j |Y_j - lambda c_j/|c_j|| / lambda, c_j != 0
  double column_excess = 0.0;     // max_j (|Y_j| - lambda) / lambda over c_j == 0, clipped at 0

  double worst() const {
    return std::max({tangent_residual, spectral_excess, column_residual, column_excess});
  }
};

inline OptimalityCertificate optimality_certificate(const Decomposition& dec, double lambda,
                                                    double zero_tol = 1e-9) {
  OptimalityCertificate cert;
  const DenseMatrix& y = dec.dual;
  const auto svd = detail::compact_svd(dec.low_rank, zero_tol);
  DenseMatrix normal_part = y;
  if (svd.rank > 0) {
    const DenseMatrix& u = svd.u;
    const DenseMatrix& v = svd.v;
    const DenseMatrix uy = u.transpose() * y;
    const DenseMatrix yv = y * v;
    const DenseMatrix tangent = u * uy + yv * v.transpose() - u * (uy * v) * v.transpose();
    Eigen::BDCSVD<DenseMatrix> t_svd(tangent - u * v.transpose());
    cert.tangent_residual = t_svd.singularValues()(0);
    normal_part = y - tangent;
  }
  Eigen::BDCSVD<DenseMatrix> n_svd(normal_part);
  cert.spectral_excess = std::max(0.0, n_svd.singularValues()(0) - 1.0);

  const Vector c_norms = dec.column_sparse.colwise().norm().transpose();
  const double c_cut = zero_tol * std::max(1.0, c_norms.size() ? c_norms.maxCoeff() : 0.0);
  for (Index j = 0; j < y.cols(); ++j) {
    if (c_norms(j) > c_cut) {
      const Vector target = lambda * dec.column_sparse.col(j) / c_norms(j);
      cert.column_residual = std::max(cert.column_residual, (y.col(j) - target).norm() / lambda);
    } else {
      cert.column_excess = std::max(cert.column_excess, (y.col(j).norm() - lambda) / lambda);
    }
  }
  return cert;
}

struct Alg2Options {
  double column_norm_tol = 1e-4;
  double rank_tol = 1e-8;
  double detection_threshold = 1e-6;
  DetectionSpace detection_space = DetectionSpace::full_data;
  /// Outlier-count estimate used for lambda when the config leaves it unset;
  /// falls back to the number of sampled columns.
  std::optional<Index> k_estimate;
};

struct Alg2Result {
  RecoveryResult recovery;
  Decomposition decomposition;
  double lambda = 0.0;
};

inline Alg2Result recover_subspace_alg2(const DenseMatrix& data, const SketchPlan& plan,
                                        ConvexSolveConfig config, const Alg2Options& options = {}) {
  require(options.column_norm_tol >= 0.0, "recover_subspace_alg2: column_norm_tol must be >= 0");
  Alg2Result out;
  RecoveryResult& rec = out.recovery;
  rec.sketch = build_sketch(data, plan);
  if (!config.lambda)
    config.lambda = default_lambda(std::max<Index>(1, options.k_estimate.value_or(rec.sketch.effective_m1)));
  out.lambda = *config.lambda;
  out.decomposition = config.noise_epsilon ? decompose_noisy(rec.sketch.compressed, config)
                                           : decompose(rec.sketch.compressed, config);

  const DenseMatrix& c = out.decomposition.column_sparse;
  std::vector<bool> inliers(static_cast<std::size_t>(c.cols()));
  rec.sketch_outliers.resize(inliers.size());
  for (Index j = 0; j < c.cols(); ++j) {
    const double ref = rec.sketch.compressed.col(j).norm();
    const bool outlier = ref > 0.0 && c.col(j).norm() / ref > options.column_norm_tol;
    rec.sketch_outliers[static_cast<std::size_t>(j)] = outlier;
    inliers[static_cast<std::size_t>(j)] = !outlier;
  }
  rec.basis = learn_basis(rec.sketch, inliers, options.rank_tol);
  rec.report = detect_on_full_data(data, rec.sketch, rec.basis, options.detection_space,
                                   options.detection_threshold);
  return out;
}

inline Alg2Result recover_subspace_alg2(const DataInstance& instance, const SketchPlan& plan,
                                        const ConvexSolveConfig& config,
                                        const Alg2Options& options = {}) {
  return recover_subspace_alg2(instance.observed, plan, config, options);
}

}  // namespace rsr
