#pragma once

// Monte-Carlo phase-transition grids over (m1, m2) and runtime comparisons
// against the full-data convex decomposition.

#include "rsr/alg_convex.hpp"
#include "rsr/bounds.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <mutex>
#include <ostream>
#include <thread>

namespace rsr {

struct GridSpec {
  IndexList m1_values;
  IndexList m2_values;
  Index trials = 20;
  Algorithm algorithm = Algorithm::independence;
  Design design = Design::red;
  SyntheticParams instance_params;  // seed is replaced per trial
  std::uint64_t base_seed = 0;
  double success_tol = 1e-6;
  Alg1Options alg1;
  ConvexSolveConfig convex;
  Alg2Options alg2;
  /// Worker threads; 0 picks hardware concurrency.
  unsigned threads = 0;
  /// Attach the theorem bound computed from the first trial's instance.
  bool bound_overlay = false;
  double overlay_delta = 0.1;
};

struct GridResult {
  GridSpec spec;
  DenseMatrix success_rate;  // |m1| x |m2|
  DenseMatrix mean_subspace_error;
  DenseMatrix mean_runtime_seconds;  // wall clock, not reproducible
  Eigen::MatrixXi failures;          // trials that threw
  nlohmann::json metadata;
};

/// Seed of the instance used by every cell in trial t.
inline std::uint64_t trial_instance_seed(std::uint64_t base, Index trial) {
  return derive_seed(base, 0, static_cast<std::uint64_t>(trial));
}

/// Sketch seed of cell (i, j) in trial t.
inline std::uint64_t cell_sketch_seed(std::uint64_t base, Index cell, Index trial) {
  return derive_seed(base, static_cast<std::uint64_t>(cell) + 1, static_cast<std::uint64_t>(trial));
}

inline void validate_grid(const GridSpec& spec) {
  auto increasing = [](const IndexList& v) {
    if (v.empty()) return false;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] <= v[i - 1]) return false;
    return v.front() >= 1;
  };
  require(increasing(spec.m1_values), "grid: m1 values must be positive and strictly increasing");
  require(increasing(spec.m2_values), "grid: m2 values must be positive and strictly increasing");
  require(spec.trials >= 1, "grid: trials must be >= 1");
  require(spec.instance_params.rank >= 1, "grid: rank must be >= 1");
  if (spec.design == Design::rrd)
    require(spec.m2_values.back() <= spec.instance_params.n1, "grid: RRD requires m2 <= N1");
}

/// Number of outlier columns in the sampled (with replacement) column set.
inline Index count_sampled_outliers(const IndexList& sampled, const IndexList& outliers) {
  Index k = 0;
  for (Index j : sampled)
    if (std::binary_search(outliers.begin(), outliers.end(), j)) ++k;
  return k;
}

struct TrialOutcome {
  RecoveryVerdict verdict;
  double seconds = 0.0;
  bool threw = false;
  std::string error;
};

/// One end-to-end recovery at (m1, m2), scored against the instance truth.
/// The convex path sets lambda from the true sampled-outlier count unless the
/// spec fixes it.
inline TrialOutcome run_single(const DataInstance& inst, const DenseMatrix& truth_q, Index m1,
                               Index m2, std::uint64_t sketch_seed, const GridSpec& spec) {
  TrialOutcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    RecoveryResult rec;
    if (spec.algorithm == Algorithm::independence) {
      rec = recover_subspace_alg1(inst, SketchPlan::for_alg1(m1, m2, spec.design, sketch_seed),
                                  spec.alg1);
    } else {
      const auto plan = SketchPlan::for_alg2(m1, m2, spec.design, sketch_seed);
      Alg2Options opts = spec.alg2;
      if (!spec.convex.lambda && !opts.k_estimate) {
        const auto cols = sample_columns(inst.observed, plan.m1, plan.column_replacement, plan.dedupe,
                                         derive_seed(plan.seed, 1));
        opts.k_estimate = std::max<Index>(1, count_sampled_outliers(cols.indices, *inst.outlier_indices));
      }
      rec = recover_subspace_alg2(inst, plan, spec.convex, opts).recovery;
    }
    out.verdict = score_recovery(truth_q, *inst.outlier_indices, rec.basis, rec.report, spec.success_tol);
  } catch (const std::exception& e) {
    out.threw = true;
    out.error = e.what();
    out.verdict = RecoveryVerdict{};
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline nlohmann::json to_json(const SyntheticParams& p) {
  nlohmann::json j{{"n1", p.n1},
                   {"n2", p.n2},
                   {"rank", p.rank},
                   {"outlier_prob", p.outlier_prob},
                   {"outlier_sigma", p.outlier_sigma},
                   {"noise_sigma", p.noise_sigma}};
  if (p.fixed_outlier_count) j["fixed_outlier_count"] = *p.fixed_outlier_count;
  return j;
}

inline nlohmann::json to_json(const BoundResult& b) {
  nlohmann::json j{{"algorithm", to_string(b.algorithm)},
                   {"design", to_string(b.design)},
                   {"m1_sufficient", b.m1_sufficient},
                   {"m2_sufficient", b.m2_sufficient},
                   {"feasible", b.feasible},
                   {"terms", b.terms},
                   {"notes", b.notes}};
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("alpha", b.alpha);
  put("beta", b.beta);
  put("q_bound", b.q_bound);
  put("zeta", b.zeta);
  put("g", b.g);
  put("k_admissible", b.k_admissible);
  return j;
}

inline nlohmann::json to_json(const RecoveryVerdict& v) {
  return {{"subspace_error", v.subspace_error},
          {"outlier_precision", v.outlier_precision},
          {"outlier_recall", v.outlier_recall},
          {"exact", v.exact}};
}

/// Bound inputs matched to an instance with ground truth.
inline BoundInputs bound_inputs_for(const DataInstance& inst, double delta) {
  require(inst.has_truth(), "bound_inputs_for: instance lacks ground truth");
  BoundInputs in;
  in.coherence = estimate_coherence(*inst.truth_low_rank);
  in.r = in.coherence.rank_used;
  in.n1 = inst.rows();
  in.n2 = inst.cols();
  in.k = static_cast<Index>(inst.outlier_indices->size());
  in.n2_prime = in.n2 - in.k;
  in.delta = delta;
  return in;
}

inline GridResult run_phase_transition(const GridSpec& spec) {
  validate_grid(spec);
  const Index rows = static_cast<Index>(spec.m1_values.size());
  const Index cols = static_cast<Index>(spec.m2_values.size());
  const Index cells = rows * cols;

  // outcomes[t * cells + cell]
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(spec.trials * cells));
  std::atomic<Index> next{0};
  std::mutex error_mutex;
  std::exception_ptr setup_error;

  auto worker = [&] {
    for (Index t = next++; t < spec.trials; t = next++) {
      try {
        SyntheticParams p = spec.instance_params;
        p.seed = trial_instance_seed(spec.base_seed, t);
        const DataInstance inst = generate_synthetic(p);
        const DenseMatrix truth_q = truth_basis(inst);
        for (Index i = 0; i < rows; ++i)
          for (Index j = 0; j < cols; ++j) {
            const Index cell = i * cols + j;
            outcomes[static_cast<std::size_t>(t * cells + cell)] =
                run_single(inst, truth_q, spec.m1_values[static_cast<std::size_t>(i)],
                           spec.m2_values[static_cast<std::size_t>(j)],
                           cell_sketch_seed(spec.base_seed, cell, t), spec);
          }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!setup_error) setup_error = std::current_exception();
      }
    }
  };

  unsigned n_threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<Index>(n_threads, spec.trials));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < n_threads; ++k) pool.emplace_back(worker);
  }
  if (setup_error) std::rethrow_exception(setup_error);

  GridResult res;
  res.spec = spec;
  res.success_rate = DenseMatrix::Zero(rows, cols);
  res.mean_subspace_error = DenseMatrix::Zero(rows, cols);
  res.mean_runtime_seconds = DenseMatrix::Zero(rows, cols);
  res.failures = Eigen::MatrixXi::Zero(rows, cols);
  for (Index t = 0; t < spec.trials; ++t)
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) {
        const auto& o = outcomes[static_cast<std::size_t>(t * cells + i * cols + j)];
        res.success_rate(i, j) += o.verdict.exact ? 1.0 : 0.0;
        res.mean_subspace_error(i, j) += o.verdict.subspace_error;
        res.mean_runtime_seconds(i, j) += o.seconds;
        res.failures(i, j) += o.threw ? 1 : 0;
      }
  const double n = static_cast<double>(spec.trials);
  res.success_rate /= n;
  res.mean_subspace_error /= n;
  res.mean_runtime_seconds /= n;

  auto& md = res.metadata;
  md["algorithm"] = to_string(spec.algorithm);
  md["design"] = to_string(spec.design);
  md["m1_values"] = spec.m1_values;
  md["m2_values"] = spec.m2_values;
  md["trials"] = spec.trials;
  md["base_seed"] = spec.base_seed;
  md["seed_schedule"] =
      "instance seed = derive_seed(base_seed, 0, trial); sketch seed = derive_seed(base_seed, 1 + "
      "i * |m2| + j, trial)";
  md["instance_params"] = to_json(spec.instance_params);
  md["success_tol"] = spec.success_tol;
  md["failures"] = nlohmann::json::array();
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) md["failures"].push_back(res.failures(i, j));
  md["runtime_note"] = "mean_runtime is wall clock and excluded from reproducibility";
  if (spec.algorithm == Algorithm::convex && !spec.convex.lambda)
    md["lambda_rule"] = "3 / (7 sqrt(k)), k = true sampled-outlier count (at least 1)";
  if (spec.bound_overlay) {
    SyntheticParams p = spec.instance_params;
    p.seed = trial_instance_seed(spec.base_seed, 0);
    const auto inst = generate_synthetic(p);
    const int theorem = (spec.algorithm == Algorithm::independence ? 1 : 3) +
                        (spec.design == Design::rrd ? 1 : 0);
    md["bound_overlay"] = to_json(bound_for_theorem(theorem, bound_inputs_for(inst, spec.overlay_delta)));
  }
  return res;
}

/// CSV with header m1,m2,success_rate,mean_error,mean_runtime; one row per
/// cell, m1 major. The last column is wall clock and not reproducible.
inline void write_grid_csv(std::ostream& out, const GridResult& res) {
  out << "m1,m2,success_rate,mean_error,mean_runtime\n";
  for (std::size_t i = 0; i < res.spec.m1_values.size(); ++i)
    for (std::size_t j = 0; j < res.spec.m2_values.size(); ++j) {
      const auto ii = static_cast<Index>(i);
      const auto jj = static_cast<Index>(j);
      out << res.spec.m1_values[i] << ',' << res.spec.m2_values[j] << ','
          << detail::format_double(res.success_rate(ii, jj)) << ','
          << detail::format_double(res.mean_subspace_error(ii, jj)) << ','
          << detail::format_double(res.mean_runtime_seconds(ii, jj)) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Runtime comparison

struct BaselineRow {
  Index n1 = 0;
  Index n2 = 0;
  double randomized_median_seconds = 0.0;
  double baseline_median_seconds = 0.0;
  /// Baseline hit the time cap in at least one trial; its median is then a
  /// lower bound and so is the speedup.
  bool baseline_censored = false;
  double speedup = 0.0;
  double randomized_success_rate = 0.0;
  Index baseline_flagged = 0;  // outlier columns found by the baseline, last trial
};

struct BaselineConfig {
  double baseline_time_limit_seconds = 600.0;
  std::uint64_t base_seed = 0;
  double outlier_sigma = 20.0;
};

namespace detail {

inline double median(std::vector<double> v) {
  require(!v.empty(), "median: empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Times randomized Algorithm 2 with detection against the convex program
/// applied to all of D, on square N x N instances. Runs serially.
inline std::vector<BaselineRow> run_baseline_comparison(const IndexList& sizes, Index r, double rho,
                                                        Index m1, Index m2, Index trials,
                                                        const BaselineConfig& cfg = {}) {
  require(!sizes.empty(), "bench: sizes must be non-empty");
  require(trials >= 1, "bench: trials must be >= 1");
  require(cfg.baseline_time_limit_seconds > 0.0, "bench: time limit must be positive");
  using Clock = std::chrono::steady_clock;
  std::vector<BaselineRow> rows;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const Index n = sizes[s];
    std::vector<double> fast, slow;
    BaselineRow row;
    row.n1 = row.n2 = n;
    Index successes = 0;
    for (Index t = 0; t < trials; ++t) {
      SyntheticParams p{n, n, r, rho, cfg.outlier_sigma, 0.0,
                        derive_seed(cfg.base_seed, s, static_cast<std::uint64_t>(t)), std::nullopt};
      const auto inst = generate_synthetic(p);

      GridSpec spec;
      spec.algorithm = Algorithm::convex;
      spec.design = Design::red;
      const auto fast_run = run_single(inst, truth_basis(inst), m1, m2,
                                       derive_seed(cfg.base_seed, 1000 + s, t), spec);
      fast.push_back(fast_run.seconds);
      successes += fast_run.verdict.exact ? 1 : 0;

      ConvexSolveConfig full;
      full.lambda = default_lambda(std::max<Index>(1, static_cast<Index>(inst.outlier_indices->size())));
      full.time_limit_seconds = cfg.baseline_time_limit_seconds;
      const auto start = Clock::now();
      try {
        const auto dec = decompose(inst.observed, full);
        // Detection step of the baseline: nonzero columns of C.
        Index flagged = 0;
        for (Index j = 0; j < dec.column_sparse.cols(); ++j)
          if (dec.column_sparse.col(j).norm() > 1e-4 * inst.observed.col(j).norm()) ++flagged;
        row.baseline_flagged = flagged;
      } catch (const DecompositionNotConverged& e) {
        if (e.timed_out()) row.baseline_censored = true;
      }
      slow.push_back(std::chrono::duration<double>(Clock::now() - start).count());
    }
    row.randomized_median_seconds = detail::median(fast);
    row.baseline_median_seconds = detail::median(slow);
    row.speedup = row.baseline_median_seconds / std::max(row.randomized_median_seconds, 1e-9);
    row.randomized_success_rate = static_cast<double>(successes) / static_cast<double>(trials);
    rows.push_back(row);
  }
  return rows;
}

inline void write_baseline_csv(std::ostream& out, const std::vector<BaselineRow>& rows) {
  out << "n1,n2,randomized_median_seconds,baseline_median_seconds,baseline_censored,speedup,"
         "randomized_success_rate\n";
  for (const auto& r : rows)
    out << r.n1 << ',' << r.n2 << ',' << detail::format_double(r.randomized_median_seconds) << ','
        << detail::format_double(r.baseline_median_seconds) << ',' << (r.baseline_censored ? 1 : 0)
        << ',' << detail::format_double(r.speedup) << ','
        << detail::format_double(r.randomized_success_rate) << '\n';
}

}  // namespace rsr
