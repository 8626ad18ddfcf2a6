#pragma once

// Closed-form sufficient sample sizes (m1 columns, m2 rows) for both
// algorithms and both row-compression designs. Logarithms are natural;
// ceilings are taken on the final m1 and m2 only.

#include "rsr/sketch.hpp"

#include <map>

namespace rsr {

enum class Algorithm { independence, convex };

inline const char* to_string(Algorithm a) {
  return a == Algorithm::independence ? "alg1" : "alg2";
}

struct BoundInputs {
  Index r = 1;
  Index n1 = 0;
  Index n2 = 0;
  Index n2_prime = 0;  // inlier columns
  Index k = 0;         // outlier columns, k + n2_prime == n2
  CoherenceStats coherence;
  double delta = 0.05;
  double c = 2.0;
  /// Column-sparsity slack of the convex analysis. Unset means
  /// g = 2 (N2'/N2)(1 + 6 r mu_v 121/9).
  std::optional<double> g;
  double c1 = 10.0;  // row-sampling constants, unspecified numerically
  double c2 = 10.0;
  double f_half = JlConfig{}.f_epsilon(0.5);
  /// Overrides the sampled-outlier bound q in the lemma diagnostics.
  std::optional<double> outlier_bound;
};

struct BoundResult {
  Algorithm algorithm = Algorithm::independence;
  Design design = Design::red;
  Index m1_sufficient = 0;
  Index m2_sufficient = 0;
  // Independence test only.
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> q_bound;
  // Convex program only.
  std::optional<double> zeta;
  std::optional<double> g;
  std::optional<double> k_admissible;  // largest admissible K
  bool feasible = true;
  /// Every intermediate and branch value, keyed by name.
  std::map<std::string, double> terms;
  std::vector<std::string> notes;
};

namespace detail {

inline const double kNetLog = std::log(42.0 * std::sqrt(2.0));

inline void validate_bounds(const BoundInputs& in) {
  require(in.r >= 1, "bounds: r must be positive");
  require(in.n2_prime >= 1, "bounds: n2_prime must be positive");
  require(in.k >= 0, "bounds: k must be nonnegative");
  require(in.k + in.n2_prime == in.n2, "bounds: k + n2_prime must equal n2");
  require(in.n1 >= in.r, "bounds: n1 must be at least r");
  require(in.delta > 0.0 && in.delta < 0.2, "bounds: delta must lie in (0, 0.2)");
  require(in.c > 1.0, "bounds: c must exceed 1");
  require(!in.g || *in.g > 1.0, "bounds: g must exceed 1");
  require(in.c1 > 0.0 && in.c2 > 0.0, "bounds: c1 and c2 must be positive");
  require(in.f_half > 0.0 && std::isfinite(in.f_half), "bounds: f_half must be positive");
  const auto& s = in.coherence;
  require(s.mu_v >= 0.0 && s.mu_v_prime >= 0.0 && s.eta_u >= 0.0,
          "bounds: coherence values must be nonnegative");
  require(!in.outlier_bound || *in.outlier_bound >= 0.0, "bounds: outlier_bound must be >= 0");
}

inline double rd(Index v) { return static_cast<double>(v); }

inline Index ceil_count(double v) {
  require(std::isfinite(v), "bounds: non-finite sample size");
  return static_cast<Index>(std::ceil(std::max(v, 0.0)));
}

// log K with K = 0 read as log 1: no outliers adds no union-bound term.
inline double log_count(double k) { return std::log(std::max(k, 1.0)); }

struct ColumnTerms {
  double alpha_inlier, alpha_outlier, alpha, beta, q, m1;
};

inline ColumnTerms independence_columns(const BoundInputs& in) {
  const double r = rd(in.r);
  const double ratio = rd(in.k) / rd(in.n2_prime);
  const double ld = std::log(2.0 / in.delta);
  ColumnTerms t{};
  t.alpha_inlier = 20.0 * in.coherence.mu_v_prime * r * std::log(4.0 * r / in.delta);
  t.alpha_outlier = 3.0 * in.c * in.c * ratio * ld;
  t.alpha = std::max(t.alpha_inlier, t.alpha_outlier);
  require(t.alpha > 0.0, "bounds: alpha is zero (mu_v_prime must be positive)");
  t.beta = 2.0 + 3.0 / t.alpha * ld;
  t.q = t.alpha * (t.beta * ratio + 1.0 / in.c);
  t.m1 = t.beta * t.alpha * rd(in.n2) / rd(in.n2_prime);
  return t;
}

inline double embed_rank(double r, double q, double delta, double f_half) {
  return ((r + q) * kNetLog + std::log(2.0 / delta)) / f_half;
}

inline double embed_separation(double r, double count, double delta, double f_half) {
  return ((r + 1.0) * kNetLog + log_count(count) + std::log(2.0 / delta)) / f_half;
}

inline double row_span(const BoundInputs& in) {
  const double r = rd(in.r);
  const double eta2 = in.coherence.eta_u * in.coherence.eta_u;
  return r * eta2 * std::max(in.c1 * std::log(r), in.c2 * std::log(3.0 / in.delta));
}

inline double row_rank(double r, double q, double delta) {
  const double ld = std::log(2.0 / delta);
  return r + q + 2.0 * ld + std::sqrt(8.0 * q * ld);
}

inline double row_separation(double r, double count, double delta) {
  const double l = std::log(2.0 * std::max(count, 1.0) / delta);
  return r + 1.0 + 2.0 * l + std::sqrt(8.0 * l);
}

inline BoundResult independence_bound(const BoundInputs& in, Design design) {
  validate_bounds(in);
  const ColumnTerms t = independence_columns(in);
  const double r = rd(in.r);
  BoundResult out;
  out.algorithm = Algorithm::independence;
  out.design = design;
  out.alpha = t.alpha;
  out.beta = t.beta;
  out.q_bound = t.q;
  out.m1_sufficient = ceil_count(t.m1);
  out.terms = {{"alpha_inlier_branch", t.alpha_inlier},
               {"alpha_outlier_branch", t.alpha_outlier},
               {"alpha", t.alpha},
               {"beta", t.beta},
               {"q", t.q},
               {"m1_raw", t.m1}};
  double m2 = 0.0;
  if (design == Design::red) {
    const double b1 = embed_rank(r, t.q, in.delta, in.f_half);
    const double b2 = embed_separation(r, rd(in.k), in.delta, in.f_half);
    out.terms["m2_rank_branch"] = b1;
    out.terms["m2_separation_branch"] = b2;
    m2 = std::max(b1, b2);
  } else {
    const double b1 = row_span(in);
    const double b2 = row_rank(r, t.q, in.delta);
    const double b3k = row_separation(r, rd(in.k), in.delta);
    const double b3q = row_separation(r, t.q, in.delta);
    out.terms["m2_row_span_branch"] = b1;
    out.terms["m2_rank_branch"] = b2;
    out.terms["m2_separation_branch_k"] = b3k;
    out.terms["m2_separation_branch_q"] = b3q;
    out.notes.emplace_back(
        "separation branch evaluated with log(2K/delta) and with log(2q/delta); the larger is used");
    out.notes.emplace_back("row-sampling constants c1, c2 are unspecified; values are inputs");
    m2 = std::max({b1, b2, b3k, b3q});
  }
  out.terms["m2_raw"] = m2;
  out.m2_sufficient = ceil_count(m2);
  return out;
}

inline BoundResult convex_bound(const BoundInputs& in, Design design) {
  validate_bounds(in);
  const double r = rd(in.r);
  const double n2 = rd(in.n2);
  const double n2p = rd(in.n2_prime);
  const double ratio = rd(in.k) / n2p;
  const double a = 1.0 + 6.0 * r * in.coherence.mu_v * 121.0 / 9.0;
  const double g_min = n2p / n2 * a;
  const double g = in.g.value_or(2.0 * g_min);

  BoundResult out;
  out.algorithm = Algorithm::convex;
  out.design = design;
  out.g = g;

  const double ratio_max = (g * n2 / n2p - a) / (g * a);
  out.k_admissible = std::max(0.0, ratio_max * n2p);
  out.feasible = g >= g_min && ratio <= ratio_max;
  if (g < g_min) out.notes.emplace_back("g is below its minimum (N2'/N2)(1 + 6 r mu_v 121/9)");
  if (ratio > ratio_max) out.notes.emplace_back("K exceeds the admissible outlier count");

  const double z_outlier = 3.0 * g * g * ratio * std::log(2.0 / in.delta);
  const double z_inlier = n2p / n2 * 10.0 * r * in.coherence.mu_v * std::log(2.0 * r / in.delta);
  const double zeta = std::max(z_outlier, z_inlier);
  out.zeta = zeta;
  const double m1 = n2 / n2p * zeta;
  out.m1_sufficient = ceil_count(m1);
  out.terms = {{"g", g},
               {"g_min", g_min},
               {"sparsity_constant", a},
               {"k_ratio", ratio},
               {"k_ratio_max", ratio_max},
               {"k_admissible", *out.k_admissible},
               {"zeta_outlier_branch", z_outlier},
               {"zeta_inlier_branch", z_inlier},
               {"zeta", zeta},
               {"m1_raw", m1}};

  double m2 = 0.0;
  if (design == Design::red) {
    m2 = embed_separation(r, rd(in.k), in.delta, in.f_half);
    out.terms["m2_separation_branch"] = m2;
  } else {
    const double b1 = row_span(in);
    const double b2 = row_separation(r, rd(in.k), in.delta);
    out.terms["m2_row_span_branch"] = b1;
    out.terms["m2_separation_branch"] = b2;
    out.notes.emplace_back("row-sampling constants c1, c2 are unspecified; values are inputs");
    m2 = std::max(b1, b2);
  }
  out.terms["m2_raw"] = m2;
  out.m2_sufficient = ceil_count(m2);
  return out;
}

}  // namespace detail

inline BoundResult bound_alg1_red(const BoundInputs& in) {
  return detail::independence_bound(in, Design::red);
}

inline BoundResult bound_alg1_rrd(const BoundInputs& in) {
  return detail::independence_bound(in, Design::rrd);
}

inline BoundResult bound_alg2_red(const BoundInputs& in) {
  return detail::convex_bound(in, Design::red);
}

inline BoundResult bound_alg2_rrd(const BoundInputs& in) {
  return detail::convex_bound(in, Design::rrd);
}

/// Theorem number 1..4 maps to (alg1, red), (alg1, rrd), (alg2, red), (alg2, rrd).
inline BoundResult bound_for_theorem(int theorem, const BoundInputs& in) {
  switch (theorem) {
    case 1: return bound_alg1_red(in);
    case 2: return bound_alg1_rrd(in);
    case 3: return bound_alg2_red(in);
    case 4: return bound_alg2_rrd(in);
    default: throw InvalidParameter("bounds: theorem must be 1, 2, 3 or 4");
  }
}

/// Each supporting sample-size expression evaluated on its own. The outlier
/// bound q defaults to the independence-test value unless overridden.
inline std::map<std::string, double> bound_lemmas(const BoundInputs& in) {
  detail::validate_bounds(in);
  const double r = detail::rd(in.r);
  const double ld = std::log(2.0 / in.delta);
  const auto cols = detail::independence_columns(in);
  const double q = in.outlier_bound.value_or(cols.q);
  std::map<std::string, double> out;
  out["column_span_samples"] = 10.0 * in.coherence.mu_v_prime * r * std::log(2.0 * r / in.delta);
  out["inlier_count_beta"] = 2.0 + 3.0 / cols.alpha * ld;
  out["outlier_count_alpha_min"] = 3.0 * in.c * in.c * (detail::rd(in.k) / detail::rd(in.n2_prime)) * ld;
  out["outlier_count_q"] = q;
  out["embedding_rank_m2"] = detail::embed_rank(r, q, in.delta, in.f_half);
  out["embedding_rank_m2_ceil"] = std::ceil(out["embedding_rank_m2"]);
  out["embedding_separation_m2"] = detail::embed_separation(r, q, in.delta, in.f_half);
  out["row_span_m2"] = detail::row_span(in);
  out["row_rank_m2"] = std::max(out["row_span_m2"], detail::row_rank(r, q, in.delta));
  out["row_separation_m2"] = std::max(out["row_span_m2"], detail::row_separation(r, q, in.delta));
  return out;
}

}  // namespace rsr
