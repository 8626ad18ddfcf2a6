// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Criteria can be selected by number on the command line.

#include "checks.hpp"
#include "rsr/cli.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>

namespace {

using namespace rsr;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

SyntheticParams desk_params(double rho, Index rank, std::uint64_t seed) {
  SyntheticParams p;
  p.n1 = 500;
  p.n2 = 1000;
  p.rank = rank;
  p.outlier_prob = rho;
  p.outlier_sigma = 20.0;
  p.seed = seed;
  return p;
}

int alg1_successes(Design design, double* elapsed) {
  const auto start = Clock::now();
  int ok = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = generate_synthetic(desk_params(0.2, 5, 1000 + s));
    try {
      const auto res = recover_subspace_alg1(inst, SketchPlan::for_alg1(100, 50, design, 5000 + s));
      ok += classify_recovery(inst, res.basis, res.report, 1e-6).exact ? 1 : 0;
    } catch (const Error&) {
    }
  }
  if (elapsed) *elapsed = seconds_since(start);
  return ok;
}

Outcome criterion1() {
  double t = 0.0;
  const int ok = alg1_successes(Design::red, &t);
  return {ok >= 19 && t < 60.0, fmt("Alg1/RED 500x1000 r=5 rho=0.2 m1=100 m2=50: %d/20 exact, %.2f s", ok, t)};
}

Outcome criterion2() {
  const int red = alg1_successes(Design::red, nullptr);
  const int rrd = alg1_successes(Design::rrd, nullptr);
  const double gap = std::abs(red - rrd) / 20.0;
  return {gap <= 0.1, fmt("Alg1 success RED %d/20 vs RRD %d/20, gap %.2f", red, rrd, gap)};
}

Outcome criterion3() {
  const Index r = 20, m2 = r + 2;
  int red_full = 0, rrd_full = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    ClusteredRowsParams p;
    p.n_clusters = 20;
    p.per_cluster_dims = 1;
    p.ambient = 300;
    p.sizes = two_regime_sizes(20, 450);
    p.seed = 700 + s;
    const DenseMatrix l = generate_clustered_rows(p);  // 450 x 300, rank 20
    red_full += numerical_rank(embed_rows_gaussian(l, m2, derive_seed(s, 1)).compressed) == r;
    rrd_full += numerical_rank(sample_rows(l, m2, derive_seed(s, 2)).compressed) == r;
  }
  return {red_full >= 95 && rrd_full <= 50,
          fmt("clustered rows 450x300 r=20, m2=22: rank kept RED %d/100, RRD %d/100", red_full, rrd_full)};
}

int alg2_successes(double rho) {
  int ok = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = generate_synthetic(desk_params(rho, 5, 2000 + s));
    GridSpec spec;
    spec.algorithm = Algorithm::convex;
    spec.design = Design::red;
    ok += run_single(inst, truth_basis(inst), 150, 50, 6000 + s, spec).verdict.exact ? 1 : 0;
  }
  return ok;
}

Outcome criterion4() {
  const int sparse = alg2_successes(0.01);
  const int dense = alg2_successes(0.2);
  return {sparse >= 19 && dense <= 4,
          fmt("Alg2/RED 500x1000 r=5 m1=150 m2=50: rho=0.01 %d/20, rho=0.2 %d/20", sparse, dense)};
}

Outcome criterion5() {
  const auto cases = testing::load_convex_oracle(RSR_ORACLE_FILE);
  double worst_obj = 0.0, worst_cert = 0.0;
  for (const auto& c : cases) {
    ConvexSolveConfig cfg;
    cfg.lambda = c.lambda;
    const auto dec = decompose(c.data, cfg);
    worst_obj = std::max(worst_obj, std::abs(dec.objective - c.objective) / c.objective);
    worst_cert = std::max(worst_cert, optimality_certificate(dec, c.lambda).worst());
  }

  // All columns equal: V has rows of norm 1/sqrt(n) < lambda, so (D, 0) is optimal.
  Rng rng(99);
  const Vector u = gaussian_matrix(15, 1, 1.0, rng).col(0);
  const DenseMatrix flat = u * Vector::Ones(20).transpose();
  ConvexSolveConfig cfg;
  cfg.lambda = default_lambda(1);
  const auto no_out = decompose(flat, cfg);
  const double err_flat = std::max((no_out.low_rank - flat).cwiseAbs().maxCoeff(),
                                   no_out.column_sparse.cwiseAbs().maxCoeff());
  // One column: |l| + lambda |d - l| with lambda < 1 puts everything in C.
  const DenseMatrix single = gaussian_matrix(15, 1, 1.0, rng);
  const auto one = decompose(single, cfg);
  const double err_single = std::max(one.low_rank.cwiseAbs().maxCoeff(),
                                     (one.column_sparse - single).cwiseAbs().maxCoeff());
  const bool pass = cases.size() == 20 && worst_obj < 1e-6 && worst_cert < 1e-4 && err_flat < 1e-7 &&
                    err_single < 1e-7;
  return {pass, fmt("%zu instances: max rel objective gap %.2e, max certificate %.2e; "
                    "analytic cases err %.1e / %.1e",
                    cases.size(), worst_obj, worst_cert, err_flat, err_single)};
}

nlohmann::json run_bounds_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  args.insert(args.begin(), "bounds");
  if (cli::cli_main(args, out, err) != 0) throw std::runtime_error(err.str());
  return nlohmann::json::parse(out.str());
}

bool six_figures(double got, double want) { return std::abs(got - want) <= 5e-6 * std::abs(want); }

Outcome criterion6() {
  // K/N2' = 0.25, N2/N2' = 1.25.
  const auto j = run_bounds_cli({"--theorem", "1", "--r", "5", "--mu-v-prime", "1", "--delta", "0.05",
                                 "--c", "2", "--n2", "1250", "--k", "250", "--q", "10"});
  const double alpha = j["alpha"];
  const double lemma4 = j["lemmas"]["column_span_samples"];
  const double embed = j["lemmas"]["embedding_rank_m2_ceil"];
  const double alpha_hand = 100.0 * std::log(400.0);
  const double lemma4_hand = 50.0 * std::log(200.0);
  const double embed_hand = std::ceil(24.0 * (15.0 * std::log(42.0 * std::sqrt(2.0)) + std::log(40.0)));
  const bool pass = six_figures(alpha, alpha_hand) && six_figures(lemma4, lemma4_hand) && embed == embed_hand;
  return {pass, fmt("alpha %.6g (hand %.6g), column-span lemma %.6g (hand %.6g), embedding m2 %.0f (hand %.0f)",
                    alpha, alpha_hand, lemma4, lemma4_hand, embed, embed_hand)};
}

Outcome criterion7() {
  const double delta = 0.1;
  int ok = 0;
  Index m1_seen = 0, m2_seen = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    SyntheticParams p;
    p.n1 = 100;
    p.n2 = 300;
    p.rank = 2;
    p.fixed_outlier_count = 2;
    p.seed = 3000 + t;
    const auto inst = generate_synthetic(p);
    BoundInputs in = bound_inputs_for(inst, delta);
    // Any c > 1 is admissible; take the one that balances the two alpha branches.
    const double ratio = static_cast<double>(in.k) / static_cast<double>(in.n2_prime);
    const double inlier_alpha = 20.0 * in.coherence.mu_v_prime * 2.0 * std::log(8.0 / delta);
    in.c = std::max(2.0, std::sqrt(inlier_alpha / (3.0 * ratio * std::log(2.0 / delta))));
    const auto b = bound_alg1_red(in);
    m1_seen = b.m1_sufficient;
    m2_seen = b.m2_sufficient;
    try {
      const auto res = recover_subspace_alg1(
          inst, SketchPlan::for_alg1(b.m1_sufficient, b.m2_sufficient, Design::red, 9000 + t));
      ok += classify_recovery(inst, res.basis, res.report, 1e-6).exact ? 1 : 0;
    } catch (const Error&) {
    }
  }
  return {ok >= 100, fmt("Alg1/RED at the sufficient (m1, m2) (last trial %ld, %ld), delta=0.1: %d/200 exact",
                         static_cast<long>(m1_seen), static_cast<long>(m2_seen), ok)};
}

Outcome criterion8() {
  GridSpec spec;
  spec.m1_values = {60, 120};
  spec.m2_values = {20, 60, 90};
  spec.trials = 30;
  spec.base_seed = 42;
  spec.instance_params = desk_params(0.2, 20, 0);
  const auto small = run_phase_transition(spec);
  spec.instance_params.n1 = 1000;
  spec.instance_params.n2 = 4000;
  const auto large = run_phase_transition(spec);
  const double gap = (small.success_rate - large.success_rate).cwiseAbs().maxCoeff();

  BaselineConfig cfg;
  cfg.baseline_time_limit_seconds = 60.0;
  cfg.base_seed = 7;
  const auto rows = run_baseline_comparison({2000}, 20, 0.01, 400, 100, 1, cfg);
  const auto& row = rows.front();
  const bool pass = gap < 0.1 && row.speedup >= 5.0;
  return {pass, fmt("max cellwise success gap 500x1000 vs 1000x4000 = %.3f; speedup at 2000x2000 = %.1fx "
                    "(randomized %.2f s, baseline %.1f s%s)",
                    gap, row.speedup, row.randomized_median_seconds, row.baseline_median_seconds,
                    row.baseline_censored ? ", capped: lower bound" : "")};
}

Outcome criterion9() {
  const std::vector<std::pair<const char*, std::function<std::string(std::uint64_t)>>> props = {
      {"round trip", testing::check_roundtrip},
      {"coherence tightness", testing::check_coherence_tight},
      {"sketch rank monotone", testing::check_sketch_rank_monotone},
      {"residual scale", testing::check_residual_scale},
      {"projector idempotent", testing::check_projector_idempotent},
      {"merit monotone", testing::check_merit_monotone},
  };
  std::string failures;
  int run = 0;
  for (const auto& [name, check] : props)
    for (std::uint64_t s = 0; s < 1000; ++s, ++run) {
      const std::string msg = check(derive_seed(0xacce, s));
      if (!msg.empty()) {
        failures += fmt("%s seed %llu: %s; ", name, static_cast<unsigned long long>(s), msg.c_str());
        break;
      }
    }
  return {failures.empty(), failures.empty() ? fmt("6 properties x 1000 cases, %d checks green", run) : failures};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3,
                                                          criterion4, criterion5, criterion6,
                                                          criterion7, criterion8, criterion9};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << o.detail << " ("
              << fmt("%.1f", seconds_since(start)) << " s)" << std::endl;
  }
  return all ? 0 : 1;
}
