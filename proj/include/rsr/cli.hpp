#pragma once

// Command-line front end: generate, recover, phase, bounds, bench.
// Exit status: 0 success, 1 invalid input or usage, 2 internal error.

#include "rsr/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace rsr::cli {

/// "a:b:step" (inclusive) or "v1,v2,...".
inline IndexList parse_range(const std::string& text) {
  IndexList out;
  auto parse_one = [&](const std::string& tok) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      return static_cast<Index>(v);
    } catch (const std::exception&) {
      throw InvalidParameter("range: malformed value '" + tok + "'");
    }
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    require(parts.size() == 3, "range: expected a:b:step");
    const Index a = parse_one(parts[0]), b = parse_one(parts[1]), step = parse_one(parts[2]);
    require(step >= 1 && a <= b, "range: need a <= b and step >= 1");
    for (Index v = a; v <= b; v += step) out.push_back(v);
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(parse_one(p));
  }
  require(!out.empty(), "range: empty");
  return out;
}

/// Flat `key = value` lines, `#` starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidParameter("config line " + std::to_string(n) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), "config line " + std::to_string(n) + ": empty key");
    std::replace(key.begin(), key.end(), '_', '-');
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

/// Expands `--config FILE`: its entries are appended as flags unless the
/// same flag already appears on the command line.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open config '" + path + "'");
  std::set<std::string> given;
  for (const auto& a : args)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));
  for (auto& [key, value] : read_config(in)) {
    const std::string flag = "--" + key;
    if (given.count(flag)) continue;
    if (value == "true") {
      args.push_back(flag);
    } else if (value != "false") {
      args.push_back(flag);
      args.push_back(value);
    }
  }
  return args;
}

namespace detail {

struct InstanceFlags {
  Index n1 = 500;
  Index n2 = 1000;
  Index rank = 5;
  double rho = 0.2;
  double outlier_sigma = 20.0;
  double noise_sigma = 0.0;
  Index fixed_k = -1;

  void add(CLI::App* app) {
    app->add_option("--n1", n1, "ambient dimension");
    app->add_option("--n2", n2, "number of columns");
    app->add_option("--rank", rank, "rank of the low-rank part");
    app->add_option("--rho", rho, "outlier probability per column");
    app->add_option("--outlier-sigma", outlier_sigma, "outlier entry standard deviation");
    app->add_option("--noise-sigma", noise_sigma, "additive noise standard deviation");
    app->add_option("--fixed-k", fixed_k, "exact outlier count instead of Bernoulli(rho)");
  }

  SyntheticParams params(std::uint64_t seed) const {
    SyntheticParams p{n1, n2, rank, rho, outlier_sigma, noise_sigma, seed, std::nullopt};
    if (fixed_k >= 0) p.fixed_outlier_count = fixed_k;
    return p;
  }
};

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "alg1") return Algorithm::independence;
  if (s == "alg2") return Algorithm::convex;
  throw InvalidParameter("--alg must be alg1 or alg2");
}

inline Design parse_design(const std::string& s) {
  if (s == "red") return Design::red;
  if (s == "rrd") return Design::rrd;
  throw InvalidParameter("--design must be red or rrd");
}

}  // namespace detail

inline int cli_main(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Randomized robust subspace recovery"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rsr 1.0.0");

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic instance to files");
  detail::InstanceFlags gen_inst;
  std::uint64_t gen_seed = 0;
  std::string gen_prefix;
  std::string gen_format = "bin";
  gen_inst.add(gen);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_prefix, "output path prefix")->required();
  gen->add_option("--format", gen_format, "bin or csv")->check(CLI::IsMember({"bin", "csv"}));

  // recover
  auto* rec = app.add_subcommand("recover", "single end-to-end recovery run");
  std::string rec_observed, rec_low_rank, rec_outliers, rec_alg = "alg1", rec_design = "red";
  Index rec_m1 = 100, rec_m2 = 50, rec_rank = 0, rec_k = 0;
  std::uint64_t rec_seed = 0;
  double rec_threshold = 1e-6, rec_lambda = 0.0, rec_tol = 1e-6;
  rec->add_option("--observed", rec_observed, "observed matrix file")->required();
  rec->add_option("--low-rank", rec_low_rank, "ground-truth low-rank matrix file");
  rec->add_option("--outlier-indices", rec_outliers, "ground-truth outlier index file");
  rec->add_option("--rank", rec_rank, "true rank, when known");
  rec->add_option("--alg", rec_alg)->check(CLI::IsMember({"alg1", "alg2"}));
  rec->add_option("--design", rec_design)->check(CLI::IsMember({"red", "rrd"}));
  rec->add_option("--m1", rec_m1);
  rec->add_option("--m2", rec_m2);
  rec->add_option("--seed", rec_seed);
  rec->add_option("--threshold", rec_threshold, "detection threshold on relative residual");
  rec->add_option("--lambda", rec_lambda, "convex program weight (alg2)");
  rec->add_option("--k-estimate", rec_k, "sampled outlier count for the default lambda (alg2)");
  rec->add_option("--tol", rec_tol, "subspace error tolerance for exact recovery");

  // phase
  auto* phase = app.add_subcommand("phase", "phase-transition grid over (m1, m2)");
  detail::InstanceFlags ph_inst;
  std::string ph_alg = "alg1", ph_design = "red", ph_m1, ph_m2, ph_out;
  Index ph_trials = 20;
  std::uint64_t ph_seed = 0;
  unsigned ph_threads = 0;
  bool ph_overlay = false;
  ph_inst.add(phase);
  phase->add_option("--alg", ph_alg)->check(CLI::IsMember({"alg1", "alg2"}));
  phase->add_option("--design", ph_design)->check(CLI::IsMember({"red", "rrd"}));
  phase->add_option("--m1", ph_m1, "a:b:step or comma list")->required();
  phase->add_option("--m2", ph_m2, "a:b:step or comma list")->required();
  phase->add_option("--trials", ph_trials);
  phase->add_option("--seed", ph_seed);
  phase->add_option("--threads", ph_threads);
  phase->add_option("--out", ph_out, "CSV path; metadata goes to <out>.meta.json");
  phase->add_flag("--bound-overlay", ph_overlay, "attach the theorem bound to the metadata");

  // bounds
  auto* bnd = app.add_subcommand("bounds", "sufficient (m1, m2) from the closed-form conditions");
  int b_theorem = 1;
  BoundInputs b_in;
  b_in.n1 = 1000;
  b_in.n2 = 1000;
  Index b_k = 0;
  double b_g = 0.0, b_q = -1.0;
  bnd->add_option("--theorem", b_theorem, "1: alg1/RED, 2: alg1/RRD, 3: alg2/RED, 4: alg2/RRD")
      ->check(CLI::Range(1, 4));
  bnd->add_option("--r", b_in.r);
  bnd->add_option("--n1", b_in.n1);
  bnd->add_option("--n2", b_in.n2);
  bnd->add_option("--k", b_k, "number of outlier columns");
  bnd->add_option("--mu-v", b_in.coherence.mu_v);
  bnd->add_option("--mu-v-prime", b_in.coherence.mu_v_prime);
  bnd->add_option("--eta-u", b_in.coherence.eta_u);
  bnd->add_option("--delta", b_in.delta);
  bnd->add_option("--c", b_in.c);
  bnd->add_option("--g", b_g, "unset picks 2 (N2'/N2)(1 + 6 r mu_v 121/9)");
  bnd->add_option("--c1", b_in.c1);
  bnd->add_option("--c2", b_in.c2);
  bnd->add_option("--f-half", b_in.f_half, "JL exponent f(1/2)");
  bnd->add_option("--q", b_q, "outlier bound used by the lemma diagnostics");

  // bench
  auto* bench = app.add_subcommand("bench", "randomized vs full-data runtime table");
  std::string bench_sizes = "500,1000,2000", bench_out;
  Index bench_rank = 20, bench_m1 = 400, bench_m2 = 100, bench_trials = 3;
  double bench_rho = 0.01, bench_cap = 600.0;
  std::uint64_t bench_seed = 0;
  bench->add_option("--sizes", bench_sizes);
  bench->add_option("--rank", bench_rank);
  bench->add_option("--rho", bench_rho);
  bench->add_option("--m1", bench_m1);
  bench->add_option("--m2", bench_m2);
  bench->add_option("--trials", bench_trials);
  bench->add_option("--time-limit", bench_cap, "baseline cap in seconds");
  bench->add_option("--seed", bench_seed);
  bench->add_option("--out", bench_out, "CSV path (default stdout)");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);

    if (*gen) {
      const auto inst = generate_synthetic(gen_inst.params(gen_seed));
      const std::string ext = "." + gen_format;
      write_matrix(gen_prefix + ".observed" + ext, inst.observed);
      write_matrix(gen_prefix + ".low_rank" + ext, *inst.truth_low_rank);
      write_indices(gen_prefix + ".outliers.txt", *inst.outlier_indices);
      out << nlohmann::json{{"observed", gen_prefix + ".observed" + ext},
                            {"low_rank", gen_prefix + ".low_rank" + ext},
                            {"outlier_indices", gen_prefix + ".outliers.txt"},
                            {"rows", inst.rows()},
                            {"cols", inst.cols()},
                            {"rank", gen_inst.rank},
                            {"outlier_count", inst.outlier_indices->size()},
                            {"seed", gen_seed}}
                 .dump(2)
          << '\n';
    } else if (*rec) {
      DataInstance inst;
      inst.observed = read_matrix(rec_observed);
      if (!rec_low_rank.empty()) inst.truth_low_rank = read_matrix(rec_low_rank);
      if (!rec_outliers.empty()) inst.outlier_indices = read_indices(rec_outliers);
      if (rec_rank > 0) inst.true_rank = rec_rank;
      check_consistency(inst);
      const Design design = detail::parse_design(rec_design);
      RecoveryResult result;
      nlohmann::json j;
      if (detail::parse_algorithm(rec_alg) == Algorithm::independence) {
        Alg1Options opts;
        opts.detection_threshold = rec_threshold;
        result = recover_subspace_alg1(inst, SketchPlan::for_alg1(rec_m1, rec_m2, design, rec_seed), opts);
      } else {
        ConvexSolveConfig cfg;
        if (rec_lambda > 0.0) cfg.lambda = rec_lambda;
        Alg2Options opts;
        opts.detection_threshold = rec_threshold;
        if (rec_k > 0) opts.k_estimate = rec_k;
        auto r2 = recover_subspace_alg2(inst, SketchPlan::for_alg2(rec_m1, rec_m2, design, rec_seed), cfg, opts);
        j["lambda"] = r2.lambda;
        j["iterations"] = r2.decomposition.iterations;
        result = std::move(r2.recovery);
      }
      j["estimated_rank"] = result.basis.est_rank;
      j["detected_outliers"] = result.report.outliers();
      j["sampled_columns"] = result.sketch.effective_m1;
      if (inst.has_truth()) {
        const nlohmann::json verdict = to_json(classify_recovery(inst, result.basis, result.report, rec_tol));
        for (const auto& [key, value] : verdict.items()) j[key] = value;
      }
      out << j.dump(2) << '\n';
    } else if (*phase) {
      GridSpec spec;
      spec.algorithm = detail::parse_algorithm(ph_alg);
      spec.design = detail::parse_design(ph_design);
      spec.m1_values = parse_range(ph_m1);
      spec.m2_values = parse_range(ph_m2);
      spec.trials = ph_trials;
      spec.base_seed = ph_seed;
      spec.threads = ph_threads;
      spec.instance_params = ph_inst.params(0);
      spec.bound_overlay = ph_overlay;
      const auto res = run_phase_transition(spec);
      if (ph_out.empty()) {
        write_grid_csv(out, res);
      } else {
        std::ofstream f(ph_out);
        if (!f) throw InvalidParameter("cannot open '" + ph_out + "' for writing");
        write_grid_csv(f, res);
        std::ofstream meta(ph_out + ".meta.json");
        if (!meta) throw InvalidParameter("cannot open '" + ph_out + ".meta.json' for writing");
        meta << res.metadata.dump(2) << '\n';
      }
    } else if (*bnd) {
      require(b_k >= 0 && b_k < b_in.n2, "--k must lie in [0, n2)");
      b_in.k = b_k;
      b_in.n2_prime = b_in.n2 - b_k;
      if (b_g > 0.0) b_in.g = b_g;
      if (b_q >= 0.0) b_in.outlier_bound = b_q;
      if (b_in.coherence.mu_v_prime == 0.0) b_in.coherence.mu_v_prime = b_in.coherence.mu_v;
      if (b_in.coherence.mu_v == 0.0) b_in.coherence.mu_v = b_in.coherence.mu_v_prime;
      nlohmann::json j = to_json(bound_for_theorem(b_theorem, b_in));
      j["theorem"] = b_theorem;
      j["lemmas"] = bound_lemmas(b_in);
      j["inputs"] = {{"r", b_in.r},          {"n1", b_in.n1},
                     {"n2", b_in.n2},        {"n2_prime", b_in.n2_prime},
                     {"k", b_in.k},          {"mu_v", b_in.coherence.mu_v},
                     {"mu_v_prime", b_in.coherence.mu_v_prime},
                     {"eta_u", b_in.coherence.eta_u},
                     {"delta", b_in.delta},  {"c", b_in.c},
                     {"c1", b_in.c1},        {"c2", b_in.c2},
                     {"f_half", b_in.f_half}};
      out << j.dump(2) << '\n';
    } else if (*bench) {
      BaselineConfig cfg;
      cfg.baseline_time_limit_seconds = bench_cap;
      cfg.base_seed = bench_seed;
      const auto rows = run_baseline_comparison(parse_range(bench_sizes), bench_rank, bench_rho,
                                                bench_m1, bench_m2, bench_trials, cfg);
      if (bench_out.empty()) {
        write_baseline_csv(out, rows);
      } else {
        std::ofstream f(bench_out);
        if (!f) throw InvalidParameter("cannot open '" + bench_out + "' for writing");
        write_baseline_csv(f, rows);
      }
    }
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return 0;
  } catch (const CLI::Success&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const InvalidParameter& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DegenerateInput& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, out, err);
}

}  // namespace rsr::cli
