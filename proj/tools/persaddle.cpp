// persaddle command-line interface
//
// Subcommands: analyze, periodogram, simulate, power, pvalue, selftest, bench.
// Exit codes: 0 success, 2 usage error, 3 input error, 4 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "persaddle/hypothesis.hpp"
#include "persaddle/lightcurve.hpp"
#include "persaddle/periodogram.hpp"
#include "persaddle/power.hpp"
#include "persaddle/quadform.hpp"
#include "persaddle/rng.hpp"
#include "persaddle/simulate.hpp"

namespace ps = persaddle;

namespace {

ps::ModelFamily parse_family(const std::string& name) {
  if (name == "gpr") return ps::ModelFamily::gpr;
  if (name == "gpr_red") return ps::ModelFamily::gpr_red;
  if (name == "gpr_weighted") return ps::ModelFamily::gpr_weighted;
  if (name == "sine") return ps::ModelFamily::sinusoid_ls;
  if (name == "sine_weighted") return ps::ModelFamily::sinusoid_wls;
  throw CLI::ValidationError("--model", "unknown model family: " + name);
}

ps::PValueMethod parse_method(const std::string& name) {
  if (name == "auto") return ps::PValueMethod::auto_route;
  if (name == "exact") return ps::PValueMethod::exact_f;
  if (name == "saddlepoint") return ps::PValueMethod::saddlepoint;
  if (name == "imhof") return ps::PValueMethod::imhof;
  if (name == "mc") return ps::PValueMethod::mc;
  throw CLI::ValidationError("--method", "unknown evaluator: " + name);
}

struct AnalyzeArgs {
  std::string input, out_prefix;
  std::string model = "gpr";
  std::string statistic = "F";
  std::string evaluator = "auto";
  std::string fit_objective = "ml";
  double pmin = 0.5, pmax = 30.0, step = 0.1;
  double oversampling = 0.0;  // > 0 switches to the frequency grid
  double alpha = 0.05;
  int two_stage_n = 0;
  double fine_step = 0.001;
  int threads = 0;
  bool scan_only = false;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int run_analyze(const AnalyzeArgs& a) {
  const ps::LightCurve lc = ps::load_lightcurve(a.input);
  ps::ModelSpec spec;
  spec.family = parse_family(a.model);
  spec.statistic = a.statistic == "CVF" ? ps::StatisticKind::CVF : ps::StatisticKind::F;
  if (ps::is_weighted_family(spec.family)) {
    if (!lc.has_accuracies())
      throw std::invalid_argument("weighted model requires an accuracy column in the input");
    spec.weights = lc.accuracies.cwiseInverse();
  }

  ps::PeriodGrid grid =
      a.oversampling > 0.0
          ? ps::build_grid(a.pmin, a.pmax, ps::GridMode::uniform_frequency, a.oversampling,
                           lc.timespan())
          : ps::build_grid(a.pmin, a.pmax, ps::GridMode::uniform_period, a.step);

  ps::ScanOptions opt;
  opt.alpha_family = a.alpha;
  opt.threads = a.threads;
  opt.pvalue.method = parse_method(a.evaluator);
  opt.fit_objective =
      a.fit_objective == "cve" ? ps::FitObjective::loo_cve : ps::FitObjective::marginal_likelihood;

  ps::Periodogram pg = a.two_stage_n > 0
                           ? ps::two_stage_search(lc, grid, a.two_stage_n, a.fine_step, spec, opt)
                           : ps::scan(lc, grid, spec, opt);

  std::ostringstream csv;
  ps::write_periodogram_csv(pg, csv);
  write_file(a.out_prefix + ".periodogram.csv", csv.str());
  write_file(a.out_prefix + ".periodogram.json", ps::periodogram_to_json(pg));

  if (!a.scan_only) {
    const ps::DetectionReport rep = ps::detect(pg);
    write_file(a.out_prefix + ".detection.json", ps::detection_to_json(rep));
    if (rep.primary) {
      std::printf("primary period: %.6g d (statistic %.6g, p = %.3g), %zu extra\n",
                  rep.primary->period, rep.primary->statistic, rep.primary->p_value,
                  rep.extras.size());
      for (const auto& e : rep.extras)
        std::printf("  extra: %.6g d (p = %.3g)%s%s\n", e.period, e.p_value,
                    e.harmonic.empty() ? "" : ", ", e.harmonic.c_str());
    } else {
      std::printf("no significant period (alpha_family = %g, %ld tests)\n", pg.alpha_family,
                  pg.m_tests);
    }
  } else {
    std::printf("scanned %zu periods (Sidak level %.7g)\n", pg.entries.size(),
                pg.sidak_level_used);
  }
  return 0;
}

int run_simulate(const std::string& scenario_path, const std::string& out_path,
                 std::int64_t seed_override) {
  ps::SimScenario sc = ps::load_scenario(scenario_path);
  if (seed_override >= 0) sc.seed = static_cast<std::uint64_t>(seed_override);
  const ps::LightCurve lc = ps::simulate(sc);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  ps::write_lightcurve_csv(lc, out);
  std::printf("wrote %ld points to %s\n", static_cast<long>(lc.n()), out_path.c_str());
  return 0;
}

int run_pvalue(const std::string& spec_path, std::string lambdas_csv, double x_arg,
               std::string method, int reps, std::uint64_t seed) {
  ps::QuadFormSpec spec;
  double x = x_arg;
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in) throw std::runtime_error("cannot open " + spec_path);
    nlohmann::json j;
    in >> j;
    const auto lam = j.at("lambdas").get<std::vector<double>>();
    spec.lambdas = Eigen::Map<const ps::Vec>(lam.data(), static_cast<ps::Index>(lam.size()));
    x = j.at("x").get<double>();
    method = j.value("method", method);
    reps = j.value("reps", reps);
    seed = j.value("seed", seed);
  } else {
    std::vector<double> lam;
    std::stringstream ss(lambdas_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) lam.push_back(std::stod(tok));
    if (lam.empty()) throw std::invalid_argument("pvalue: no lambdas given");
    spec.lambdas = Eigen::Map<const ps::Vec>(lam.data(), static_cast<ps::Index>(lam.size()));
  }
  double p;
  if (method == "saddlepoint") {
    p = ps::saddlepoint_survival(spec, x).survival;
  } else if (method == "imhof") {
    p = ps::imhof_survival(spec, x);
  } else if (method == "mc") {
    p = ps::mc_survival(spec, x, reps, seed);
  } else {
    throw CLI::ValidationError("--method", "unknown evaluator: " + method);
  }
  std::printf("%.10g\n", p);
  return 0;
}

int run_power(const std::string& study_path, const std::string& out_prefix, int threads) {
  std::ifstream in(study_path);
  if (!in) throw std::runtime_error("cannot open " + study_path);
  nlohmann::json j;
  in >> j;
  const std::string kind = j.value("kind", "power");
  if (kind == "red_vs_white") {
    ps::RedVsWhiteConfig cfg;
    if (j.contains("sampling_file")) {
      std::ifstream ts(j.at("sampling_file").get<std::string>());
      if (!ts) throw std::runtime_error("cannot open sampling file");
      std::vector<double> t;
      std::string line;
      while (std::getline(ts, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        t.push_back(std::stod(line));
      }
      cfg.times = Eigen::Map<const ps::Vec>(t.data(), static_cast<ps::Index>(t.size()));
    }
    if (j.contains("rho_grid")) cfg.rho_grid = j.at("rho_grid").get<std::vector<double>>();
    cfg.reps = j.value("reps", cfg.reps);
    cfg.true_period = j.value("true_period", cfg.true_period);
    cfg.noise_variance = j.value("noise_variance", cfg.noise_variance);
    if (j.contains("signal")) {
      cfg.signal.amplitude = j.at("signal").value("amplitude", 1.0);
      cfg.signal.period = j.at("signal").value("period", cfg.true_period);
      cfg.signal.smoothness = j.at("signal").value("smoothness", 1.0);
    }
    if (j.contains("grid")) {
      cfg.p_min = j.at("grid").value("pmin", cfg.p_min);
      cfg.p_max = j.at("grid").value("pmax", cfg.p_max);
      cfg.step = j.at("grid").value("step", cfg.step);
    }
    cfg.alpha_family = j.value("alpha", cfg.alpha_family);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = threads;
    const auto rows = ps::red_vs_white_study(cfg);
    std::ostringstream csv;
    ps::write_red_vs_white_csv(rows, csv);
    write_file(out_prefix + ".red_vs_white.csv", csv.str());
    write_file(out_prefix + ".red_vs_white.json", ps::red_vs_white_to_json(rows));
    std::cout << csv.str();
    return 0;
  }

  ps::PowerStudyConfig cfg;
  cfg.scenario = ps::scenario_from_json(j.at("scenario").dump());
  cfg.snr_grid = j.at("snr_grid").get<std::vector<double>>();
  cfg.levels = j.at("levels").get<std::vector<double>>();
  cfg.reps = j.value("reps", cfg.reps);
  cfg.true_period = j.value("true_period", cfg.true_period);
  if (j.contains("grid")) {
    cfg.p_min = j.at("grid").value("pmin", cfg.p_min);
    cfg.p_max = j.at("grid").value("pmax", cfg.p_max);
    cfg.step = j.at("grid").value("step", cfg.step);
  }
  if (j.contains("family")) cfg.family = parse_family(j.at("family").get<std::string>());
  cfg.seed = j.value("seed", cfg.seed);
  cfg.nm_fit = j.value("nm_fit", false);
  cfg.threads = threads;
  const ps::PowerReport report = ps::estimate_power(cfg);
  std::ostringstream csv;
  ps::write_power_csv(report, csv);
  write_file(out_prefix + ".power.csv", csv.str());
  write_file(out_prefix + ".power.json", ps::power_to_json(report));
  std::cout << csv.str();
  return 0;
}

int run_bench(int n, int reps, std::uint64_t seed) {
  const auto rows = ps::timing_benchmark(n, reps, seed);
  double saddle = 0.0, mc = 0.0, imhof = 0.0;
  std::printf("%-12s %10s %12s\n", "method", "seconds", "p-value");
  for (const auto& r : rows) {
    std::printf("%-12s %10.3f %12.5g\n", r.method.c_str(), r.seconds, r.value);
    if (r.method == "saddlepoint") saddle = r.seconds;
    if (r.method == "mc") mc = r.seconds;
    if (r.method == "imhof") imhof = r.seconds;
  }
  if (saddle > 0.0)
    std::printf("mc/saddlepoint = %.1fx, imhof/saddlepoint = %.2fx\n", mc / saddle,
                imhof / saddle);
  return 0;
}

// ---------------------------------------------------------------------------
// selftest: cross-evaluator coherence of the distribution engine
// ---------------------------------------------------------------------------

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

ps::QuadFormSpec random_spec(ps::Rng& rng, int size) {
  ps::Vec lam(size);
  for (int i = 0; i < size; ++i) {
    const double mag = std::exp(2.0 * rng.uniform() - 1.0);
    lam(i) = (rng.uniform() < 0.3 ? -0.3 : 1.0) * mag;
  }
  ps::QuadFormSpec spec;
  spec.lambdas = lam;
  return spec;
}

int run_selftest(bool quick, bool perturb) {
  std::vector<Check> checks;
  ps::Rng rng(424242);
  const int n_specs = quick ? 6 : 16;
  const int mc_reps = quick ? 40000 : 100000;

  for (int k = 0; k < n_specs; ++k) {
    const int size = 5 + static_cast<int>(rng.uniform() * (quick ? 60 : 195));
    ps::QuadFormSpec spec = random_spec(rng, size);
    const double mean = spec.lambdas.sum();
    const double sd = std::sqrt(2.0 * spec.lambdas.squaredNorm());
    for (const double x : {mean - 1.5 * sd, mean + 0.05 * sd, mean + 2.0 * sd}) {
      ps::QuadFormSpec sp_in = spec;
      const std::string tag = "spec" + std::to_string(k) + "/x=" + std::to_string(x);
      if (perturb && k == 1) sp_in.lambdas *= 1.05;
      const double sp = ps::saddlepoint_survival(sp_in, x).survival;
      const double im = ps::imhof_survival(spec, x);
      const double mc = ps::mc_survival(spec, x, mc_reps, 999 + k);
      const double se = std::sqrt(std::max(im * (1 - im), 1e-9) / mc_reps);
      checks.push_back({"saddlepoint-vs-imhof " + tag, std::fabs(sp - im) <= 5e-3,
                        "|" + std::to_string(sp) + " - " + std::to_string(im) + "|"});
      checks.push_back({"mc-vs-imhof " + tag, std::fabs(mc - im) <= std::max(3.0 * se, 1.5e-3),
                        "|" + std::to_string(mc) + " - " + std::to_string(im) + "|"});
    }
    // scale equivariance of the saddlepoint path
    ps::QuadFormSpec scaled = spec;
    scaled.lambdas *= 3.5;
    const double x0 = mean + 0.8 * sd;
    const double s1 = ps::saddlepoint_survival(spec, x0).survival;
    const double s2 = ps::saddlepoint_survival(scaled, 3.5 * x0).survival;
    checks.push_back({"scale-equivariance spec" + std::to_string(k), std::fabs(s1 - s2) <= 1e-10,
                      std::to_string(s1) + " vs " + std::to_string(s2)});
  }

  // projection spectrum: saddlepoint against the exact F distribution
  for (const double t : {0.5, 2.0, 6.0}) {
    const int d1 = 2, d2 = 47;
    ps::Vec lam(d1 + d2);
    for (int i = 0; i < d1; ++i) lam(i) = 1.0;
    for (int i = 0; i < d2; ++i) lam(d1 + i) = -t;
    ps::QuadFormSpec spec;
    spec.lambdas = lam;
    const double sp = ps::saddlepoint_survival(spec, 0.0).survival;
    const double ex = ps::exact_f_survival(t, d1, d2);
    checks.push_back({"saddlepoint-vs-exactF t=" + std::to_string(t), std::fabs(sp - ex) <= 5e-3,
                      std::to_string(sp) + " vs " + std::to_string(ex)});
  }

  int failures = 0;
  for (const auto& c : checks) {
    if (!c.pass) ++failures;
    std::printf("[%s] %s  (%s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
  }
  std::printf("%zu checks, %d failures\n", checks.size(), failures);
  return failures == 0 ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Period detection for irregularly sampled light curves via generalized F / CVF "
               "tests with saddlepoint-calibrated p-values"};
  app.require_subcommand(1);
  app.set_config("--config");

  AnalyzeArgs aa;
  auto add_grid_flags = [&](CLI::App* cmd) {
    cmd->add_option("--pmin", aa.pmin, "shortest trial period [d]");
    cmd->add_option("--pmax", aa.pmax, "longest trial period [d]");
    cmd->add_option("--step", aa.step, "uniform period step [d]");
    cmd->add_option("--freq-oversampling", aa.oversampling,
                    "use a uniform-frequency grid with this oversampling factor");
    cmd->add_option("--alpha", aa.alpha, "family-wise significance level");
    cmd->add_option("--threads", aa.threads, "worker count (default: env PERSADDLE_THREADS)");
    cmd->add_option("--model", aa.model, "gpr | gpr_red | gpr_weighted | sine | sine_weighted");
    cmd->add_option("--statistic", aa.statistic, "F | CVF");
    cmd->add_option("--evaluator", aa.evaluator, "auto | exact | saddlepoint | imhof | mc");
    cmd->add_option("--fit-objective", aa.fit_objective, "ml | cve");
  };

  auto* analyze = app.add_subcommand("analyze", "scan a light curve and report detections");
  analyze->add_option("--input", aa.input, "light-curve CSV/TSV")->required();
  analyze->add_option("--out-prefix", aa.out_prefix, "output path prefix")->required();
  analyze->add_option("--two-stage", aa.two_stage_n, "refine around the top-N peaks");
  analyze->add_option("--fine-step", aa.fine_step, "fine grid step for --two-stage");
  add_grid_flags(analyze);

  auto* pgram = app.add_subcommand("periodogram", "scan only; write the periodogram files");
  pgram->add_option("--input", aa.input)->required();
  pgram->add_option("--out-prefix", aa.out_prefix)->required();
  add_grid_flags(pgram);

  std::string scenario_path, sim_out = "lightcurve.csv";
  std::int64_t sim_seed = -1;
  auto* sim = app.add_subcommand("simulate", "write a synthetic light curve");
  sim->add_option("--scenario", scenario_path, "scenario JSON")->required();
  sim->add_option("--out", sim_out, "output CSV");
  sim->add_option("--seed", sim_seed, "override the scenario seed");

  std::string study_path, power_prefix = "power";
  int power_threads = 0;
  auto* power = app.add_subcommand("power", "run a power study from a JSON config");
  power->add_option("--study", study_path, "study JSON")->required();
  power->add_option("--out-prefix", power_prefix);
  power->add_option("--threads", power_threads);

  std::string pv_spec, pv_lambdas, pv_method = "saddlepoint";
  double pv_x = 0.0;
  int pv_reps = 100000;
  std::uint64_t pv_seed = 1;
  auto* pv = app.add_subcommand("pvalue", "P(sum lambda_i chi2_1 > x) for an eigenvalue spec");
  pv->add_option("--spec", pv_spec, "JSON file {lambdas, x, method}");
  pv->add_option("--lambdas", pv_lambdas, "comma-separated eigenvalues");
  pv->add_option("--x", pv_x);
  pv->add_option("--method", pv_method, "saddlepoint | imhof | mc");
  pv->add_option("--reps", pv_reps, "mc repetitions");
  pv->add_option("--seed", pv_seed);

  bool st_quick = false, st_perturb = false;
  auto* st = app.add_subcommand("selftest", "cross-evaluator coherence checks");
  st->add_flag("--quick", st_quick, "small subset, finishes in well under a minute");
  st->add_flag("--perturb", st_perturb, "inject a lambda perturbation (must fail; for testing)");

  int bench_n = 200, bench_reps = 50;
  std::uint64_t bench_seed = 7;
  auto* bench = app.add_subcommand("bench", "p-value path timing comparison");
  bench->add_option("--n", bench_n);
  bench->add_option("--reps", bench_reps);
  bench->add_option("--seed", bench_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (analyze->parsed()) return run_analyze(aa);
    if (pgram->parsed()) {
      aa.scan_only = true;
      return run_analyze(aa);
    }
    if (sim->parsed()) return run_simulate(scenario_path, sim_out, sim_seed);
    if (power->parsed()) return run_power(study_path, power_prefix, power_threads);
    if (pv->parsed()) return run_pvalue(pv_spec, pv_lambdas, pv_x, pv_method, pv_reps, pv_seed);
    if (st->parsed()) return run_selftest(st_quick, st_perturb);
    if (bench->parsed()) return run_bench(bench_n, bench_reps, bench_seed);
  } catch (const persaddle::parse_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 3;
  } catch (const persaddle::numerical_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 3;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
