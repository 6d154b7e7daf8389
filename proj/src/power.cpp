#include "persaddle/power.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "parallel.hpp"
#include "persaddle/rng.hpp"
#include "scan_engine.hpp"

namespace persaddle {

namespace {

std::size_t nearest_index(const std::vector<double>& periods, double p) {
  std::size_t best = 0;
  double dist = std::fabs(periods[0] - p);
  for (std::size_t i = 1; i < periods.size(); ++i) {
    const double d = std::fabs(periods[i] - p);
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  return best;
}

struct RepOutcome {
  std::vector<double> stats;
  std::vector<double> pvals;
  std::vector<bool> ok;
  bool failed = false;
};

struct Counts {
  int detected_true = 0;
  int correct_peak = 0;
  long total_detected = 0;
  int failures = 0;
  int usable = 0;
};

Counts tally(const std::vector<RepOutcome>& reps_out, std::size_t true_idx, double alpha) {
  Counts c;
  for (const auto& rep : reps_out) {
    if (rep.failed) {
      ++c.failures;
      continue;
    }
    ++c.usable;
    bool true_sig = false;
    long det = 0;
    std::size_t argmax = rep.stats.size();
    for (std::size_t i = 0; i < rep.stats.size(); ++i) {
      if (!rep.ok[i]) continue;
      if (argmax == rep.stats.size() || rep.stats[i] > rep.stats[argmax]) argmax = i;
      if (rep.pvals[i] < alpha) {
        ++det;
        if (i == true_idx) true_sig = true;
      }
    }
    if (true_sig) ++c.detected_true;
    if (argmax == true_idx) ++c.correct_peak;
    c.total_detected += det;
  }
  return c;
}

PowerCell make_cell(const std::string& method, double snr, double level, const Counts& c) {
  PowerCell cell;
  cell.method = method;
  cell.snr = snr;
  cell.level = level;
  const double n = std::max(1, c.usable);
  cell.power = c.detected_true / n;
  cell.se = std::sqrt(cell.power * (1.0 - cell.power) / n);
  cell.avg_detected = c.total_detected / n;
  cell.correct_peak_rate = c.correct_peak / n;
  cell.failures = c.failures;
  return cell;
}

}  // namespace

PowerReport estimate_power(const PowerStudyConfig& cfg) {
  if (cfg.reps < 30) throw std::invalid_argument("estimate_power: need reps >= 30");
  if (cfg.snr_grid.empty() || cfg.levels.empty())
    throw std::invalid_argument("estimate_power: snr_grid and levels must be nonempty");
  const PeriodGrid grid = build_grid(cfg.p_min, cfg.p_max, GridMode::uniform_period, cfg.step);
  const std::size_t true_idx = nearest_index(grid.periods, cfg.true_period);
  const int threads = cfg.threads > 0 ? cfg.threads : default_thread_count();
  const bool gpr = is_gpr_family(cfg.family);

  PowerReport report;
  report.reps = cfg.reps;
  report.m_tests = static_cast<long>(grid.size());

  for (std::size_t is = 0; is < cfg.snr_grid.size(); ++is) {
    const double snr = cfg.snr_grid[is];
    // simulate replicates
    std::vector<LightCurve> curves(static_cast<std::size_t>(cfg.reps));
    for (int r = 0; r < cfg.reps; ++r) {
      SimScenario sc = cfg.scenario;
      sc.target_snr = snr;
      sc.seed = Rng::stream_seed(cfg.seed, 1000 * is + static_cast<std::size_t>(r));
      curves[static_cast<std::size_t>(r)] = simulate(sc);
    }

    std::vector<RepOutcome> f_out(curves.size()), cvf_out(curves.size());

    if (gpr && !cfg.nm_fit) {
      std::vector<Vec> ys(curves.size());
      for (std::size_t r = 0; r < curves.size(); ++r) ys[r] = curves[r].values;
      detail::GprScanEngine engine(curves[0].times, grid.periods);
      detail::EngineTask task;
      task.ys = &ys;
      task.red = cfg.family == ModelFamily::gpr_red;
      const auto res = engine.run({task}, threads);
      for (std::size_t r = 0; r < curves.size(); ++r) {
        auto& fo = f_out[r];
        auto& co = cvf_out[r];
        fo.stats.resize(grid.size());
        fo.pvals.resize(grid.size());
        fo.ok.resize(grid.size());
        co = fo;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const auto& e = res[0][r][i];
          fo.stats[i] = e.f_stat;
          fo.pvals[i] = e.f_p;
          fo.ok[i] = e.ok;
          co.stats[i] = e.cvf_stat;
          co.pvals[i] = e.cvf_p;
          co.ok[i] = e.ok;
        }
      }
    } else {
      ScanOptions sopt;
      sopt.threads = 1;  // replicates parallelize instead
      ModelSpec spec;
      spec.family = cfg.family;
      spec.statistic = StatisticKind::F;
      detail::parallel_for(curves.size(), threads, [&](std::size_t r) {
        try {
          if (gpr) {
            const auto pair = scan_f_cvf(curves[r], grid, spec, sopt);
            auto unpack = [&](const Periodogram& pg, RepOutcome& out) {
              out.stats.resize(grid.size());
              out.pvals.resize(grid.size());
              out.ok.resize(grid.size());
              for (std::size_t i = 0; i < grid.size(); ++i) {
                out.stats[i] = pg.entries[i].statistic;
                out.pvals[i] = pg.entries[i].p_value;
                out.ok[i] = pg.entries[i].ok;
              }
            };
            unpack(pair.first, f_out[r]);
            unpack(pair.second, cvf_out[r]);
          } else {
            ModelSpec sp = spec;
            if (cfg.family == ModelFamily::sinusoid_wls)
              sp.weights = curves[r].accuracies.cwiseInverse();
            const Periodogram pg = scan(curves[r], grid, sp, sopt);
            auto& out = f_out[r];
            out.stats.resize(grid.size());
            out.pvals.resize(grid.size());
            out.ok.resize(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) {
              out.stats[i] = pg.entries[i].statistic;
              out.pvals[i] = pg.entries[i].p_value;
              out.ok[i] = pg.entries[i].ok;
            }
          }
        } catch (const std::exception&) {
          f_out[r].failed = true;
          cvf_out[r].failed = true;
        }
      });
    }

    for (const double level : cfg.levels) {
      const double alpha = 1.0 - level;
      report.cells.push_back(make_cell("F", snr, level, tally(f_out, true_idx, alpha)));
      if (gpr) report.cells.push_back(make_cell("CVF", snr, level, tally(cvf_out, true_idx, alpha)));
    }
  }
  return report;
}

std::vector<RedVsWhiteRow> red_vs_white_study(const RedVsWhiteConfig& cfg) {
  if (cfg.times.size() < 10) throw std::invalid_argument("red_vs_white_study: need a time fixture");
  const PeriodGrid grid = build_grid(cfg.p_min, cfg.p_max, GridMode::uniform_period, cfg.step);
  const std::size_t true_idx = nearest_index(grid.periods, cfg.true_period);
  const double level = sidak_level(cfg.alpha_family, static_cast<long>(grid.size()));
  const double alpha = 1.0 - level;
  const int threads = cfg.threads > 0 ? cfg.threads : default_thread_count();
  const Index n = cfg.times.size();

  // fixed mean curve: one realisation of the prior, shared by all scenarios
  const Vec mean_curve = gpr_prior_draw(cfg.times, cfg.signal, Rng::stream_seed(cfg.seed, 77));

  std::vector<std::vector<Vec>> ys(cfg.rho_grid.size());
  for (std::size_t iq = 0; iq < cfg.rho_grid.size(); ++iq) {
    const double rho = cfg.rho_grid[iq];
    Mat l;
    if (rho > 0.0)
      l = cholesky(cfg.noise_variance * red_noise_corr(cfg.times, rho).m);
    ys[iq].resize(static_cast<std::size_t>(cfg.reps));
    for (int r = 0; r < cfg.reps; ++r) {
      Rng rng(Rng::stream_seed(cfg.seed, 1000 * (iq + 1) + static_cast<std::size_t>(r)));
      Vec z(n);
      for (Index i = 0; i < n; ++i) z(i) = rng.normal();
      ys[iq][static_cast<std::size_t>(r)] =
          mean_curve + (rho > 0.0 ? Vec(l * z) : Vec(std::sqrt(cfg.noise_variance) * z));
    }
  }

  detail::GprScanEngine engine(cfg.times, grid.periods);
  std::vector<detail::EngineTask> tasks;
  for (std::size_t iq = 0; iq < cfg.rho_grid.size(); ++iq) {
    detail::EngineTask red{&ys[iq], true};
    detail::EngineTask white{&ys[iq], false};
    tasks.push_back(red);
    tasks.push_back(white);
  }
  const auto res = engine.run(tasks, threads);

  std::vector<RedVsWhiteRow> rows;
  for (std::size_t iq = 0; iq < cfg.rho_grid.size(); ++iq) {
    RedVsWhiteRow row;
    row.rho = cfg.rho_grid[iq];
    auto summarize = [&](const std::vector<std::vector<detail::EngineEntry>>& reps, double& peak,
                         double& false_mean, double& true_det, int& failures) {
      int n_ok = 0, n_peak = 0, n_true = 0;
      long false_count = 0;
      for (const auto& rep : reps) {
        bool any_ok = false;
        std::size_t argmax = rep.size();
        for (std::size_t i = 0; i < rep.size(); ++i) {
          if (!rep[i].ok) continue;
          any_ok = true;
          if (argmax == rep.size() || rep[i].f_stat > rep[argmax].f_stat) argmax = i;
        }
        if (!any_ok) {
          ++failures;
          continue;
        }
        ++n_ok;
        if (argmax == true_idx) ++n_peak;
        for (std::size_t i = 0; i < rep.size(); ++i) {
          if (!rep[i].ok || !(rep[i].f_p < alpha)) continue;
          if (i == true_idx) {
            ++n_true;
          } else {
            ++false_count;
          }
        }
      }
      const double denom = std::max(1, n_ok);
      peak = n_peak / denom;
      false_mean = false_count / denom;
      true_det = n_true / denom;
    };
    summarize(res[2 * iq], row.red_correct_peak, row.red_false_mean, row.red_true_detect,
              row.red_failures);
    summarize(res[2 * iq + 1], row.white_correct_peak, row.white_false_mean, row.white_true_detect,
              row.white_failures);
    rows.push_back(row);
  }
  return rows;
}

std::vector<TimingRow> timing_benchmark(int n, int reps, std::uint64_t seed, int mc_draws) {
  if (n < 20) throw std::invalid_argument("timing_benchmark: need n >= 20");
  if (reps < 1) throw std::invalid_argument("timing_benchmark: need reps >= 1");
  using clock = std::chrono::steady_clock;

  // GPR-style fixture: irregular times, plug-in hyperparameters
  Rng rng(seed);
  std::vector<double> traw(static_cast<std::size_t>(n));
  for (auto& t : traw) t = 60.0 * rng.uniform();
  std::sort(traw.begin(), traw.end());
  for (std::size_t i = 1; i < traw.size(); ++i)
    if (traw[i] <= traw[i - 1]) traw[i] = traw[i - 1] + 1e-7;
  const Vec times = Eigen::Map<const Vec>(traw.data(), n);
  Vec y(n);
  for (Index i = 0; i < n; ++i) y(i) = rng.normal();
  const Vec eps = y.array() - y.mean();

  ModelSpec spec;
  spec.family = ModelFamily::gpr;
  spec.trial_period = 5.0;
  spec.hyper = KernelParams{1.0, 5.0, 1.0, 1.0, 0.0};
  FitResult fit;
  fit.hyper = spec.hyper;
  const TestMatrices tm = build_test_matrices(spec, fit, times);
  const double t_obs = f_statistic(eps, tm.m0, tm.m1);

  std::vector<TimingRow> rows;
  auto timed = [&](const std::string& name, auto&& fn) {
    const auto t0 = clock::now();
    double value = 0.0;
    for (int r = 0; r < reps; ++r) value = fn();
    const auto t1 = clock::now();
    rows.push_back({name, std::chrono::duration<double>(t1 - t0).count(), value});
  };

  timed("saddlepoint", [&]() {
    const QuadFormSpec qf = reduce_to_lambdas(tm.null_m0, tm.null_m1, t_obs);
    return saddlepoint_survival(qf, 0.0).survival;
  });
  timed("imhof", [&]() {
    const QuadFormSpec qf = reduce_to_lambdas(tm.null_m0, tm.null_m1, t_obs);
    return imhof_survival(qf, 0.0);
  });
  // the traditional calibration this package replaces: simulate null
  // statistics from the matrices and read the empirical tail
  const Mat num = tm.null_m0 - tm.null_m1;
  timed("mc", [&]() {
    Rng mc_rng(seed + 1);
    Vec z(n);
    int hits = 0;
    for (int d = 0; d < mc_draws; ++d) {
      for (Index i = 0; i < z.size(); ++i) z(i) = mc_rng.normal();
      const double a = z.dot(num * z);
      const double b = z.dot(tm.null_m1 * z);
      if (a / b > t_obs) ++hits;
    }
    return static_cast<double>(hits) / mc_draws;
  });

  ModelSpec ols = spec;
  ols.family = ModelFamily::sinusoid_ls;
  const TestMatrices tm_ols = build_test_matrices(ols, fit, times);
  const double t_ols = f_statistic(eps, tm_ols.m0, tm_ols.m1);
  timed("exact", [&]() { return exact_f_survival(t_ols, tm_ols.dof_num, tm_ols.dof_den); });
  return rows;
}

void write_power_csv(const PowerReport& report, std::ostream& out) {
  out << "method,snr,level,power,se,avg_detected,correct_peak_rate,failures\n";
  for (const auto& c : report.cells)
    out << c.method << ',' << c.snr << ',' << c.level << ',' << c.power << ',' << c.se << ','
        << c.avg_detected << ',' << c.correct_peak_rate << ',' << c.failures << '\n';
}

std::string power_to_json(const PowerReport& report) {
  nlohmann::json j;
  j["reps"] = report.reps;
  j["m_tests"] = report.m_tests;
  auto& arr = j["cells"] = nlohmann::json::array();
  for (const auto& c : report.cells)
    arr.push_back({{"method", c.method},
                   {"snr", c.snr},
                   {"level", c.level},
                   {"power", c.power},
                   {"se", c.se},
                   {"avg_detected", c.avg_detected},
                   {"correct_peak_rate", c.correct_peak_rate},
                   {"failures", c.failures}});
  return j.dump(2);
}

void write_red_vs_white_csv(const std::vector<RedVsWhiteRow>& rows, std::ostream& out) {
  out << "rho,red_correct_peak,red_false_mean,white_correct_peak,white_false_mean,"
         "red_true_detect,white_true_detect\n";
  for (const auto& r : rows)
    out << r.rho << ',' << r.red_correct_peak << ',' << r.red_false_mean << ','
        << r.white_correct_peak << ',' << r.white_false_mean << ',' << r.red_true_detect << ','
        << r.white_true_detect << '\n';
}

std::string red_vs_white_to_json(const std::vector<RedVsWhiteRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"rho", r.rho},
                   {"red_correct_peak", r.red_correct_peak},
                   {"red_false_mean", r.red_false_mean},
                   {"white_correct_peak", r.white_correct_peak},
                   {"white_false_mean", r.white_false_mean},
                   {"red_true_detect", r.red_true_detect},
                   {"white_true_detect", r.white_true_detect}});
  return arr.dump(2);
}

}  // namespace persaddle
