#include "persaddle/periodogram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "parallel.hpp"

namespace persaddle {

int default_thread_count() {
  if (const char* env = std::getenv("PERSADDLE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

PeriodGrid build_grid(double p_min, double p_max, GridMode mode, double step_or_oversampling,
                      double timespan) {
  if (!(p_min > 0.0) || !(p_max > p_min))
    throw std::invalid_argument("build_grid: need 0 < p_min < p_max");
  PeriodGrid g;
  g.mode = mode;
  if (mode == GridMode::uniform_period) {
    const double step = step_or_oversampling;
    if (!(step > 0.0)) throw std::invalid_argument("build_grid: step must be > 0");
    g.step = step;
    const long count = static_cast<long>(std::floor((p_max - p_min) / step + 1e-9)) + 1;
    g.periods.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) g.periods.push_back(p_min + static_cast<double>(i) * step);
  } else {
    const double of = step_or_oversampling;
    if (!(of > 0.0)) throw std::invalid_argument("build_grid: oversampling must be > 0");
    if (!(timespan > 0.0))
      throw std::invalid_argument("build_grid: frequency mode needs the data timespan");
    g.oversampling = of;
    const double f_lo = 1.0 / p_max;
    const double f_hi = 1.0 / p_min;
    const double df = 1.0 / (of * timespan);
    const long count = static_cast<long>(std::floor((f_hi - f_lo) / df + 1e-9)) + 1;
    g.periods.reserve(static_cast<std::size_t>(count));
    for (long i = count - 1; i >= 0; --i)
      g.periods.push_back(1.0 / (f_lo + static_cast<double>(i) * df));
  }
  if (g.periods.empty()) throw std::invalid_argument("build_grid: empty grid");
  return g;
}

namespace {

struct ScanPair {
  Periodogram f;
  Periodogram cvf;
  bool has_cvf = false;
};

ScanPair scan_impl(const LightCurve& lc, const PeriodGrid& grid, const ModelSpec& spec,
                   const ScanOptions& opt) {
  if (grid.periods.empty()) throw std::invalid_argument("scan: empty grid");
  const long m = opt.sidak_m_override > 0 ? opt.sidak_m_override
                                          : static_cast<long>(grid.periods.size());
  const double level = sidak_level(opt.alpha_family, m);
  const double alpha = 1.0 - level;

  TestOptions topt;
  topt.alpha_per_test = alpha;
  topt.pvalue = opt.pvalue;
  topt.fit_objective = opt.fit_objective;
  topt.fit = opt.fit;
  topt.compute_cvf_for_gpr = is_gpr_family(spec.family);

  std::vector<PeriodTestOutcome> outcomes(grid.periods.size());
  std::vector<std::string> failures(grid.periods.size());
  const int threads = opt.threads > 0 ? opt.threads : default_thread_count();
  detail::parallel_for(grid.periods.size(), threads, [&](std::size_t i) {
    ModelSpec sp = spec;
    sp.trial_period = grid.periods[i];
    try {
      outcomes[i] = run_period_test(lc, sp, topt);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });

  auto header = [&](StatisticKind stat) {
    Periodogram pg;
    pg.family = spec.family;
    pg.statistic = stat;
    pg.alpha_family = opt.alpha_family;
    pg.sidak_level_used = level;
    pg.alpha_per_test = alpha;
    pg.m_tests = m;
    pg.grid_mode = grid.mode;
    pg.entries.resize(grid.periods.size());
    return pg;
  };
  ScanPair out{header(StatisticKind::F), header(StatisticKind::CVF), topt.compute_cvf_for_gpr};

  for (std::size_t i = 0; i < grid.periods.size(); ++i) {
    auto fill = [&](PeriodogramEntry& e, const TestResult& r) {
      e.period = grid.periods[i];
      if (!failures[i].empty()) {
        e.ok = false;
        e.note = failures[i];
        return;
      }
      e.statistic = r.statistic;
      e.p_value = r.p_value;
      e.significant = r.significant;
      e.ok = !r.degenerate;
      e.note = r.note;
    };
    fill(out.f.entries[i], outcomes[i].f);
    if (out.has_cvf)
      fill(out.cvf.entries[i], outcomes[i].cvf ? *outcomes[i].cvf : TestResult{});
  }
  return out;
}

}  // namespace

Periodogram scan(const LightCurve& lc, const PeriodGrid& grid, const ModelSpec& spec,
                 const ScanOptions& opt) {
  ScanPair pair = scan_impl(lc, grid, spec, opt);
  return spec.statistic == StatisticKind::CVF && pair.has_cvf ? std::move(pair.cvf)
                                                              : std::move(pair.f);
}

std::pair<Periodogram, Periodogram> scan_f_cvf(const LightCurve& lc, const PeriodGrid& grid,
                                               const ModelSpec& spec, const ScanOptions& opt) {
  if (!is_gpr_family(spec.family))
    throw std::invalid_argument("scan_f_cvf: CVF requires a GPR family");
  ScanPair pair = scan_impl(lc, grid, spec, opt);
  return {std::move(pair.f), std::move(pair.cvf)};
}

Periodogram two_stage_search(const LightCurve& lc, const PeriodGrid& rough, int top_n,
                             double fine_step, const ModelSpec& spec, const ScanOptions& opt) {
  if (top_n < 1) throw std::invalid_argument("two_stage_search: need top_n >= 1");
  if (!(fine_step > 0.0)) throw std::invalid_argument("two_stage_search: fine_step must be > 0");
  Periodogram stage1 = scan(lc, rough, spec, opt);

  const double rough_step =
      rough.mode == GridMode::uniform_period && rough.step > 0.0
          ? rough.step
          : (rough.periods.size() > 1 ? rough.periods[1] - rough.periods[0] : fine_step);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < stage1.entries.size(); ++i)
    if (stage1.entries[i].ok) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return stage1.entries[a].statistic > stage1.entries[b].statistic;
  });
  const std::size_t n_peaks = std::min<std::size_t>(static_cast<std::size_t>(top_n), order.size());

  ScanOptions fine_opt = opt;
  fine_opt.sidak_m_override = stage1.m_tests;  // stage-1 correction reused

  std::vector<PeriodogramEntry> merged = stage1.entries;
  for (std::size_t k = 0; k < n_peaks; ++k) {
    const double center = stage1.entries[order[k]].period;
    const double lo = std::max(center - rough_step, fine_step);
    const double hi = center + rough_step;
    PeriodGrid fine = build_grid(lo, hi, GridMode::uniform_period, fine_step);
    Periodogram pg = scan(lc, fine, spec, fine_opt);
    merged.insert(merged.end(), pg.entries.begin(), pg.entries.end());
  }

  std::sort(merged.begin(), merged.end(),
            [](const PeriodogramEntry& a, const PeriodogramEntry& b) { return a.period < b.period; });
  std::vector<PeriodogramEntry> dedup;
  dedup.reserve(merged.size());
  for (const auto& e : merged)
    if (dedup.empty() || std::fabs(e.period - dedup.back().period) > 1e-12) dedup.push_back(e);

  Periodogram out = std::move(stage1);
  out.entries = std::move(dedup);
  return out;
}

namespace {

std::string harmonic_label(double period, double primary) {
  const double r = period / primary;
  for (int num = 1; num <= 4; ++num)
    for (int den = 1; den <= 4; ++den) {
      const double target = static_cast<double>(num) / den;
      if (std::fabs(r / target - 1.0) <= 0.01) {
        if (num == 1 && den == 1) return "";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%d:%d of primary", num, den);
        return buf;
      }
    }
  return "";
}

}  // namespace

DetectionReport detect(const Periodogram& pg) {
  if (pg.entries.empty()) throw std::invalid_argument("detect: empty periodogram");
  DetectionReport rep;
  std::size_t best = pg.entries.size();
  for (std::size_t i = 0; i < pg.entries.size(); ++i) {
    const auto& e = pg.entries[i];
    if (!e.ok || !e.significant) continue;
    if (best == pg.entries.size() || e.statistic > pg.entries[best].statistic) best = i;
  }
  if (best == pg.entries.size()) return rep;  // nothing significant
  const auto& p = pg.entries[best];
  rep.primary = DetectedPeriod{p.period, p.statistic, p.p_value, ""};
  for (std::size_t i = 0; i < pg.entries.size(); ++i) {
    if (i == best) continue;
    const auto& e = pg.entries[i];
    if (!e.ok || !e.significant) continue;
    rep.extras.push_back(
        DetectedPeriod{e.period, e.statistic, e.p_value, harmonic_label(e.period, p.period)});
  }
  return rep;
}

void write_periodogram_csv(const Periodogram& pg, std::ostream& out) {
  out << "period,statistic,p_value,significant\n";
  char buf[128];
  for (const auto& e : pg.entries) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%d\n", e.period, e.statistic, e.p_value,
                  e.significant ? 1 : 0);
    out << buf;
  }
}

std::string periodogram_to_json(const Periodogram& pg) {
  nlohmann::json j;
  j["model"] = family_name(pg.family);
  j["statistic"] = pg.statistic == StatisticKind::CVF ? "CVF" : "F";
  j["alpha_family"] = pg.alpha_family;
  j["sidak_level"] = pg.sidak_level_used;
  j["alpha_per_test"] = pg.alpha_per_test;
  j["m_tests"] = pg.m_tests;
  j["grid_mode"] = pg.grid_mode == GridMode::uniform_frequency ? "uniform_frequency" : "uniform_period";
  auto& arr = j["entries"] = nlohmann::json::array();
  for (const auto& e : pg.entries) {
    nlohmann::json je;
    je["period"] = e.period;
    je["statistic"] = e.statistic;
    je["p_value"] = e.p_value;
    je["significant"] = e.significant;
    je["ok"] = e.ok;
    if (!e.note.empty()) je["note"] = e.note;
    arr.push_back(std::move(je));
  }
  return j.dump(2);
}

std::string detection_to_json(const DetectionReport& rep) {
  nlohmann::json j;
  if (rep.primary) {
    j["primary"] = {{"period", rep.primary->period},
                    {"statistic", rep.primary->statistic},
                    {"p_value", rep.primary->p_value}};
  } else {
    j["primary"] = nullptr;
  }
  auto& arr = j["extras"] = nlohmann::json::array();
  for (const auto& e : rep.extras) {
    nlohmann::json je = {{"period", e.period}, {"statistic", e.statistic}, {"p_value", e.p_value}};
    if (!e.harmonic.empty()) je["harmonic"] = e.harmonic;
    arr.push_back(std::move(je));
  }
  return j.dump(2);
}

}  // namespace persaddle
