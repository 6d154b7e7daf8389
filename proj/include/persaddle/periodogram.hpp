#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "persaddle/hypothesis.hpp"

namespace persaddle {

enum class GridMode { uniform_period, uniform_frequency };

struct PeriodGrid {
  std::vector<double> periods;  // strictly increasing
  GridMode mode = GridMode::uniform_period;
  double step = 0.0;          // uniform_period step [days]
  double oversampling = 0.0;  // uniform_frequency factor

  std::size_t size() const { return periods.size(); }
};

/// uniform_period: arithmetic grid p_min, p_min + step, ...
/// uniform_frequency: frequencies from 1/p_max to 1/p_min spaced by
/// 1 / (oversampling * timespan), converted back to periods.
PeriodGrid build_grid(double p_min, double p_max, GridMode mode, double step_or_oversampling,
                      double timespan = 0.0);

struct PeriodogramEntry {
  double period = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;
  bool ok = true;  // false when this entry failed or degenerated
  std::string note;
};

struct Periodogram {
  std::vector<PeriodogramEntry> entries;
  ModelFamily family = ModelFamily::sinusoid_ls;
  StatisticKind statistic = StatisticKind::F;
  double alpha_family = 0.05;
  double sidak_level_used = 0.95;
  double alpha_per_test = 0.05;
  long m_tests = 0;
  GridMode grid_mode = GridMode::uniform_period;
};

struct ScanOptions {
  double alpha_family = 0.05;
  int threads = 0;  // 0 = default_thread_count()
  PValueOptions pvalue;
  FitObjective fit_objective = FitObjective::marginal_likelihood;
  FitConfig fit;
  /// m used for the Sidak correction; 0 = the grid size of this scan. The
  /// two-stage search passes the stage-1 grid size here.
  long sidak_m_override = 0;
};

/// One hypothesis test per grid period; per-entry failures are recorded in
/// the entry and the scan continues. Deterministic regardless of threads.
Periodogram scan(const LightCurve& lc, const PeriodGrid& grid, const ModelSpec& spec,
                 const ScanOptions& opt = {});

/// Same single pass, returning the F and CVF periodograms of a GPR family at
/// shared fitting cost.
std::pair<Periodogram, Periodogram> scan_f_cvf(const LightCurve& lc, const PeriodGrid& grid,
                                               const ModelSpec& spec, const ScanOptions& opt = {});

/// Coarse scan, then fine scans of half-width one rough step around the
/// top-N statistics; the Sidak m of stage 1 is reused for stage 2. Returns
/// the merged, deduplicated periodogram.
Periodogram two_stage_search(const LightCurve& lc, const PeriodGrid& rough, int top_n,
                             double fine_step, const ModelSpec& spec, const ScanOptions& opt = {});

struct DetectedPeriod {
  double period = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
  std::string harmonic;  // e.g. "2:1 of primary", advisory only
};

struct DetectionReport {
  std::optional<DetectedPeriod> primary;  // argmax statistic among significant
  std::vector<DetectedPeriod> extras;     // remaining significant entries
};

DetectionReport detect(const Periodogram& pg);

void write_periodogram_csv(const Periodogram& pg, std::ostream& out);
std::string periodogram_to_json(const Periodogram& pg);
std::string detection_to_json(const DetectionReport& rep);

int default_thread_count();

}  // namespace persaddle
