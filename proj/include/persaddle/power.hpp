#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "persaddle/periodogram.hpp"
#include "persaddle/simulate.hpp"

namespace persaddle {

/// Replicated power study: simulate -> scan -> detect, counting a replicate
/// toward power when the grid period nearest the true one is significant.
struct PowerStudyConfig {
  SimScenario scenario;            // template; snr and per-replicate seeds are overridden
  std::vector<double> snr_grid;    // target var(signal)/var(noise)
  std::vector<double> levels;      // per-test confidence levels (Sidak-corrected upstream)
  int reps = 200;
  double true_period = 5.2;
  double p_min = 0.5, p_max = 10.0, step = 0.1;
  ModelFamily family = ModelFamily::gpr;
  std::uint64_t seed = 20240817;
  int threads = 0;
  /// GPR families run on the profiled h-grid engine by default; set to use
  /// the full Nelder-Mead fit per period instead (much slower).
  bool nm_fit = false;
};

struct PowerCell {
  std::string method;  // "F" or "CVF"
  double snr = 0.0;
  double level = 0.0;
  double power = 0.0;
  double se = 0.0;
  double avg_detected = 0.0;       // mean count of significant periods
  double correct_peak_rate = 0.0;  // statistic argmax at the true grid period
  int failures = 0;
};

struct PowerReport {
  std::vector<PowerCell> cells;
  int reps = 0;
  long m_tests = 0;
};

PowerReport estimate_power(const PowerStudyConfig& cfg);

/// Red- vs white-noise GPR comparison on red-noise data with a fixed
/// GP-prior mean curve.
struct RedVsWhiteConfig {
  Vec times;                                  // sampling fixture
  std::vector<double> rho_grid{0.1, 0.5, 0.9};
  int reps = 30;
  double true_period = 5.1;
  double noise_variance = 1.0;
  KernelParams signal;  // prior generating the fixed mean curve
  double p_min = 1.0, p_max = 10.0, step = 0.1;
  double alpha_family = 0.05;
  std::uint64_t seed = 20240817;
  int threads = 0;
};

struct RedVsWhiteRow {
  double rho = 0.0;
  double red_correct_peak = 0.0, white_correct_peak = 0.0;
  double red_false_mean = 0.0, white_false_mean = 0.0;
  double red_true_detect = 0.0, white_true_detect = 0.0;
  int red_failures = 0, white_failures = 0;
};

std::vector<RedVsWhiteRow> red_vs_white_study(const RedVsWhiteConfig& cfg);

/// Wall-clock comparison of the p-value evaluation paths at size n: the
/// saddlepoint and Imhof paths (eigen reduction included), the traditional
/// matrix Monte-Carlo null calibration, and the exact F path for the
/// sinusoid regression.
struct TimingRow {
  std::string method;
  double seconds = 0.0;  // total over all repetitions
  double value = 0.0;    // p-value from the last repetition
};

std::vector<TimingRow> timing_benchmark(int n, int reps, std::uint64_t seed, int mc_draws = 10000);

void write_power_csv(const PowerReport& report, std::ostream& out);
std::string power_to_json(const PowerReport& report);
void write_red_vs_white_csv(const std::vector<RedVsWhiteRow>& rows, std::ostream& out);
std::string red_vs_white_to_json(const std::vector<RedVsWhiteRow>& rows);

}  // namespace persaddle
