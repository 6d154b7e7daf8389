#pragma once

#include <iosfwd>
#include <string>

#include "persaddle/types.hpp"

namespace persaddle {

/// Irregularly sampled light curve: strictly increasing times [days],
/// magnitudes, and optional per-point one-sigma accuracies. Immutable after
/// construction; safe to share across threads.
struct LightCurve {
  Vec times;
  Vec values;
  Vec accuracies;  // size 0 when absent

  LightCurve() = default;
  LightCurve(Vec t, Vec v, Vec acc = Vec());

  Index n() const { return times.size(); }
  bool has_accuracies() const { return accuracies.size() > 0; }
  double timespan() const { return times(times.size() - 1) - times(0); }
};

struct PhasedCurve {
  Vec phases;  // in [0, 1)
  Vec values;
  double period = 0.0;
};

struct ParseOptions {
  char delimiter = ',';
  bool auto_delimiter = true;  // detect ',', tab or whitespace from the first data row
  char comment = '#';
};

LightCurve parse_lightcurve(std::istream& in, const ParseOptions& opt = {});
LightCurve load_lightcurve(const std::string& path, const ParseOptions& opt = {});

void write_lightcurve_csv(const LightCurve& lc, std::ostream& out);
std::string lightcurve_to_json(const LightCurve& lc);
LightCurve lightcurve_from_json(const std::string& text);

/// Phase-fold: phases[j] = frac(times[j] / period).
PhasedCurve fold(const LightCurve& lc, double period);

/// var(values) / noise_variance with the n-1 variance denominator.
double snr(const LightCurve& lc, double noise_variance);

double sample_mean(const Vec& v);
double sample_variance(const Vec& v);  // n-1 denominator, n >= 2

}  // namespace persaddle
