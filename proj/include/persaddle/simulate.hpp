#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "persaddle/covariance.hpp"
#include "persaddle/lightcurve.hpp"

namespace persaddle {

struct SamplingSpec {
  enum class Kind { explicit_times, uniform_random };
  Kind kind = Kind::uniform_random;
  Vec times;            // explicit_times
  int n = 0;            // uniform_random
  double timespan = 0;  // uniform_random [days]

  static SamplingSpec explicit_times_of(Vec t);
  static SamplingSpec uniform(int n, double timespan);
};

struct SignalSpec {
  enum class Kind { sine, gpr_prior, constant };
  Kind kind = Kind::constant;
  // sine: intercept + amplitude/sqrt(2) * (sin + cos)(2 pi t / period)
  double period = 1.0;
  double amplitude = 0.0;
  double intercept = 0.0;
  // gpr_prior
  KernelParams kernel;
  // constant
  double value = 0.0;

  static SignalSpec sine(double period, double amplitude, double intercept = 0.0);
  static SignalSpec gpr_prior(const KernelParams& kp);
  static SignalSpec constant(double value);
};

struct NoiseSpec {
  enum class Kind { white, red };
  Kind kind = Kind::white;
  double variance = 1.0;
  double rho = 0.0;  // red only

  static NoiseSpec white(double variance);
  static NoiseSpec red(double rho, double variance);
};

/// Optional per-point accuracies: s_j ~ U[lo, hi]; the white-noise draw for
/// point j is then scaled by s_j and the accuracies column is populated.
struct AccuracySpec {
  double lo = 0.0, hi = 0.0;
  bool enabled() const { return hi > 0.0; }
};

struct SimScenario {
  SamplingSpec sampling;
  SignalSpec signal;
  NoiseSpec noise;
  AccuracySpec accuracies;
  std::optional<double> target_snr;  // rescales noise so var(signal)/var(noise) == target
  std::uint64_t seed = 0;
};

/// Deterministic synthesis: signal and noise streams are derived from the
/// scenario seed independently, so the same seed reproduces bit-identical
/// curves.
LightCurve simulate(const SimScenario& sc);

/// Draw from the zero-mean GP prior with the periodic kernel, via jittered
/// Cholesky of K.
Vec gpr_prior_draw(const Vec& times, const KernelParams& kp, std::uint64_t seed);

std::string scenario_to_json(const SimScenario& sc);
SimScenario scenario_from_json(const std::string& text);
SimScenario load_scenario(const std::string& path);

}  // namespace persaddle
