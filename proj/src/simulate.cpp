#include "persaddle/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "persaddle/rng.hpp"

namespace persaddle {

SamplingSpec SamplingSpec::explicit_times_of(Vec t) {
  SamplingSpec s;
  s.kind = Kind::explicit_times;
  s.times = std::move(t);
  return s;
}

SamplingSpec SamplingSpec::uniform(int n, double timespan) {
  if (n < 3 || !(timespan > 0.0))
    throw std::invalid_argument("SamplingSpec::uniform: need n >= 3 and timespan > 0");
  SamplingSpec s;
  s.kind = Kind::uniform_random;
  s.n = n;
  s.timespan = timespan;
  return s;
}

SignalSpec SignalSpec::sine(double period, double amplitude, double intercept) {
  if (!(period > 0.0)) throw std::invalid_argument("SignalSpec::sine: period must be > 0");
  SignalSpec s;
  s.kind = Kind::sine;
  s.period = period;
  s.amplitude = amplitude;
  s.intercept = intercept;
  return s;
}

SignalSpec SignalSpec::gpr_prior(const KernelParams& kp) {
  kp.validate();
  SignalSpec s;
  s.kind = Kind::gpr_prior;
  s.kernel = kp;
  return s;
}

SignalSpec SignalSpec::constant(double value) {
  SignalSpec s;
  s.kind = Kind::constant;
  s.value = value;
  return s;
}

NoiseSpec NoiseSpec::white(double variance) {
  if (!(variance >= 0.0)) throw std::invalid_argument("NoiseSpec::white: variance must be >= 0");
  NoiseSpec n;
  n.kind = Kind::white;
  n.variance = variance;
  return n;
}

NoiseSpec NoiseSpec::red(double rho, double variance) {
  if (!(variance >= 0.0)) throw std::invalid_argument("NoiseSpec::red: variance must be >= 0");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("NoiseSpec::red: rho must lie in [0, 1)");
  NoiseSpec n;
  n.kind = Kind::red;
  n.variance = variance;
  n.rho = rho;
  return n;
}

Vec gpr_prior_draw(const Vec& times, const KernelParams& kp, std::uint64_t seed) {
  const Index n = times.size();
  if (kp.amplitude == 0.0) return Vec::Zero(n);
  kp.validate();
  Rng rng(seed);
  Vec z(n);
  for (Index i = 0; i < n; ++i) z(i) = rng.normal();
  const Mat l = cholesky(periodic_kernel(times, kp).m);
  return l * z;
}

namespace {

Vec make_times(const SamplingSpec& s, Rng& rng) {
  if (s.kind == SamplingSpec::Kind::explicit_times) {
    if (s.times.size() < 3) throw std::invalid_argument("simulate: need at least 3 time stamps");
    return s.times;
  }
  if (s.n < 3 || !(s.timespan > 0.0))
    throw std::invalid_argument("simulate: uniform sampling needs n >= 3 and timespan > 0");
  std::vector<double> t(static_cast<std::size_t>(s.n));
  for (auto& x : t) x = rng.uniform() * s.timespan;
  std::sort(t.begin(), t.end());
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] <= t[i - 1]) t[i] = t[i - 1] + 1e-9 * s.timespan;
  return Eigen::Map<const Vec>(t.data(), static_cast<Index>(t.size()));
}

Vec make_signal(const SignalSpec& s, const Vec& times, std::uint64_t seed) {
  const Index n = times.size();
  switch (s.kind) {
    case SignalSpec::Kind::sine: {
      const double b = s.amplitude / std::sqrt(2.0);
      const double w = 2.0 * M_PI / s.period;
      Vec g(n);
      for (Index i = 0; i < n; ++i)
        g(i) = s.intercept + b * std::sin(w * times(i)) + b * std::cos(w * times(i));
      return g;
    }
    case SignalSpec::Kind::gpr_prior:
      return gpr_prior_draw(times, s.kernel, seed);
    case SignalSpec::Kind::constant:
      return Vec::Constant(n, s.value);
  }
  throw std::logic_error("simulate: unknown signal kind");
}

}  // namespace

LightCurve simulate(const SimScenario& sc) {
  Rng sampling_rng(Rng::stream_seed(sc.seed, 0));
  const Vec times = make_times(sc.sampling, sampling_rng);
  const Index n = times.size();

  const Vec signal = make_signal(sc.signal, times, Rng::stream_seed(sc.seed, 1));

  Rng noise_rng(Rng::stream_seed(sc.seed, 2));
  Vec z(n);
  for (Index i = 0; i < n; ++i) z(i) = noise_rng.normal();

  const double sigma = std::sqrt(sc.noise.variance);
  Vec noise;
  Vec accuracies;
  if (sc.noise.kind == NoiseSpec::Kind::red) {
    if (sc.accuracies.enabled())
      throw std::invalid_argument("simulate: accuracies with red noise are not supported");
    if (sc.noise.rho == 0.0) {
      noise = sigma * z;
    } else {
      const Mat l = cholesky(sc.noise.variance * red_noise_corr(times, sc.noise.rho).m);
      noise = l * z;
    }
  } else {
    noise = sigma * z;
    if (sc.accuracies.enabled()) {
      if (!(sc.accuracies.hi >= sc.accuracies.lo && sc.accuracies.lo > 0.0))
        throw std::invalid_argument("simulate: accuracy bounds must satisfy 0 < lo <= hi");
      Rng acc_rng(Rng::stream_seed(sc.seed, 3));
      accuracies.resize(n);
      for (Index i = 0; i < n; ++i) {
        accuracies(i) = sc.accuracies.lo + (sc.accuracies.hi - sc.accuracies.lo) * acc_rng.uniform();
        noise(i) *= accuracies(i);
      }
      accuracies *= sigma;
    }
  }

  if (sc.target_snr) {
    if (!(*sc.target_snr > 0.0)) throw std::invalid_argument("simulate: target_snr must be > 0");
    const double vs = sample_variance(signal);
    if (!(vs > 0.0))
      throw std::invalid_argument("simulate: target_snr needs a non-constant signal");
    const double ve = sample_variance(noise);
    if (!(ve > 0.0)) throw numerical_error("simulate: zero-variance noise draw");
    const double scale = std::sqrt(vs / (*sc.target_snr * ve));
    noise *= scale;
    if (accuracies.size() > 0) accuracies *= scale;
  }

  return LightCurve(times, signal + noise, std::move(accuracies));
}

namespace {

nlohmann::json sampling_to_json(const SamplingSpec& s) {
  nlohmann::json j;
  if (s.kind == SamplingSpec::Kind::explicit_times) {
    j["type"] = "explicit";
    j["times"] = std::vector<double>(s.times.begin(), s.times.end());
  } else {
    j["type"] = "uniform";
    j["n"] = s.n;
    j["timespan"] = s.timespan;
  }
  return j;
}

SamplingSpec sampling_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "explicit") {
    auto t = j.at("times").get<std::vector<double>>();
    return SamplingSpec::explicit_times_of(Eigen::Map<const Vec>(t.data(), static_cast<Index>(t.size())));
  }
  if (type == "uniform") return SamplingSpec::uniform(j.at("n").get<int>(), j.at("timespan").get<double>());
  if (type == "file") {
    const auto lc = load_lightcurve(j.at("path").get<std::string>());
    return SamplingSpec::explicit_times_of(lc.times);
  }
  if (type == "times_file") {
    // one time stamp per line, '#' comments
    std::ifstream in(j.at("path").get<std::string>());
    if (!in) throw std::runtime_error("cannot open sampling file: " + j.at("path").get<std::string>());
    std::vector<double> t;
    std::string line;
    while (std::getline(in, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      t.push_back(std::stod(line));
    }
    return SamplingSpec::explicit_times_of(Eigen::Map<const Vec>(t.data(), static_cast<Index>(t.size())));
  }
  throw std::invalid_argument("scenario: unknown sampling type '" + type + "'");
}

nlohmann::json signal_to_json(const SignalSpec& s) {
  nlohmann::json j;
  switch (s.kind) {
    case SignalSpec::Kind::sine:
      j["type"] = "sine";
      j["period"] = s.period;
      j["amplitude"] = s.amplitude;
      j["intercept"] = s.intercept;
      break;
    case SignalSpec::Kind::gpr_prior:
      j["type"] = "gpr_prior";
      j["amplitude"] = s.kernel.amplitude;
      j["period"] = s.kernel.period;
      j["smoothness"] = s.kernel.smoothness;
      break;
    case SignalSpec::Kind::constant:
      j["type"] = "constant";
      j["value"] = s.value;
      break;
  }
  return j;
}

SignalSpec signal_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "sine")
    return SignalSpec::sine(j.at("period").get<double>(), j.at("amplitude").get<double>(),
                            j.value("intercept", 0.0));
  if (type == "gpr_prior") {
    KernelParams kp;
    kp.amplitude = j.at("amplitude").get<double>();
    kp.period = j.at("period").get<double>();
    kp.smoothness = j.at("smoothness").get<double>();
    kp.noise_variance = 1.0;
    return SignalSpec::gpr_prior(kp);
  }
  if (type == "constant") return SignalSpec::constant(j.value("value", 0.0));
  throw std::invalid_argument("scenario: unknown signal type '" + type + "'");
}

nlohmann::json noise_to_json(const NoiseSpec& s) {
  nlohmann::json j;
  j["type"] = s.kind == NoiseSpec::Kind::red ? "red" : "white";
  j["variance"] = s.variance;
  if (s.kind == NoiseSpec::Kind::red) j["rho"] = s.rho;
  return j;
}

NoiseSpec noise_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "white") return NoiseSpec::white(j.at("variance").get<double>());
  if (type == "red") return NoiseSpec::red(j.at("rho").get<double>(), j.at("variance").get<double>());
  throw std::invalid_argument("scenario: unknown noise type '" + type + "'");
}

}  // namespace

std::string scenario_to_json(const SimScenario& sc) {
  nlohmann::json j;
  j["sampling"] = sampling_to_json(sc.sampling);
  j["signal"] = signal_to_json(sc.signal);
  j["noise"] = noise_to_json(sc.noise);
  if (sc.target_snr) j["target_snr"] = *sc.target_snr;
  if (sc.accuracies.enabled()) j["accuracies"] = {{"lo", sc.accuracies.lo}, {"hi", sc.accuracies.hi}};
  j["seed"] = sc.seed;
  return j.dump(2);
}

SimScenario scenario_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SimScenario sc;
  sc.sampling = sampling_from_json(j.at("sampling"));
  sc.signal = signal_from_json(j.at("signal"));
  sc.noise = noise_from_json(j.at("noise"));
  if (j.contains("target_snr") && !j.at("target_snr").is_null())
    sc.target_snr = j.at("target_snr").get<double>();
  if (j.contains("accuracies") && !j.at("accuracies").is_null()) {
    sc.accuracies.lo = j.at("accuracies").at("lo").get<double>();
    sc.accuracies.hi = j.at("accuracies").at("hi").get<double>();
  }
  sc.seed = j.value("seed", std::uint64_t{0});
  return sc;
}

SimScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

}  // namespace persaddle
