#include "persaddle/lightcurve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

namespace persaddle {

LightCurve::LightCurve(Vec t, Vec v, Vec acc)
    : times(std::move(t)), values(std::move(v)), accuracies(std::move(acc)) {
  const Index n = times.size();
  if (n < 3) throw std::invalid_argument("LightCurve: need at least 3 points");
  if (values.size() != n) throw std::invalid_argument("LightCurve: times/values length mismatch");
  if (accuracies.size() != 0 && accuracies.size() != n)
    throw std::invalid_argument("LightCurve: accuracies length mismatch");
  for (Index i = 1; i < n; ++i)
    if (!(times(i) > times(i - 1)))
      throw std::invalid_argument("LightCurve: times must be strictly increasing");
  for (Index i = 0; i < accuracies.size(); ++i)
    if (!(accuracies(i) > 0.0))
      throw std::invalid_argument("LightCurve: accuracies must be strictly positive");
}

namespace {

char detect_delimiter(const std::string& row) {
  if (row.find(',') != std::string::npos) return ',';
  if (row.find('\t') != std::string::npos) return '\t';
  return ' ';
}

std::vector<std::string> split_row(const std::string& row, char delim) {
  std::vector<std::string> out;
  if (delim == ' ') {
    std::istringstream ss(row);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  }
  std::string tok;
  std::istringstream ss(row);
  while (std::getline(ss, tok, delim)) {
    // trim surrounding blanks
    const auto b = tok.find_first_not_of(" \t\r");
    const auto e = tok.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : tok.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& tok, long line) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw parse_error("malformed number '" + tok + "'", line);
  }
  if (pos != tok.size()) throw parse_error("malformed number '" + tok + "'", line);
  if (std::isnan(v)) throw parse_error("NaN value", line);
  return v;
}

}  // namespace

LightCurve parse_lightcurve(std::istream& in, const ParseOptions& opt) {
  struct Row {
    double t, v, a;
  };
  std::vector<Row> rows;
  std::string line;
  long lineno = 0;
  int ncols = 0;
  char delim = opt.delimiter;
  bool delim_set = !opt.auto_delimiter;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == opt.comment) continue;
    if (!delim_set) {
      delim = detect_delimiter(line);
      delim_set = true;
    }
    auto toks = split_row(line, delim);
    if (toks.size() != 2 && toks.size() != 3)
      throw parse_error("expected 2 or 3 columns, got " + std::to_string(toks.size()), lineno);
    if (rows.empty()) {
      ncols = static_cast<int>(toks.size());
    } else if (static_cast<int>(toks.size()) != ncols) {
      throw parse_error("inconsistent column count", lineno);
    }
    // a header row is allowed: skip the first row if it does not parse
    bool numeric = true;
    Row r{0, 0, 0};
    try {
      r.t = parse_number(toks[0], lineno);
      r.v = parse_number(toks[1], lineno);
      if (ncols == 3) r.a = parse_number(toks[2], lineno);
    } catch (const parse_error&) {
      if (rows.empty()) {
        numeric = false;
      } else {
        throw;
      }
    }
    if (numeric) rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].t > rows[i - 1].t))
      throw std::invalid_argument("parse_lightcurve: duplicate timestamps");
  if (rows.size() < 3) throw std::invalid_argument("parse_lightcurve: need at least 3 data rows");
  const Index n = static_cast<Index>(rows.size());
  Vec t(n), v(n), a(ncols == 3 ? n : 0);
  for (Index i = 0; i < n; ++i) {
    t(i) = rows[i].t;
    v(i) = rows[i].v;
    if (ncols == 3) a(i) = rows[i].a;
  }
  return LightCurve(std::move(t), std::move(v), std::move(a));
}

LightCurve load_lightcurve(const std::string& path, const ParseOptions& opt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open light-curve file: " + path);
  return parse_lightcurve(in, opt);
}

namespace {
std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

void write_lightcurve_csv(const LightCurve& lc, std::ostream& out) {
  out << "# time,value" << (lc.has_accuracies() ? ",accuracy" : "") << "\n";
  for (Index i = 0; i < lc.n(); ++i) {
    out << fmt17(lc.times(i)) << ',' << fmt17(lc.values(i));
    if (lc.has_accuracies()) out << ',' << fmt17(lc.accuracies(i));
    out << '\n';
  }
}

std::string lightcurve_to_json(const LightCurve& lc) {
  nlohmann::json j;
  j["times"] = std::vector<double>(lc.times.begin(), lc.times.end());
  j["values"] = std::vector<double>(lc.values.begin(), lc.values.end());
  if (lc.has_accuracies())
    j["accuracies"] = std::vector<double>(lc.accuracies.begin(), lc.accuracies.end());
  else
    j["accuracies"] = nullptr;
  return j.dump();
}

LightCurve lightcurve_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto t = j.at("times").get<std::vector<double>>();
  const auto v = j.at("values").get<std::vector<double>>();
  std::vector<double> a;
  if (j.contains("accuracies") && !j.at("accuracies").is_null())
    a = j.at("accuracies").get<std::vector<double>>();
  Vec tv = Eigen::Map<const Vec>(t.data(), static_cast<Index>(t.size()));
  Vec vv = Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size()));
  Vec av = Eigen::Map<const Vec>(a.data(), static_cast<Index>(a.size()));
  return LightCurve(std::move(tv), std::move(vv), std::move(av));
}

PhasedCurve fold(const LightCurve& lc, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("fold: period must be > 0");
  PhasedCurve pc;
  pc.period = period;
  pc.values = lc.values;
  pc.phases.resize(lc.n());
  for (Index i = 0; i < lc.n(); ++i) {
    const double x = lc.times(i) / period;
    pc.phases(i) = x - std::floor(x);
  }
  return pc;
}

double sample_mean(const Vec& v) {
  if (v.size() < 1) throw std::invalid_argument("sample_mean: empty vector");
  return v.mean();
}

double sample_variance(const Vec& v) {
  const Index n = v.size();
  if (n < 2) throw std::invalid_argument("sample_variance: need at least 2 values");
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(n - 1);
}

double snr(const LightCurve& lc, double noise_variance) {
  if (lc.n() < 2) throw std::invalid_argument("snr: need at least 2 points");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("snr: noise_variance must be > 0");
  return sample_variance(lc.values) / noise_variance;
}

}  // namespace persaddle
