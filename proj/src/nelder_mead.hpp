#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "persaddle/types.hpp"

namespace persaddle::detail {

struct NmOptions {
  int max_evals = 300;
  double ftol = 1e-7;
  double init_step = 0.7;
};

struct NmResult {
  Vec x;
  double f = 0.0;
  int evals = 0;
  bool converged = false;
};

/// Nelder-Mead simplex minimizer (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5). Deterministic for a given start.
inline NmResult nelder_mead(const std::function<double(const Vec&)>& fn, const Vec& x0,
                            const NmOptions& opt = {}) {
  const Index d = x0.size();
  const int npts = static_cast<int>(d) + 1;
  std::vector<Vec> xs(npts, x0);
  std::vector<double> fs(npts);
  int evals = 0;
  auto eval = [&](const Vec& x) {
    ++evals;
    const double v = fn(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  for (int i = 1; i < npts; ++i) xs[i](i - 1) += opt.init_step;
  for (int i = 0; i < npts; ++i) fs[i] = eval(xs[i]);

  std::vector<int> ord(npts);
  NmResult res;
  while (evals < opt.max_evals) {
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    const int best = ord[0], worst = ord[npts - 1], second_worst = ord[npts - 2];
    if (std::fabs(fs[worst] - fs[best]) <= opt.ftol * (1.0 + std::fabs(fs[best]))) {
      res.converged = true;
      break;
    }
    Vec centroid = Vec::Zero(d);
    for (int i = 0; i < npts; ++i)
      if (i != worst) centroid += xs[i];
    centroid /= static_cast<double>(npts - 1);

    const Vec xr = centroid + (centroid - xs[worst]);
    const double fr = eval(xr);
    if (fr < fs[ord[0]]) {
      const Vec xe = centroid + 2.0 * (centroid - xs[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
    } else if (fr < fs[second_worst]) {
      xs[worst] = xr;
      fs[worst] = fr;
    } else {
      const Vec xc = centroid + 0.5 * (xs[worst] - centroid);
      const double fc = eval(xc);
      if (fc < fs[worst]) {
        xs[worst] = xc;
        fs[worst] = fc;
      } else {
        for (int i = 0; i < npts; ++i) {
          if (i == best) continue;
          xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
          fs[i] = eval(xs[i]);
        }
      }
    }
  }
  const auto it = std::min_element(fs.begin(), fs.end());
  res.x = xs[static_cast<std::size_t>(it - fs.begin())];
  res.f = *it;
  res.evals = evals;
  return res;
}

}  // namespace persaddle::detail
