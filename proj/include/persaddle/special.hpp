#pragma once

namespace persaddle {

/// Standard normal CDF.
double norm_cdf(double x);

/// Standard normal survival function 1 - Phi(x).
double norm_sf(double x);

/// Regularized incomplete beta function I_x(a, b), a, b > 0, x in [0, 1].
double inc_beta(double a, double b, double x);

/// Survival function of the F(d1, d2) distribution at z.
double f_dist_survival(double z, int d1, int d2);

}  // namespace persaddle
