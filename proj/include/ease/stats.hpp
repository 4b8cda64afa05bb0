#pragma once

// Scalar distribution functions shared by inference, diagnostics and the RNG.

namespace ease::stats {

// Standard normal quantile, Wichura's PPND16 rational approximation
// (relative error ~1e-15 on (0,1)). Throws ConfigError outside (0,1).
double normal_quantile(double p);

// Standard normal CDF via erfc.
double normal_cdf(double x);

// Two-sided normal p-value for a z statistic.
double normal_pvalue_two_sided(double z);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

// Student t CDF with (possibly fractional) df > 0.
double student_t_cdf(double t, double df);

// Two-sided p-value for a t statistic.
double student_t_pvalue_two_sided(double t, double df);

}  // namespace ease::stats
