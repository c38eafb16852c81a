#pragma once

#include <cstddef>
#include <span>

namespace timesplit {

// Standard normal CDF, accurate to machine precision via erfc.
double normal_cdf(double z);

// Inverse standard normal CDF (Wichura-style rational approximation);
// absolute error below 1e-9 across (0, 1). Throws outside the open interval.
double normal_quantile(double p);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

// Upper tail P(T >= t) of Student's t with df degrees of freedom.
double student_t_sf(double t, double df);

enum class Alternative { a_greater, b_greater };

struct TTestResult {
  double p = 1.0;
  double t = 0.0;
  std::size_t n = 0;
  // Set when the differences have zero spread; p is then 0.5 (zero mean) or
  // 0/1 by the sign of the mean.
  bool degenerate = false;
};

// Paired one-sided t-test on equal-length samples (sample sd, n-1 df).
TTestResult paired_t_test_one_sided(std::span<const double> a, std::span<const double> b,
                                    Alternative alternative);

// Stouffer combination: z_i = Phi^-1(1 - p_i), Z = sum z_i / sqrt(k),
// returns 1 - Phi(Z). Every p must lie strictly inside (0, 1).
double stouffer_combine(std::span<const double> p_values);

}  // namespace timesplit
