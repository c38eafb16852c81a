#include "timesplit/stats.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "timesplit/error.hpp"
#include "timesplit/math_util.hpp"

namespace timesplit {

double normal_cdf(double z) {
  if (std::isnan(z)) throw Error("normal_cdf: non-finite argument");
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Rational minimax approximation in three regions (central, tail, far tail),
// refined to full double precision by the split of |p - 1/2|.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error("normal_quantile: p must lie in (0, 1), got " + std::to_string(p));
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        q * (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                  67265.770927008700853) * r + 45921.953931549871457) * r +
                13731.693765509461125) * r + 1971.5909503065514427) * r +
              133.14166789178437745) * r + 3.387132872796366608);
    const double den =
        (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
              39307.89580009271061) * r + 21213.794301586595867) * r +
            5394.1960214247511077) * r + 687.1870074920579083) * r +
          42.313330701600911252) * r + 1.0);
    return num / den;
  }

  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
              0.24178072517745061177) * r + 1.27045825245236838258) * r +
            3.64784832476320460504) * r + 5.7694972214606914055) * r +
          4.6303378461565452959) * r + 1.42343711074968357734);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
              0.0151986665636164571966) * r + 0.14810397642748007459) * r +
            0.68976733498510000455) * r + 1.6763848301838038494) * r +
          2.05319162663775882187) * r + 1.0);
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              0.0012426609473880784386) * r + 0.026532189526576123093) * r +
            0.29656057182850489123) * r + 1.7848265399172913358) * r +
          5.4637849111641143699) * r + 6.6579046435011037772);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
              1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
            0.0148753612908506148525) * r + 0.13692988092273580531) * r +
          0.59983220655588793769) * r + 1.0);
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

namespace {

// Lentz's continued fraction for the incomplete beta.
double incomplete_beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("incomplete beta: a, b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw Error("incomplete beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * incomplete_beta_cf(a, b, x) / a;
  }
  return 1.0 - front * incomplete_beta_cf(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
  if (df <= 0.0) throw Error("student_t_sf: df must be positive");
  if (std::isnan(t)) throw Error("student_t_sf: non-finite t");
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

TTestResult paired_t_test_one_sided(std::span<const double> a, std::span<const double> b,
                                    Alternative alternative) {
  if (a.size() != b.size()) throw Error("paired t-test: samples differ in length");
  const std::size_t n = a.size();
  if (n < 2) throw Error("paired t-test: need at least 2 pairs");

  // Differences oriented so that a positive mean favours the alternative.
  const double sign = alternative == Alternative::a_greater ? 1.0 : -1.0;
  const double mean = pairwise_sum(n, [&](std::size_t i) { return sign * (a[i] - b[i]); }) /
                      static_cast<double>(n);
  const double ss = pairwise_sum(n, [&](std::size_t i) {
    const double d = sign * (a[i] - b[i]) - mean;
    return d * d;
  });
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult result;
  result.n = n;
  if (sd == 0.0) {
    result.degenerate = true;
    result.t = mean == 0.0 ? 0.0
                           : std::copysign(std::numeric_limits<double>::infinity(), mean);
    result.p = mean == 0.0 ? 0.5 : (mean > 0.0 ? 0.0 : 1.0);
    return result;
  }
  result.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  result.p = student_t_sf(result.t, static_cast<double>(n - 1));
  return result;
}

double stouffer_combine(std::span<const double> p_values) {
  if (p_values.empty()) throw Error("stouffer_combine: no p-values");
  for (double p : p_values) {
    if (!(p > 0.0 && p < 1.0)) {
      throw Error("stouffer_combine: p-values must lie in (0, 1), got " + std::to_string(p));
    }
  }
  // Phi^-1(1 - p) = -Phi^-1(p); the negated form keeps precision for tiny p.
  const double z_sum =
      pairwise_sum(p_values.size(), [&](std::size_t i) { return -normal_quantile(p_values[i]); });
  const double z = z_sum / std::sqrt(static_cast<double>(p_values.size()));
  // 1 - Phi(Z) via the complementary tail, stable for large Z.
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace timesplit
