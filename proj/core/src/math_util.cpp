#include "timesplit/math_util.hpp"

#include <cmath>

namespace timesplit {

double pairwise_sum(std::span<const double> xs) {
  return pairwise_sum(xs.size(), [&](std::size_t i) { return xs[i]; });
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1p_exp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double soft_threshold(double x, double lambda) {
  if (x > lambda) return x - lambda;
  if (x < -lambda) return x + lambda;
  return 0.0;
}

}  // namespace timesplit
