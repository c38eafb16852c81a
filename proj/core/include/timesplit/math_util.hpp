#pragma once

#include <cstddef>
#include <span>
#include <utility>

namespace timesplit {

// Midpoint-recursive pairwise summation. Besides the usual rounding
// behaviour, the learner code relies on a structural property: summing a
// concatenated duplicate [x, x] splits exactly at the copy boundary, so the
// result is exactly twice the sum of [x].
template <class F>
double pairwise_sum_range(std::size_t begin, std::size_t end, const F& term) {
  const std::size_t n = end - begin;
  if (n == 0) return 0.0;
  if (n == 1) return term(begin);
  if (n == 2) return term(begin) + term(begin + 1);
  const std::size_t mid = begin + n / 2;
  return pairwise_sum_range(begin, mid, term) + pairwise_sum_range(mid, end, term);
}

template <class F>
double pairwise_sum(std::size_t n, const F& term) {
  return pairwise_sum_range(0, n, term);
}

double pairwise_sum(std::span<const double> xs);

// Numerically stable logistic helpers.
double sigmoid(double x);
double log1p_exp(double x);  // log(1 + e^x)
double soft_threshold(double x, double lambda);

}  // namespace timesplit
