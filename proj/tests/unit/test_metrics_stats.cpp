#include <doctest.h>

#include <cmath>
#include <vector>

#include "timesplit/error.hpp"
#include "timesplit/metrics.hpp"
#include "timesplit/rng.hpp"
#include "timesplit/stats.hpp"

using namespace timesplit;

namespace {

// Exhaustive O(n^2) pair counting, independent of the rank-based path.
double auc_pair_oracle(const std::vector<double>& scores, const std::vector<std::int8_t>& labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("metrics on fully separated scores") {
  std::vector<double> scores = {0.9, 0.8, 0.3, 0.2};
  std::vector<std::int8_t> labels = {1, 1, 0, 0};
  MetricSet m = compute_metrics(scores, labels);
  CHECK(m.accuracy == 1.0);
  CHECK(m.f1 == 1.0);
  CHECK(m.mcc == 1.0);
  CHECK(m.roc_auc == 1.0);
  CHECK(m.pr_auc == 1.0);
}

TEST_CASE("roc auc equals pair counting on the worked example") {
  std::vector<double> scores = {0.1, 0.4, 0.35, 0.8};
  std::vector<std::int8_t> labels = {0, 0, 1, 1};
  CHECK(*roc_auc(scores, labels) == 0.75);
}

TEST_CASE("average precision on a single positive at rank 2") {
  std::vector<double> scores = {0.9, 0.1};
  std::vector<std::int8_t> labels = {0, 1};
  CHECK(*pr_auc(scores, labels) == 0.5);
}

TEST_CASE("balanced confusion matrix gives zero mcc") {
  // TP=1, FP=1, TN=1, FN=1 with threshold 0.5
  std::vector<double> scores = {0.9, 0.9, 0.1, 0.1};
  std::vector<std::int8_t> labels = {1, 0, 1, 0};
  MetricSet m = compute_metrics(scores, labels);
  CHECK(m.mcc == 0.0);
  CHECK(m.accuracy == 0.5);
}

TEST_CASE("single-class labels leave ranking metrics undefined") {
  std::vector<double> scores = {0.2, 0.6};
  std::vector<std::int8_t> labels = {1, 1};
  MetricSet m = compute_metrics(scores, labels);
  CHECK(!m.roc_auc.has_value());
  CHECK(!m.pr_auc.has_value());
  CHECK(m.accuracy == 0.5);
}

TEST_CASE("roc auc matches the exhaustive oracle exactly, with ties") {
  Xoshiro256StarStar rng(2024);
  for (int round = 0; round < 300; ++round) {
    const std::size_t n = 2 + rng.bounded(48);
    std::vector<double> scores(n);
    std::vector<std::int8_t> labels(n);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // coarse grid forces plenty of ties
      scores[i] = static_cast<double>(rng.bounded(8)) / 7.0;
      labels[i] = rng.uniform01() < 0.5 ? 1 : 0;
      (labels[i] ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) continue;
    CHECK(*roc_auc(scores, labels) == auc_pair_oracle(scores, labels));
  }
}

TEST_CASE("roc auc is invariant under strictly monotone score transforms") {
  Xoshiro256StarStar rng(31);
  for (int round = 0; round < 50; ++round) {
    const std::size_t n = 10 + rng.bounded(30);
    std::vector<double> scores(n), warped(n);
    std::vector<std::int8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.uniform01();
      warped[i] = std::exp(3.0 * scores[i]) - 2.0;  // strictly increasing
      labels[i] = rng.uniform01() < 0.4 ? 1 : 0;
    }
    auto a = roc_auc(scores, labels);
    auto b = roc_auc(warped, labels);
    CHECK(a == b);
  }
}

TEST_CASE("mcc is symmetric under simultaneous label and prediction flip") {
  Xoshiro256StarStar rng(32);
  for (int round = 0; round < 50; ++round) {
    const std::size_t n = 8 + rng.bounded(20);
    std::vector<double> scores(n), flipped(n);
    std::vector<std::int8_t> labels(n), inverted(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.uniform01();
      if (scores[i] == 0.5) scores[i] = 0.25;  // keep the threshold unambiguous
      flipped[i] = 1.0 - scores[i];
      labels[i] = rng.uniform01() < 0.5 ? 1 : 0;
      inverted[i] = static_cast<std::int8_t>(1 - labels[i]);
    }
    MetricSet m1 = compute_metrics(scores, labels);
    MetricSet m2 = compute_metrics(flipped, inverted);
    CHECK(m1.mcc == doctest::Approx(m2.mcc).epsilon(1e-12));
  }
}

TEST_CASE("metrics input validation") {
  std::vector<double> scores = {0.1};
  std::vector<std::int8_t> labels = {1, 0};
  CHECK_THROWS_AS(compute_metrics(scores, labels), Error);
}

// --- statistics ---------------------------------------------------------------

TEST_CASE("normal quantile hits reference points") {
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
  CHECK_THROWS_AS(normal_quantile(0.0), Error);
  CHECK_THROWS_AS(normal_quantile(1.0), Error);
}

TEST_CASE("normal cdf and quantile round trip") {
  Xoshiro256StarStar rng(8);
  for (int i = 0; i < 1000; ++i) {
    const double p = 1e-6 + (1.0 - 2e-6) * rng.uniform01();
    CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-9);
  }
}

TEST_CASE("paired one-sided t-test") {
  // differences [1,2,3]: t = 2 sqrt(3), df 2, closed form p = 1/2 - t / (2 sqrt(t^2 + 2))
  std::vector<double> a = {2, 4, 6};
  std::vector<double> b = {1, 2, 3};
  TTestResult r = paired_t_test_one_sided(a, b, Alternative::a_greater);
  const double t = 2.0 * std::sqrt(3.0);
  const double closed = 0.5 - t / (2.0 * std::sqrt(t * t + 2.0));
  CHECK(r.t == doctest::Approx(t).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(closed).epsilon(1e-10));
  CHECK(std::abs(r.p - 0.0371) < 1e-4);
  CHECK(!r.degenerate);

  // reversed alternative
  TTestResult opposite = paired_t_test_one_sided(a, b, Alternative::b_greater);
  CHECK(opposite.p == doctest::Approx(1.0 - closed).epsilon(1e-10));

  // zero-mean differences
  std::vector<double> c = {1.1, 0.9}, d = {1.0, 1.0};
  CHECK(paired_t_test_one_sided(c, d, Alternative::a_greater).p == 0.5);

  // degenerate: constant differences
  std::vector<double> e = {2, 2}, f = {1, 1};
  TTestResult deg = paired_t_test_one_sided(e, f, Alternative::a_greater);
  CHECK(deg.degenerate);
  CHECK(deg.p == 0.0);
  TTestResult deg0 = paired_t_test_one_sided(e, e, Alternative::a_greater);
  CHECK(deg0.degenerate);
  CHECK(deg0.p == 0.5);

  std::vector<double> one = {1.0};
  CHECK_THROWS_AS(paired_t_test_one_sided(one, one, Alternative::a_greater), Error);
}

TEST_CASE("student t tail against closed forms") {
  // df = 1: P(T >= t) = 1/2 - atan(t)/pi
  for (double t : {-3.0, -0.5, 0.0, 0.7, 2.5, 10.0}) {
    CHECK(student_t_sf(t, 1.0) ==
          doctest::Approx(0.5 - std::atan(t) / M_PI).epsilon(1e-12));
    CHECK(student_t_sf(t, 2.0) ==
          doctest::Approx(0.5 - t / (2.0 * std::sqrt(t * t + 2.0))).epsilon(1e-12));
  }
}

TEST_CASE("stouffer combination") {
  std::vector<double> halves = {0.5, 0.5};
  CHECK(stouffer_combine(halves) == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<double> fives = {0.05, 0.05};
  CHECK(std::abs(stouffer_combine(fives) - 0.0100) < 1e-4);

  std::vector<double> single = {0.123};
  CHECK(stouffer_combine(single) == doctest::Approx(0.123).epsilon(1e-9));

  std::vector<double> bad = {0.5, 1.0};
  CHECK_THROWS_AS(stouffer_combine(bad), Error);
  CHECK_THROWS_AS(stouffer_combine(std::vector<double>{}), Error);
}

TEST_CASE("stouffer of repeated small p decreases with k") {
  double prev = 1.0;
  for (std::size_t k = 1; k <= 8; ++k) {
    std::vector<double> ps(k, 0.2);
    const double combined = stouffer_combine(ps);
    CHECK(combined < prev);
    prev = combined;
  }
}
