#include <doctest.h>

#include <cmath>
#include <limits>

#include "timesplit/error.hpp"
#include "timesplit/learners.hpp"
#include "timesplit/math_util.hpp"
#include "timesplit/metrics.hpp"
#include "timesplit/rng.hpp"

using namespace timesplit;

namespace {

struct Problem {
  Matrix X;
  std::vector<std::int8_t> y;
};

Problem random_problem(std::size_t n, std::size_t d, std::uint64_t seed) {
  Xoshiro256StarStar rng(seed);
  Problem p;
  p.X = Matrix(n, d);
  p.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double signal = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      p.X(i, j) = rng.uniform01() * 2.0 - 1.0;
      signal += (j % 2 ? 1.0 : -1.0) * p.X(i, j);
    }
    p.y[i] = signal + (rng.uniform01() - 0.5) > 0.0 ? 1 : 0;
  }
  // ensure both classes
  p.y[0] = 0;
  p.y[1] = 1;
  return p;
}

Matrix duplicate_rows(const Matrix& X) {
  Matrix out(2 * X.rows(), X.cols());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (std::size_t j = 0; j < X.cols(); ++j) {
      out(i, j) = X(i, j);
      out(i + X.rows(), j) = X(i, j);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("elastic net smooth gradient matches central finite differences") {
  Xoshiro256StarStar rng(99);
  Problem p = random_problem(24, 5, 4);
  const double l2 = 0.01;
  const double h = 1e-6;
  for (int point = 0; point < 100; ++point) {
    std::vector<double> w(5);
    for (auto& v : w) v = rng.uniform01() * 2.0 - 1.0;
    double b = rng.uniform01() * 2.0 - 1.0;
    const std::vector<double> grad = elastic_net_smooth_gradient(p.X, p.y, w, b, l2);

    double max_rel = 0.0;
    for (std::size_t j = 0; j <= w.size(); ++j) {
      auto perturbed = [&](double delta) {
        std::vector<double> wd = w;
        double bd = b;
        if (j < w.size()) {
          wd[j] += delta;
        } else {
          bd += delta;
        }
        return elastic_net_smooth_value(p.X, p.y, wd, bd, l2);
      };
      const double numeric = (perturbed(h) - perturbed(-h)) / (2.0 * h);
      const double denom = std::max({1.0, std::abs(grad[j]), std::abs(numeric)});
      max_rel = std::max(max_rel, std::abs(grad[j] - numeric) / denom);
    }
    CHECK(max_rel < 1e-6);
  }
}

TEST_CASE("elastic net objective is non-increasing across iterations") {
  Problem p = random_problem(40, 6, 11);
  LearnerSpec spec;
  spec.kind = LearnerKind::elastic_net;
  spec.elastic_net.max_iters = 500;
  ElasticNetTrace trace;
  train_elastic_net(spec, p.X, p.y, &trace);
  REQUIRE(trace.objective.size() > 2);
  for (std::size_t i = 1; i < trace.objective.size(); ++i) {
    CHECK(trace.objective[i] <= trace.objective[i - 1]);
  }
}

TEST_CASE("elastic net with an enormous l1 weight shrinks to the intercept") {
  Problem p = random_problem(60, 4, 5);
  std::size_t positives = 0;
  for (auto y : p.y) positives += y;
  LearnerSpec spec;
  spec.kind = LearnerKind::elastic_net;
  spec.elastic_net.l1_weight = 1e6;
  spec.elastic_net.tol = 1e-10;
  TrainedModel model = train(spec, p.X, p.y);
  for (double w : model.elastic_net().weights) CHECK(w == 0.0);
  const double base = static_cast<double>(positives) / p.y.size();
  std::vector<double> probs = model.predict_proba(p.X);
  for (double prob : probs) {
    CHECK(prob == probs[0]);  // constant output
    CHECK(prob == doctest::Approx(base).epsilon(1e-6));
  }
}

TEST_CASE("all-zero elastic net model predicts one half") {
  ElasticNetModel raw;
  raw.feature_mean = {0.0, 0.0};
  raw.feature_sd = {1.0, 1.0};
  raw.weights = {0.0, 0.0};
  raw.intercept = 0.0;
  TrainedModel model(LearnerKind::elastic_net, 2, raw);
  Matrix X(3, 2);
  X(0, 0) = -1;
  X(1, 1) = 2;
  X(2, 0) = 5;
  for (double p : model.predict_proba(X)) CHECK(p == 0.5);
  CHECK(model.predict_proba(Matrix(0, 2)).empty());
}

TEST_CASE("naive bayes is 0.5 at the midpoint of symmetric classes") {
  Matrix X(4, 1);
  X(0, 0) = -2.0;
  X(1, 0) = -1.0;
  X(2, 0) = 1.0;
  X(3, 0) = 2.0;
  std::vector<std::int8_t> y = {0, 0, 1, 1};
  LearnerSpec spec;
  spec.kind = LearnerKind::naive_bayes;
  TrainedModel model = train(spec, X, y);
  Matrix mid(1, 1);
  mid(0, 0) = 0.0;
  CHECK(model.predict_proba(mid)[0] == 0.5);
}

TEST_CASE("naive bayes posterior pair sums to one") {
  Problem p = random_problem(30, 3, 7);
  LearnerSpec spec;
  spec.kind = LearnerKind::naive_bayes;
  TrainedModel model = train(spec, p.X, p.y);
  for (double prob : model.predict_proba(p.X)) {
    CHECK(prob >= 0.0);
    CHECK(prob <= 1.0);
    CHECK((1.0 - prob) + prob == 1.0);
  }
}

TEST_CASE("gbdt stump separates 1-d separable data") {
  Matrix X(8, 1);
  std::vector<std::int8_t> y(8);
  for (int i = 0; i < 8; ++i) {
    X(i, 0) = static_cast<double>(i);
    y[i] = i >= 4 ? 1 : 0;
  }
  LearnerSpec spec;
  spec.kind = LearnerKind::gbdt;
  spec.gbdt.n_trees = 1;
  spec.gbdt.max_depth = 1;
  spec.gbdt.min_leaf = 1;
  TrainedModel model = train(spec, X, y);
  auto probs = model.predict_proba(X);
  CHECK(*roc_auc(probs, y) == 1.0);
}

TEST_CASE("gbdt with zero trees predicts the base rate exactly") {
  Problem p = random_problem(30, 3, 13);
  std::size_t positives = 0;
  for (auto v : p.y) positives += v;
  LearnerSpec spec;
  spec.kind = LearnerKind::gbdt;
  spec.gbdt.n_trees = 0;
  TrainedModel model = train(spec, p.X, p.y);
  const double base = static_cast<double>(positives) / p.y.size();
  for (double prob : model.predict_proba(p.X)) CHECK(prob == base);
}

TEST_CASE("overfit gbdt puts training rows on the correct side") {
  Problem p = random_problem(40, 4, 17);
  LearnerSpec spec;
  spec.kind = LearnerKind::gbdt;
  spec.gbdt.n_trees = 60;
  spec.gbdt.max_depth = 4;
  spec.gbdt.min_leaf = 1;
  TrainedModel model = train(spec, p.X, p.y);
  auto probs = model.predict_proba(p.X);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.y.size(); ++i) {
    correct += (probs[i] >= 0.5) == (p.y[i] == 1);
  }
  CHECK(correct == p.y.size());
}

TEST_CASE("duplicating every training row leaves predictions unchanged") {
  Problem p = random_problem(25, 4, 21);
  Matrix doubled = duplicate_rows(p.X);
  std::vector<std::int8_t> y2(p.y);
  y2.insert(y2.end(), p.y.begin(), p.y.end());
  Matrix probe = random_problem(10, 4, 22).X;

  for (LearnerKind kind : {LearnerKind::elastic_net, LearnerKind::naive_bayes, LearnerKind::gbdt}) {
    LearnerSpec spec;
    spec.kind = kind;
    spec.elastic_net.max_iters = 400;
    spec.gbdt.n_trees = 20;
    spec.gbdt.min_leaf = 1;  // keeps the candidate split sets aligned
    TrainedModel a = train(spec, p.X, p.y);
    TrainedModel b = train(spec, doubled, y2);
    auto pa = a.predict_proba(probe);
    auto pb = b.predict_proba(probe);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      INFO("learner " << learner_kind_name(kind) << " row " << i);
      CHECK(pa[i] == pb[i]);  // bitwise
    }
  }
}

TEST_CASE("training is deterministic bit for bit") {
  Problem p = random_problem(30, 5, 33);
  for (LearnerKind kind : {LearnerKind::elastic_net, LearnerKind::naive_bayes, LearnerKind::gbdt}) {
    LearnerSpec spec;
    spec.kind = kind;
    spec.gbdt.n_trees = 15;
    TrainedModel a = train(spec, p.X, p.y);
    TrainedModel b = train(spec, p.X, p.y);
    auto pa = a.predict_proba(p.X);
    auto pb = b.predict_proba(p.X);
    CHECK(pa == pb);
  }
}

TEST_CASE("training input validation") {
  Matrix X(3, 1);
  std::vector<std::int8_t> one_class = {1, 1, 1};
  LearnerSpec spec;
  CHECK_THROWS_WITH_AS(train(spec, X, one_class), doctest::Contains("single class"), Error);

  std::vector<std::int8_t> y = {0, 1, 0};
  Matrix bad(3, 1);
  bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(train(spec, bad, y), doctest::Contains("non-finite"), Error);

  TrainedModel model = train(spec, X, y);
  Matrix wrong(2, 3);
  CHECK_THROWS_AS(model.predict_proba(wrong), Error);
}

TEST_CASE("learner spec validation and names") {
  CHECK(learner_kind_from_name("gbdt") == LearnerKind::gbdt);
  CHECK_THROWS_AS(learner_kind_from_name("svm"), ValidationError);
  LearnerSpec spec;
  spec.elastic_net.tol = 0.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  LearnerSpec gb;
  gb.kind = LearnerKind::gbdt;
  gb.gbdt.min_leaf = 0;
  CHECK_THROWS_AS(gb.validate(), ValidationError);
}

TEST_CASE("trained model serializes a versioned audit document") {
  Problem p = random_problem(20, 2, 41);
  LearnerSpec spec;
  spec.kind = LearnerKind::gbdt;
  spec.gbdt.n_trees = 2;
  TrainedModel model = train(spec, p.X, p.y);
  const std::string doc = model.to_json_string(spec);
  CHECK(doc.find("\"format_version\":1") != std::string::npos);
  CHECK(doc.find("\"kind\":\"gbdt\"") != std::string::npos);
  CHECK(doc.find("\"trees\"") != std::string::npos);
}
