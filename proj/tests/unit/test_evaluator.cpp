#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <limits>
#include <memory>
#include <set>

#include "timesplit/error.hpp"
#include "timesplit/evaluator.hpp"
#include "timesplit/rng.hpp"

using namespace timesplit;

namespace {

// Small labeled bundle with dates: ids c00..c(n-1), one feature table whose
// single informative column tracks the label.
DatasetBundle toy_bundle(std::size_t n, std::uint64_t seed, int n_targets = 1) {
  Xoshiro256StarStar rng(seed);
  DatasetBundle bundle;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "c%03zu", i);
    bundle.compound_ids.push_back(buf);
  }
  FeatureTable t;
  t.dataset_name = "toy";
  t.compound_ids = bundle.compound_ids;
  t.feature_names = {"signal", "noise"};
  t.values = Matrix(n, 2);
  bundle.labels.compound_ids = bundle.compound_ids;
  for (int k = 0; k < n_targets; ++k) {
    bundle.labels.target_names.push_back("ae" + std::to_string(k));
  }
  bundle.labels.values.resize(n * n_targets);
  bundle.registry.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform01() * 2.0 - 1.0;
    t.values(i, 0) = x;
    t.values(i, 1) = rng.uniform01();
    for (int k = 0; k < n_targets; ++k) {
      bundle.labels.values[i * n_targets + k] =
          x + 0.3 * (rng.uniform01() - 0.5) > 0.0 ? 1 : 0;
    }
    bundle.registry[i].id = bundle.compound_ids[i];
    bundle.registry[i].canonical_name = bundle.compound_ids[i];
    bundle.registry[i].market_date = MonthDate{1990 + static_cast<int>(i % 20), 1 + static_cast<int>(i % 12)};
  }
  bundle.tables.push_back(std::move(t));
  return bundle;
}

}  // namespace

TEST_CASE("fold ensemble averages the per-model probabilities") {
  DatasetBundle bundle = toy_bundle(40, 3);
  const Matrix& X = bundle.tables[0].values;
  std::vector<std::int8_t> y = bundle.labels.target_column(0);

  Matrix test(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    test(i, 0) = 0.2 * static_cast<double>(i) - 0.3;
    test(i, 1) = 0.5;
  }
  LearnerSpec spec;
  spec.kind = LearnerKind::naive_bayes;

  auto a = train_fold_ensemble(spec, X, y, test, 5, 77, 78);
  auto b = train_fold_ensemble(spec, X, y, test, 5, 77, 78);
  CHECK(a == b);  // same seeds, identical output
  auto c = train_fold_ensemble(spec, X, y, test, 5, 79, 78);
  CHECK(a != c);

  // recompute by hand from the fold plan
  FoldPlan folds = stratified_kfold(y, 5, 77);
  std::vector<std::vector<double>> per_model;
  for (int fold = 0; fold < 5; ++fold) {
    std::vector<std::size_t> rows;
    std::vector<std::int8_t> fy;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (folds.fold_of[i] != fold) {
        rows.push_back(i);
        fy.push_back(y[i]);
      }
    }
    LearnerSpec fold_spec = spec;
    fold_spec.training_seed = derive_seed(78, static_cast<std::uint64_t>(fold));
    per_model.push_back(train(fold_spec, X.select_rows(rows), fy).predict_proba(test));
  }
  for (std::size_t row = 0; row < 4; ++row) {
    std::vector<double> vals;
    for (const auto& m : per_model) vals.push_back(m[row]);
    std::sort(vals.begin(), vals.end());
    double sum = 0.0;
    for (double v : vals) sum += v;
    CHECK(a[row] == sum / 5.0);  // bitwise: same summation rule
  }
}

TEST_CASE("ensemble across datasets is the element-wise mean") {
  std::vector<std::vector<double>> vectors = {{0.2, 0.4}, {0.6, 0.8}};
  auto mean = ensemble_across_datasets(vectors);
  REQUIRE(mean.size() == 2);
  CHECK(mean[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(mean[1] == doctest::Approx(0.6).epsilon(1e-15));
  std::vector<std::vector<double>> single = {{0.1, 0.9}};
  CHECK(ensemble_across_datasets(single) == single[0]);
  std::vector<std::vector<double>> constant = {{0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}};
  for (double v : ensemble_across_datasets(constant)) CHECK(v == 0.3);
  std::vector<std::vector<double>> ragged = {{0.1}, {0.2, 0.3}};
  CHECK_THROWS_AS(ensemble_across_datasets(ragged), Error);
  CHECK_THROWS_AS(ensemble_across_datasets(std::vector<std::vector<double>>{}), Error);
}

TEST_CASE("concatenate_datasets appends namespaced columns") {
  DatasetBundle bundle = toy_bundle(6, 5);
  FeatureTable second = bundle.tables[0];
  second.dataset_name = "other";
  second.feature_names = {"a", "b"};
  std::vector<FeatureTable> tables = {bundle.tables[0], second};
  FeatureTable joined = concatenate_datasets(tables);
  CHECK(joined.n_features() == 4);
  CHECK(joined.feature_names[0] == "toy.signal");
  CHECK(joined.feature_names[2] == "other.a");
  CHECK(joined.values(3, 2) == second.values(3, 0));

  std::vector<FeatureTable> one = {bundle.tables[0]};
  FeatureTable same = concatenate_datasets(one);
  CHECK(same.n_features() == 2);
  CHECK(same.values.data() == bundle.tables[0].values.data());

  FeatureTable misaligned = second;
  misaligned.compound_ids[0] = "zzz";
  std::vector<FeatureTable> bad = {bundle.tables[0], misaligned};
  CHECK_THROWS_AS(concatenate_datasets(bad), Error);
}

TEST_CASE("imputation uses training-column means") {
  Matrix X(3, 2);
  X(0, 0) = 1.0;
  X(1, 0) = 3.0;
  X(2, 0) = std::numeric_limits<double>::quiet_NaN();
  X(0, 1) = std::numeric_limits<double>::quiet_NaN();
  X(1, 1) = std::numeric_limits<double>::quiet_NaN();
  X(2, 1) = std::numeric_limits<double>::quiet_NaN();
  auto means = fit_impute_means(X);
  CHECK(means[0] == 2.0);
  CHECK(means[1] == 0.0);  // fully missing column
  apply_impute_means(X, means);
  CHECK(X(2, 0) == 2.0);
  CHECK(X(0, 1) == 0.0);
}

TEST_CASE("run_grid executes the full cartesian product") {
  DatasetBundle bundle = toy_bundle(40, 9);
  std::vector<NamedLearner> learners(1);
  learners[0].name = "naive_bayes";
  learners[0].spec.kind = LearnerKind::naive_bayes;
  std::vector<std::string> targets = {"ae0"};

  std::vector<SplitSetting> settings(2);
  settings[0].label = "time";
  settings[0].method = SplitMethod::time;
  settings[0].threshold = MonthDate{2000, 1};
  settings[1].label = "random";
  settings[1].method = SplitMethod::random;
  settings[1].n_train = 30;
  settings[1].n_test = 10;

  GridOptions options;
  options.k_folds = 3;
  options.n_repetitions = 20;
  options.base_seed = 5;

  GridResult result = run_grid(bundle, learners, targets, settings, options);
  CHECK(result.records.size() == 40);  // 1 x 1 x 1 x 2 x 20
  CHECK(result.failures.empty());

  // time repetitions share the plan; random repetitions differ
  std::set<std::string> time_tests, random_seeds;
  for (const auto& r : result.records) {
    CHECK(r.probabilities.size() == r.test_ids->size());
    if (r.split_label == "time") {
      time_tests.insert((*r.test_ids)[0]);
      CHECK(r.threshold == MonthDate{2000, 1});
    } else {
      random_seeds.insert(std::to_string(*r.plan_seed));
    }
  }
  CHECK(time_tests.size() == 1);
  CHECK(random_seeds.size() == 20);

  // zero targets: empty grid
  GridResult empty = run_grid(bundle, learners, {}, settings, options);
  CHECK(empty.records.empty());

  // jobs invariance of records
  GridOptions parallel = options;
  parallel.jobs = 4;
  GridResult threaded = run_grid(bundle, learners, targets, settings, parallel);
  REQUIRE(threaded.records.size() == result.records.size());
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    CHECK(threaded.records[i].probabilities == result.records[i].probabilities);
  }
}

TEST_CASE("comparison report on identical metrics is all-zero with p = 0.5") {
  DatasetBundle bundle = toy_bundle(40, 13, 2);
  std::vector<RunRecord> records;
  auto test_ids = std::make_shared<const std::vector<std::string>>(
      std::vector<std::string>{"c000", "c001"});
  for (std::string dataset : {"d1", "d2"}) {
    for (std::string target : {"ae0", "ae1"}) {
      for (std::string split : {"time", "random"}) {
        for (int rep = 0; rep < 3; ++rep) {
          RunRecord r;
          r.dataset = dataset;
          r.learner = "nb";
          r.target = target;
          r.split_label = split;
          r.method = split == "time" ? SplitMethod::time : SplitMethod::random;
          r.rep = rep;
          r.metrics.roc_auc = 0.7;
          r.test_ids = test_ids;
          r.probabilities = {0.5, 0.5};
          records.push_back(std::move(r));
        }
      }
    }
  }
  ComparisonReport report = build_comparison_report(records, "time", "random", {"d2"});
  CHECK(report.cells.size() == 4);
  for (const auto& cell : report.cells) {
    CHECK(*cell.diff == 0.0);
    CHECK(*cell.mean_time == doctest::Approx(0.7).epsilon(1e-15));
  }
  for (const auto& tc : report.per_target) {
    REQUIRE(tc.ttest.has_value());
    CHECK(tc.ttest->p == 0.5);
    CHECK(tc.ttest->degenerate);
  }
  REQUIRE(report.combined_p.has_value());
  CHECK(*report.combined_p == doctest::Approx(0.5).epsilon(1e-12));

  const std::string json = report.to_json_string();
  CHECK(json.find("\"combined_p\": 0.5") != std::string::npos);
  CHECK(json.find("\"protein\"") != std::string::npos);
}

TEST_CASE("comparison report flags incomplete cells") {
  std::vector<RunRecord> records;
  auto test_ids =
      std::make_shared<const std::vector<std::string>>(std::vector<std::string>{"x"});
  RunRecord only_time;
  only_time.dataset = "d";
  only_time.learner = "nb";
  only_time.target = "ae";
  only_time.split_label = "time";
  only_time.rep = 0;
  only_time.metrics.roc_auc = 0.6;
  only_time.test_ids = test_ids;
  only_time.probabilities = {0.5};
  records.push_back(only_time);
  ComparisonReport report = build_comparison_report(records, "time", "random", {});
  CHECK(report.incomplete_cells == 1);
  CHECK(!report.combined_p.has_value());
}

TEST_CASE("derive_ensemble_records averages member probabilities") {
  DatasetBundle bundle = toy_bundle(6, 21);
  auto test_ids = std::make_shared<const std::vector<std::string>>(
      std::vector<std::string>{"c000", "c001"});
  std::vector<RunRecord> records;
  for (std::string dataset : {"toy", "other"}) {
    RunRecord r;
    r.dataset = dataset;
    r.learner = "nb";
    r.target = "ae0";
    r.split_label = "time";
    r.rep = 0;
    r.test_ids = test_ids;
    r.probabilities = dataset == "toy" ? std::vector<double>{0.2, 0.4}
                                       : std::vector<double>{0.6, 0.8};
    records.push_back(std::move(r));
  }
  std::vector<CellFailure> failures;
  std::vector<std::string> members = {"toy", "other"};
  auto derived = derive_ensemble_records(records, members, bundle, "ensemble", failures);
  REQUIRE(derived.size() == 1);
  CHECK(derived[0].dataset == "ensemble");
  REQUIRE(derived[0].probabilities.size() == 2);
  CHECK(derived[0].probabilities[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(derived[0].probabilities[1] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(failures.empty());

  // missing member: failure entry, no record
  records.pop_back();
  auto missing = derive_ensemble_records(records, members, bundle, "ensemble", failures);
  CHECK(missing.empty());
  CHECK(failures.size() == 1);
}
