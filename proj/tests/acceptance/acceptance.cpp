// Acceptance suite: one test case per criterion, each printing a single
// PASS/FAIL line with its runtime. Everything is seeded; reruns are exact.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/boyer_myrvold_planar_test.hpp>
#include <nlohmann/json.hpp>

#include "timesplit/commands.hpp"
#include "timesplit/evaluator.hpp"
#include "timesplit/fingerprint.hpp"
#include "timesplit/graph.hpp"
#include "timesplit/importance.hpp"
#include "timesplit/leakage.hpp"
#include "timesplit/math_util.hpp"
#include "timesplit/metrics.hpp"
#include "timesplit/rng.hpp"
#include "timesplit/smiles.hpp"
#include "timesplit/stats.hpp"
#include "timesplit/synthetic.hpp"

using namespace timesplit;
namespace fs = std::filesystem;

namespace {

// Tracks a criterion's verdict and prints the summary line.
class Criterion {
 public:
  Criterion(int number, std::string title)
      : number_(number), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  void expect(bool condition) { ok_ = ok_ && condition; }

  ~Criterion() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::printf("[%s] criterion %d: %s (%.2fs)\n", ok_ ? "PASS" : "FAIL", number_, title_.c_str(),
                secs);
    std::fflush(stdout);
  }

  bool ok() const { return ok_; }
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  int number_;
  std::string title_;
  bool ok_ = true;
  std::chrono::steady_clock::time_point start_;
};

#define EXPECT(criterion, condition) \
  do {                               \
    const bool ok_ = (condition);    \
    (criterion).expect(ok_);         \
    CHECK(condition);                \
  } while (0)

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

// --------------------------------------------------------------------------
TEST_CASE("criterion 1: metric oracle equivalence") {
  Criterion c(1, "roc_auc matches exhaustive pair counting; accuracy/f1/mcc match hand-built "
                 "confusion matrices");

  Xoshiro256StarStar rng(101);
  int checked = 0;
  while (checked < 1000) {
    const std::size_t n = 2 + rng.bounded(49);
    std::vector<double> scores(n);
    std::vector<std::int8_t> labels(n);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.uniform01() < 0.5 ? static_cast<double>(rng.bounded(6)) / 5.0
                                        : rng.uniform01();
      labels[i] = rng.uniform01() < 0.5 ? 1 : 0;
      (labels[i] ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) continue;
    ++checked;

    double wins = 0.0;
    std::uint64_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != 1) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (labels[j] != 0) continue;
        ++pairs;
        if (scores[i] > scores[j]) {
          wins += 1.0;
        } else if (scores[i] == scores[j]) {
          wins += 0.5;
        }
      }
    }
    EXPECT(c, *roc_auc(scores, labels) == wins / static_cast<double>(pairs));
  }

  for (int round = 0; round < 100; ++round) {
    const std::size_t n = 2 + rng.bounded(60);
    std::vector<double> scores(n);
    std::vector<std::int8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.uniform01();
      labels[i] = rng.uniform01() < 0.5 ? 1 : 0;
    }
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool hat = scores[i] >= 0.5;
      if (labels[i] == 1 && hat) ++tp;
      if (labels[i] == 0 && hat) ++fp;
      if (labels[i] == 0 && !hat) ++tn;
      if (labels[i] == 1 && !hat) ++fn;
    }
    MetricSet m = compute_metrics(scores, labels);
    EXPECT(c, m.accuracy == (tp + tn) / static_cast<double>(n));
    const double f1 = (2 * tp + fp + fn) == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
    EXPECT(c, m.f1 == f1);
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    const double mcc = denom == 0.0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(denom);
    EXPECT(c, m.mcc == mcc);
  }
  EXPECT(c, c.elapsed() < 10.0);
}

// --------------------------------------------------------------------------
namespace {

long double normal_cdf_ld(long double z) {
  return 0.5L * erfcl(-z / sqrtl(2.0L));
}

// Extended-precision inverse by bisection; independent of the production
// rational approximation.
long double normal_quantile_ld(long double p) {
  long double lo = -40.0L, hi = 40.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    if (normal_cdf_ld(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5L * (lo + hi);
}

}  // namespace

TEST_CASE("criterion 2: statistics accuracy") {
  Criterion c(2, "normal quantile/cdf within 1e-9; Stouffer and paired-t anchors");

  Xoshiro256StarStar rng(202);
  double max_q_err = 0.0, max_c_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double p = std::min(1.0 - 1e-12, std::max(1e-12, rng.uniform01()));
    max_q_err = std::max(
        max_q_err, std::abs(normal_quantile(p) - static_cast<double>(normal_quantile_ld(p))));
    const double z = (rng.uniform01() - 0.5) * 16.0;
    max_c_err =
        std::max(max_c_err, std::abs(normal_cdf(z) - static_cast<double>(normal_cdf_ld(z))));
  }
  EXPECT(c, max_q_err < 1e-9);
  EXPECT(c, max_c_err < 1e-9);

  const std::vector<double> fives = {0.05, 0.05};
  EXPECT(c, std::abs(stouffer_combine(fives) - 0.0100) <= 1e-4);

  const std::vector<double> a = {1, 2, 3}, zero = {0, 0, 0};
  TTestResult t = paired_t_test_one_sided(a, zero, Alternative::a_greater);
  const double tval = 2.0 * std::sqrt(3.0);
  const double closed_form = 0.5 - tval / (2.0 * std::sqrt(tval * tval + 2.0));
  EXPECT(c, std::abs(t.p - closed_form) <= 1e-12);
  EXPECT(c, std::abs(t.p - 0.0371) <= 1e-4);

  EXPECT(c, c.elapsed() < 5.0);
}

// --------------------------------------------------------------------------
namespace {

bool boost_planar(int n, const std::vector<std::pair<int, int>>& edges) {
  using BoostGraph = boost::adjacency_list<boost::vecS, boost::vecS, boost::undirectedS>;
  BoostGraph g(static_cast<std::size_t>(n));
  for (const auto& [a, b] : edges) boost::add_edge(a, b, g);
  return boost::boyer_myrvold_planarity_test(g);
}

}  // namespace

TEST_CASE("criterion 3: planar filtering correctness") {
  Criterion c(3, "pruned graphs: 3(n-2) edges, independent planarity check, max spanning tree "
                 "containment; K5 drops the weakest edge");

  Xoshiro256StarStar rng(303);
  for (int round = 0; round < 50; ++round) {
    const int n = 3 + static_cast<int>(rng.bounded(28));
    std::vector<double> weights(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = static_cast<double>(i + 1);
    fisher_yates_shuffle(weights, rng);
    Matrix sim(n, n);
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j, ++k) {
        sim(i, j) = weights[k];
        sim(j, i) = weights[k];
      }
    }
    WeightedGraph g = pmfg_construct(sim);
    EXPECT(c, g.edges.size() == static_cast<std::size_t>(3 * (n - 2)));

    std::vector<std::pair<int, int>> edges;
    for (const auto& e : g.edges) edges.emplace_back(e.a, e.b);
    EXPECT(c, boost_planar(n, edges));

    // Kruskal maximum spanning tree with the same tie order
    std::vector<WeightedEdge> sorted;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) sorted.push_back({i, j, sim(i, j)});
    }
    std::sort(sorted.begin(), sorted.end(), [](const WeightedEdge& x, const WeightedEdge& y) {
      return x.weight > y.weight;
    });
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    std::set<std::pair<int, int>> kept(edges.begin(), edges.end());
    for (const auto& e : sorted) {
      const int ra = find(e.a), rb = find(e.b);
      if (ra == rb) continue;
      parent[ra] = rb;
      const bool in_pruned = kept.count({e.a, e.b}) == 1;
      EXPECT(c, in_pruned);
    }
  }

  // K5 case: exactly the minimum-weight edge is dropped
  Matrix k5(5, 5);
  std::size_t idx = 0;
  std::pair<int, int> weakest;
  double weakest_weight = 1e18;
  Xoshiro256StarStar wrng(304);
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j, ++idx) {
      const double w = 10.0 + static_cast<double>(wrng.bounded(1000)) / 7.0 + idx * 1e-6;
      k5(i, j) = w;
      k5(j, i) = w;
      if (w < weakest_weight) {
        weakest_weight = w;
        weakest = {i, j};
      }
    }
  }
  WeightedGraph pruned = pmfg_construct(k5);
  EXPECT(c, pruned.edges.size() == 9);
  for (const auto& e : pruned.edges) {
    const bool is_weakest = e.a == weakest.first && e.b == weakest.second;
    EXPECT(c, !is_weakest);
  }

  EXPECT(c, c.elapsed() < 60.0);
}

// --------------------------------------------------------------------------
TEST_CASE("criterion 4: fingerprint invariance under atom reordering") {
  Criterion c(4, "100 random rewrites of 50 molecules keep fingerprints identical; benzene "
                 "yields at most 3 set bits");

  const std::vector<std::string> molecules = {
      "CCO", "CC(=O)O", "CC(=O)Oc1ccccc1C(=O)O", "c1ccccc1", "Cc1ccccc1",
      "c1ccc2ccccc2c1", "c1ccc2c(c1)ccc1ccccc12", "C1CCCCC1", "C1CCCC1", "C1CC1",
      "CC(C)CC(N)C(=O)O", "N[C@@H](C)C(=O)O", "NCC(=O)O", "CC(N)Cc1ccccc1",
      "CN1CCC[C@H]1c1cccnc1", "O=[N+]([O-])c1ccccc1", "Nc1ccc(S(=O)(=O)N)cc1",
      "Clc1ccccc1", "FC(F)(F)c1ccc(Cl)cc1", "Brc1ccc(I)cc1",
      "OCC1CCCCC1", "OC(=O)C1CCCCC1", "CC(C)(C)OC(=O)N", "CCOC(=O)C",
      "CCN(CC)CC", "CN(C)C=O", "CC#N", "C#N", "C#C", "C=C",
      "CC=CC", "CC(C)=CC", "OC=O", "C(=O)O", "OCCO", "OCC(O)CO",
      "[Na+].[Cl-]", "[NH4+].[Cl-]", "CC(=O)[O-].[Na+]",
      "Oc1ccc(Cl)cc1", "Oc1ccc(cc1)C(C)(C)c1ccc(O)cc1",
      "c1ccsc1", "c1ccoc1", "c1cc[nH]c1", "n1ccccc1", "Cn1cccc1",
      "CSc1ccccc1", "CS(=O)(=O)c1ccccc1", "NS(=O)(=O)c1ccccc1",
      "C1CC2CCC1CC2",
  };
  REQUIRE(molecules.size() == 50);

  Xoshiro256StarStar rng(404);
  for (const auto& smiles : molecules) {
    const Molecule reference = parse_smiles(smiles);
    const Fingerprint expected = morgan_fingerprint(reference);
    bool all_equal = true;
    for (int round = 0; round < 100; ++round) {
      const std::string rewritten = to_smiles(reference, rng);
      const Fingerprint fp = morgan_fingerprint(parse_smiles(rewritten));
      all_equal = all_equal && fp.bits == expected.bits;
    }
    INFO("molecule " << smiles);
    EXPECT(c, all_equal);
  }

  const Fingerprint benzene = morgan_fingerprint(parse_smiles("c1ccccc1"));
  EXPECT(c, benzene.bits.size() <= 3);
  EXPECT(c, !benzene.bits.empty());

  EXPECT(c, c.elapsed() < 10.0);
}

// --------------------------------------------------------------------------
TEST_CASE("criterion 5: learner numerics") {
  Criterion c(5, "elastic-net gradient vs finite differences; monotone objective; zero-tree "
                 "model predicts the base rate");

  Xoshiro256StarStar rng(505);
  Matrix X(30, 6);
  std::vector<std::int8_t> y(30);
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t j = 0; j < 6; ++j) X(i, j) = rng.uniform01() * 2.0 - 1.0;
    y[i] = rng.uniform01() < 0.5 ? 1 : 0;
  }
  y[0] = 0;
  y[1] = 1;

  const double l2 = 0.01, h = 1e-6;
  double worst = 0.0;
  for (int point = 0; point < 100; ++point) {
    std::vector<double> w(6);
    for (auto& v : w) v = rng.uniform01() * 2.0 - 1.0;
    const double b = rng.uniform01() * 2.0 - 1.0;
    const auto grad = elastic_net_smooth_gradient(X, y, w, b, l2);
    for (std::size_t j = 0; j <= w.size(); ++j) {
      auto value_at = [&](double delta) {
        std::vector<double> wd = w;
        double bd = b;
        if (j < w.size()) {
          wd[j] += delta;
        } else {
          bd += delta;
        }
        return elastic_net_smooth_value(X, y, wd, bd, l2);
      };
      const double numeric = (value_at(h) - value_at(-h)) / (2.0 * h);
      const double rel =
          std::abs(grad[j] - numeric) / std::max({1.0, std::abs(grad[j]), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  EXPECT(c, worst < 1e-6);

  LearnerSpec en;
  en.kind = LearnerKind::elastic_net;
  en.elastic_net.max_iters = 600;
  ElasticNetTrace trace;
  train_elastic_net(en, X, y, &trace);
  bool monotone = trace.objective.size() > 1;
  for (std::size_t i = 1; i < trace.objective.size(); ++i) {
    monotone = monotone && trace.objective[i] <= trace.objective[i - 1];
  }
  EXPECT(c, monotone);

  LearnerSpec gb;
  gb.kind = LearnerKind::gbdt;
  gb.gbdt.n_trees = 0;
  std::size_t positives = 0;
  for (auto v : y) positives += v;
  const double base = static_cast<double>(positives) / y.size();
  TrainedModel flat = train(gb, X, y);
  bool exact = true;
  for (double p : flat.predict_proba(X)) exact = exact && p == base;
  EXPECT(c, exact);
}

// --------------------------------------------------------------------------
TEST_CASE("criterion 6: protocol fidelity") {
  Criterion c(6, "5-fold ensemble equals independently recomputed fold mean; ignored feature "
                 "has exactly zero importance");

  Xoshiro256StarStar rng(606);
  const std::size_t n = 60, d = 4;
  Matrix train_X(n, d);
  std::vector<std::int8_t> train_y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) train_X(i, j) = rng.uniform01() * 2.0 - 1.0;
    train_y[i] = train_X(i, 0) + 0.4 * (rng.uniform01() - 0.5) > 0.0 ? 1 : 0;
  }
  train_y[0] = 0;
  train_y[1] = 1;
  Matrix test_X(20, d);
  std::vector<std::int8_t> test_y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < d; ++j) test_X(i, j) = rng.uniform01() * 2.0 - 1.0;
    test_y[i] = test_X(i, 0) > 0.0 ? 1 : 0;
  }
  test_y[0] = 0;
  test_y[1] = 1;

  LearnerSpec spec;
  spec.kind = LearnerKind::elastic_net;
  const std::uint64_t splitting_seed = 61, training_seed = 62;
  const auto ensemble =
      train_fold_ensemble(spec, train_X, train_y, test_X, 5, splitting_seed, training_seed);

  // independent recomputation from the published fold-plan and seed rules
  FoldPlan folds = stratified_kfold(train_y, 5, splitting_seed);
  std::vector<std::vector<double>> per_model;
  for (int fold = 0; fold < 5; ++fold) {
    std::vector<std::size_t> rows;
    std::vector<std::int8_t> fy;
    for (std::size_t i = 0; i < n; ++i) {
      if (folds.fold_of[i] != fold) {
        rows.push_back(i);
        fy.push_back(train_y[i]);
      }
    }
    LearnerSpec fold_spec = spec;
    fold_spec.training_seed = derive_seed(training_seed, static_cast<std::uint64_t>(fold));
    per_model.push_back(train(fold_spec, train_X.select_rows(rows), fy).predict_proba(test_X));
  }
  bool equal = true;
  for (std::size_t row = 0; row < ensemble.size(); ++row) {
    std::vector<double> values;
    for (const auto& m : per_model) values.push_back(m[row]);
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    equal = equal && ensemble[row] == sum / 5.0;
  }
  EXPECT(c, equal);

  // Feature 3 is constant in training: z-scoring keeps it at zero, the l1
  // step never moves its weight, so every fold model provably ignores it.
  Matrix leak_train = train_X;
  for (std::size_t i = 0; i < n; ++i) leak_train(i, 3) = 2.5;
  Matrix varied_test = test_X;  // non-constant column 3: the shuffle is real
  LearnerSpec en;
  en.kind = LearnerKind::elastic_net;
  const std::vector<std::string> names = {"signal", "x1", "x2", "ignored"};
  ImportanceReport report = permutation_importance(en, leak_train, train_y, varied_test, test_y,
                                                   names, 4, 25, 63);
  EXPECT(c, report.importances[3] == 0.0);
  EXPECT(c, report.importances[0] > 0.0);
}

// --------------------------------------------------------------------------
namespace {

struct GapOutcome {
  double gap = 0.0;
  double p = 1.0;
};

GapOutcome run_gap_benchmark(double drift_strength, const std::string& tag) {
  SyntheticSpec spec;
  spec.n_compounds = 500;
  spec.drift_strength = drift_strength;
  spec.seed = 1;
  const fs::path dir = fresh_dir("ts_accept_gap_" + tag);
  SyntheticFiles files = generate_synthetic(spec, dir);

  RunConfig cfg = RunConfig::from_file(files.run_config);
  cfg.seed = 11;
  cfg.seed_set = true;
  cfg.features.resize(1);  // the structure dataset carries the drift
  cfg.concat_datasets = false;
  cfg.ensemble_datasets.clear();
  cfg.targets = {"ae_drift"};
  NamedLearner en;
  en.name = "elastic_net";
  en.spec.kind = LearnerKind::elastic_net;
  cfg.learners = {en};

  PreparedData prepared = load_and_prepare(cfg);
  std::vector<SplitSetting> settings = cfg.splits;
  for (auto& s : settings) {
    if (s.method == SplitMethod::random) {
      s.n_train = files.n_pre_drift;
      s.n_test = files.n_post_drift;
    }
  }
  GridOptions options;
  options.k_folds = 5;
  options.n_repetitions = 20;
  options.base_seed = 11;
  options.jobs = 4;
  GridResult result = run_grid(prepared.bundle, cfg.learners, cfg.targets, settings, options);

  std::vector<double> auc_time, auc_random;
  for (const auto& r : result.records) {
    if (!r.metrics.roc_auc) continue;
    (r.split_label == "time" ? auc_time : auc_random).push_back(*r.metrics.roc_auc);
  }
  GapOutcome out;
  if (auc_time.size() == 20 && auc_random.size() == 20) {
    double mt = 0, mr = 0;
    for (double v : auc_time) mt += v / 20.0;
    for (double v : auc_random) mr += v / 20.0;
    out.gap = mr - mt;
    out.p = paired_t_test_one_sided(auc_random, auc_time, Alternative::a_greater).p;
  }
  return out;
}

}  // namespace

TEST_CASE("criterion 7: split-gap reproduction on the drift benchmark") {
  Criterion c(7, "drifting benchmark: random beats time by >= 0.05 with p < 0.01; null "
                 "benchmark stays insignificant");

  const GapOutcome drift = run_gap_benchmark(2.0, "drift");
  EXPECT(c, drift.gap >= 0.05);
  EXPECT(c, drift.p < 0.01);

  const GapOutcome null_case = run_gap_benchmark(0.0, "null");
  EXPECT(c, null_case.p > 0.05);

  EXPECT(c, c.elapsed() < 300.0);
}

// --------------------------------------------------------------------------
namespace {

struct LeakOutcome {
  double p = 1.0;
};

LeakOutcome run_leak_benchmark(bool shuffled, const std::string& tag) {
  SyntheticSpec spec;
  spec.n_compounds = 500;
  spec.seed = 1;
  spec.shuffle_publication_dates = shuffled;
  const fs::path dir = fresh_dir("ts_accept_leak_" + tag);
  SyntheticFiles files = generate_synthetic(spec, dir);

  RunConfig cfg = RunConfig::from_file(files.run_config);
  cfg.seed = 11;
  cfg.seed_set = true;
  PreparedData prepared = load_and_prepare(cfg);
  const DatasetBundle& bundle = prepared.bundle;

  const SplitPlan plan = time_split(bundle, spec.drift_point);
  std::set<std::string> test_set(plan.test_ids.begin(), plan.test_ids.end());
  const auto target_idx = bundle.labels.target_index("ae_drift");
  const auto table_idx = bundle.table_index("knowledge");
  std::vector<std::size_t> train_rows, test_rows;
  std::vector<std::int8_t> train_y, test_y;
  for (std::size_t r = 0; r < bundle.compound_ids.size(); ++r) {
    const std::int8_t y = bundle.labels.at(r, *target_idx);
    if (y == kMissingLabel) continue;
    if (test_set.count(bundle.compound_ids[r])) {
      test_rows.push_back(r);
      test_y.push_back(y);
    } else {
      train_rows.push_back(r);
      train_y.push_back(y);
    }
  }
  const FeatureTable& table = bundle.tables[*table_idx];
  LearnerSpec en;
  en.kind = LearnerKind::elastic_net;
  ImportanceReport importance = permutation_importance(
      en, table.values.select_rows(train_rows), train_y, table.values.select_rows(test_rows),
      test_y, table.feature_names, 4, 25, 99, 4);
  std::vector<std::string> ranked;
  for (const auto& [feature, value] : rank_features(importance, importance.feature_names.size())) {
    (void)value;
    ranked.push_back(feature);
  }

  LagTable lags =
      compute_time_lags(load_approvals(files.approvals), load_publications(files.publications),
                        test_set);
  LeakOutcome out;
  out.p = top_feature_lag_test(lags, ranked, 15, 100000, 77, 4).p_value;
  return out;
}

}  // namespace

TEST_CASE("criterion 8: leakage detection") {
  Criterion c(8, "lag permutation test fires on the leaky benchmark, stays quiet on shuffled "
                 "dates, and agrees with exhaustive enumeration");

  EXPECT(c, run_leak_benchmark(false, "leaky").p < 0.01);
  EXPECT(c, run_leak_benchmark(true, "shuffled").p > 0.1);

  // Monte-Carlo vs exhaustive enumeration on a pool with C(20, 3) = 1140 subsets.
  LagTable toy;
  Xoshiro256StarStar rng(808);
  std::vector<double> pool_lags;
  for (int f = 0; f < 20; ++f) {
    const int lag = static_cast<int>(rng.bounded(90));
    toy.by_feature["f" + std::to_string(f)]["c0"] = lag;
    pool_lags.push_back(lag);
  }
  std::vector<std::string> ranked;
  for (int f = 0; f < 20; ++f) ranked.push_back("f" + std::to_string(f));
  const int k = 3;
  const std::int64_t draws = 200000;
  LeakageResult mc = top_feature_lag_test(toy, ranked, k, draws, 4242);

  // enumeration over all 3-subsets; the lag table is keyed alphabetically,
  // so recover each feature's lag through the public accessor
  std::vector<double> lag_of;
  for (const auto& name : ranked) lag_of.push_back(*feature_mean_lag(toy, name));
  std::int64_t below = 0, total = 0;
  for (int i = 0; i < 20; ++i) {
    for (int j = i + 1; j < 20; ++j) {
      for (int l = j + 1; l < 20; ++l) {
        ++total;
        const double stat = (lag_of[i] + lag_of[j] + lag_of[l]) / 3.0;
        below += stat <= mc.observed_mean_lag;
      }
    }
  }
  const double exact = static_cast<double>(below) / static_cast<double>(total);
  const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(draws));
  EXPECT(c, std::abs(mc.p_value - exact) <= 3.0 * se + 2.0 / draws);

  EXPECT(c, c.elapsed() < 120.0);
}

// --------------------------------------------------------------------------
TEST_CASE("criterion 9: byte-identical evaluate runs across reruns and job counts") {
  Criterion c(9, "records.jsonl and comparison.json identical across two runs and --jobs 1 vs "
                 "--jobs 8");

  const fs::path dir = fresh_dir("ts_accept_determinism");
  SyntheticSpec spec;
  spec.n_compounds = 150;
  spec.n_knowledge_features = 24;
  spec.n_leaky_features = 8;
  spec.seed = 5;
  SyntheticFiles files = generate_synthetic(spec, dir);

  // trim to a grid that still covers concat + ensemble + both learners
  auto cfg_json = nlohmann::json::parse(slurp(files.run_config));
  cfg_json["repetitions"] = 5;
  const fs::path cfg_path = dir / "determinism.json";
  std::ofstream(cfg_path) << cfg_json.dump(2);

  auto run = [&](const std::string& out_name, int jobs) {
    const fs::path out = dir / out_name;
    const std::string command = std::string(TIMESPLIT_CLI_PATH) + " evaluate --config " +
                                cfg_path.string() + " --out " + out.string() + " --jobs " +
                                std::to_string(jobs) + " > /dev/null 2>&1";
    REQUIRE(std::system(command.c_str()) == 0);
    return out;
  };

  const fs::path a = run("out_a", 1);
  const fs::path b = run("out_b", 1);
  const fs::path c8 = run("out_c", 8);

  EXPECT(c, slurp(a / "records.jsonl") == slurp(b / "records.jsonl"));
  EXPECT(c, slurp(a / "comparison.json") == slurp(b / "comparison.json"));
  EXPECT(c, slurp(a / "records.jsonl") == slurp(c8 / "records.jsonl"));
  EXPECT(c, slurp(a / "comparison.json") == slurp(c8 / "comparison.json"));
  EXPECT(c, !slurp(a / "records.jsonl").empty());
}

// --------------------------------------------------------------------------
TEST_CASE("criterion 10: paper-scale bookkeeping") {
  Criterion c(10, "451-compound registry: time split 361/90 and fixed-ratio variant with "
                  "exactly 19 test positives");

  SyntheticSpec spec;
  spec.n_compounds = 451;
  spec.n_pre_drift = 361;
  spec.drift_point = MonthDate{1998, 10};
  spec.seed = 17;
  const fs::path dir = fresh_dir("ts_accept_scale");
  SyntheticFiles files = generate_synthetic(spec, dir);

  RunConfig cfg = RunConfig::from_file(files.run_config);
  cfg.seed = 3;
  cfg.seed_set = true;
  PreparedData prepared = load_and_prepare(cfg);
  EXPECT(c, prepared.bundle.compound_ids.size() == 451);

  SplitPlan plan = time_split(prepared.bundle, MonthDate{1998, 10});
  EXPECT(c, plan.train_ids.size() == 361);
  EXPECT(c, plan.test_ids.size() == 90);

  const std::string target = "ae_drift";
  SplitPlan fixed = random_split(prepared.bundle, 361, 90, 77, 19, &target);
  const auto target_idx = prepared.bundle.labels.target_index(target);
  REQUIRE(target_idx.has_value());
  std::size_t positives = 0;
  std::set<std::string> test_set(fixed.test_ids.begin(), fixed.test_ids.end());
  for (std::size_t r = 0; r < prepared.bundle.compound_ids.size(); ++r) {
    if (test_set.count(prepared.bundle.compound_ids[r]) &&
        prepared.bundle.labels.at(r, *target_idx) == 1) {
      ++positives;
    }
  }
  EXPECT(c, fixed.test_ids.size() == 90);
  EXPECT(c, positives == 19);
}
