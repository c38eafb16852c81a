// Microbenchmarks for the hot paths: metric computation, fingerprint
// hashing, network pruning, and learner training.
#include <benchmark/benchmark.h>

#include <vector>

#include "timesplit/evaluator.hpp"
#include "timesplit/fingerprint.hpp"
#include "timesplit/graph.hpp"
#include "timesplit/learners.hpp"
#include "timesplit/metrics.hpp"
#include "timesplit/rng.hpp"
#include "timesplit/smiles.hpp"
#include "timesplit/splitter.hpp"
#include "timesplit/stats.hpp"

using namespace timesplit;

namespace {

struct Scored {
  std::vector<double> scores;
  std::vector<std::int8_t> labels;
};

Scored make_scored(std::size_t n) {
  Xoshiro256StarStar rng(1);
  Scored s;
  s.scores.resize(n);
  s.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.scores[i] = rng.uniform01();
    s.labels[i] = rng.uniform01() < 0.4 ? 1 : 0;
  }
  s.labels[0] = 0;
  s.labels[1] = 1;
  return s;
}

struct Dataset {
  Matrix X;
  std::vector<std::int8_t> y;
};

Dataset make_dataset(std::size_t n, std::size_t d) {
  Xoshiro256StarStar rng(2);
  Dataset set;
  set.X = Matrix(n, d);
  set.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double signal = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      set.X(i, j) = rng.uniform01() * 2.0 - 1.0;
      signal += (j % 2 ? 0.5 : -0.5) * set.X(i, j);
    }
    set.y[i] = signal > 0.0 ? 1 : 0;
  }
  set.y[0] = 0;
  set.y[1] = 1;
  return set;
}

void BM_RocAuc(benchmark::State& state) {
  Scored s = make_scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(roc_auc(s.scores, s.labels));
  }
}
BENCHMARK(BM_RocAuc)->Arg(100)->Arg(1000)->Arg(10000);

void BM_ComputeMetrics(benchmark::State& state) {
  Scored s = make_scored(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_metrics(s.scores, s.labels));
  }
}
BENCHMARK(BM_ComputeMetrics)->Arg(1000);

void BM_ParseSmiles(benchmark::State& state) {
  const std::string aspirin = "CC(=O)Oc1ccccc1C(=O)O";
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_smiles(aspirin));
  }
}
BENCHMARK(BM_ParseSmiles);

void BM_MorganFingerprint(benchmark::State& state) {
  Molecule mol = parse_smiles("CC(=O)Oc1ccccc1C(=O)O");
  for (auto _ : state) {
    benchmark::DoNotOptimize(morgan_fingerprint(mol));
  }
}
BENCHMARK(BM_MorganFingerprint);

void BM_PmfgConstruct(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Xoshiro256StarStar rng(3);
  Matrix sim(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double w = rng.uniform01();
      sim(i, j) = w;
      sim(j, i) = w;
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(pmfg_construct(sim));
  }
}
BENCHMARK(BM_PmfgConstruct)->Arg(30)->Arg(60)->Arg(120);

void BM_StratifiedKfold(benchmark::State& state) {
  Dataset set = make_dataset(static_cast<std::size_t>(state.range(0)), 1);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(stratified_kfold(set.y, 5, seed++));
  }
}
BENCHMARK(BM_StratifiedKfold)->Arg(500);

void BM_TrainElasticNet(benchmark::State& state) {
  Dataset set = make_dataset(360, static_cast<std::size_t>(state.range(0)));
  LearnerSpec spec;
  spec.kind = LearnerKind::elastic_net;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(spec, set.X, set.y));
  }
}
BENCHMARK(BM_TrainElasticNet)->Arg(20)->Arg(60);

void BM_TrainGbdt(benchmark::State& state) {
  Dataset set = make_dataset(360, 20);
  LearnerSpec spec;
  spec.kind = LearnerKind::gbdt;
  spec.gbdt.n_trees = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(spec, set.X, set.y));
  }
}
BENCHMARK(BM_TrainGbdt)->Arg(25)->Arg(100);

void BM_NormalQuantile(benchmark::State& state) {
  Xoshiro256StarStar rng(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(normal_quantile(0.5 + 0.499 * rng.uniform01()));
  }
}
BENCHMARK(BM_NormalQuantile);

}  // namespace

BENCHMARK_MAIN();
