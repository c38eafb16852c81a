#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "timesplit/dataset.hpp"
#include "timesplit/learners.hpp"
#include "timesplit/metrics.hpp"
#include "timesplit/splitter.hpp"
#include "timesplit/stats.hpp"

namespace timesplit {

// Inner k-fold prediction-averaging ensemble: trains k models, each on k-1
// stratified parts, and averages their probabilities on the test matrix.
// The per-row average sums the k values in sorted order, so the result does
// not depend on fold enumeration order.
std::vector<double> train_fold_ensemble(const LearnerSpec& spec, const Matrix& train_X,
                                        std::span<const std::int8_t> train_y, const Matrix& test_X,
                                        int k, std::uint64_t splitting_seed,
                                        std::uint64_t training_seed);

// Column-appends tables (identical compound id ordering required), prefixing
// feature names with their dataset name.
FeatureTable concatenate_datasets(std::span<const FeatureTable> tables,
                                  std::string result_name = "concat");

// Element-wise arithmetic mean of per-dataset probability vectors.
std::vector<double> ensemble_across_datasets(std::span<const std::vector<double>> vectors);

// Column means over non-missing entries (0 when a column is entirely
// missing), used to impute both train and test matrices.
std::vector<double> fit_impute_means(const Matrix& train_X);
void apply_impute_means(Matrix& X, std::span<const double> means);

// --- grid -------------------------------------------------------------------

struct NamedLearner {
  std::string name;
  LearnerSpec spec;
};

struct SplitSetting {
  std::string label;  // unique key used in records and reports
  SplitMethod method = SplitMethod::time;
  std::optional<MonthDate> threshold;               // time
  std::optional<std::size_t> n_train, n_test;       // random
  std::optional<std::size_t> fixed_test_positive_count;
  std::optional<std::string> ratio_target;
};

struct RunRecord {
  std::string dataset;
  std::string learner;
  std::string target;
  std::string split_label;
  SplitMethod method = SplitMethod::time;
  std::optional<MonthDate> threshold;
  std::optional<std::uint64_t> plan_seed;
  int rep = 0;
  MetricSet metrics;
  std::shared_ptr<const std::vector<std::string>> test_ids;
  std::vector<double> probabilities;  // one per test id
};

struct CellFailure {
  std::string dataset, learner, target, split_label;
  int rep = 0;
  std::string message;
};

struct GridOptions {
  int k_folds = 5;
  int n_repetitions = 20;
  std::uint64_t base_seed = 0;
  unsigned jobs = 1;
};

struct GridResult {
  std::vector<RunRecord> records;  // canonical order, independent of jobs
  std::vector<CellFailure> failures;
};

// Cartesian product of datasets x learners x targets x split settings x
// repetitions. Time splits reuse one plan and vary only the inner seeds per
// repetition; random splits draw one plan per repetition from seed base+rep.
// Every cell derives its generator stream from (base_seed, cell id), so the
// output is identical for any job count.
GridResult run_grid(const DatasetBundle& bundle, std::span<const NamedLearner> learners,
                    std::span<const std::string> targets, std::span<const SplitSetting> settings,
                    const GridOptions& options);

// Probability-averaging ensemble across member datasets: one derived record
// per (learner, target, split, rep) present for every member; metrics are
// recomputed from the averaged probabilities.
std::vector<RunRecord> derive_ensemble_records(std::span<const RunRecord> records,
                                               std::span<const std::string> member_datasets,
                                               const DatasetBundle& bundle,
                                               const std::string& ensemble_name,
                                               std::vector<CellFailure>& failures);

// --- comparison ----------------------------------------------------------------

struct ComparisonCell {
  std::string dataset, learner, target;
  std::vector<double> auc_time, auc_random;  // defined AUCs per repetition
  std::optional<double> mean_time, mean_random, diff;  // diff = random - time
  std::size_t undefined_time = 0, undefined_random = 0;
  bool complete() const { return mean_time && mean_random; }
};

struct TargetComparison {
  std::string target;
  std::size_t n_pairs = 0;
  std::optional<TTestResult> ttest;  // random > time, paired over cells
};

struct ComparisonReport {
  std::string time_label, random_label;
  std::vector<ComparisonCell> cells;
  std::vector<TargetComparison> per_target;
  std::optional<double> combined_p;  // Stouffer over per-target p in (0,1)
  std::size_t excluded_p_values = 0;
  std::size_t incomplete_cells = 0;
  std::vector<std::string> protein_datasets;

  std::string to_json_string() const;
};

ComparisonReport build_comparison_report(std::span<const RunRecord> records,
                                         const std::string& time_label,
                                         const std::string& random_label,
                                         std::vector<std::string> protein_datasets);

void write_records_jsonl(const std::filesystem::path& path, std::span<const RunRecord> records);
void write_comparison_csv(const std::filesystem::path& path, const ComparisonReport& report);

}  // namespace timesplit
