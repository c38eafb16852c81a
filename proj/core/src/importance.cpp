#include "timesplit/importance.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "timesplit/csv.hpp"
#include "timesplit/error.hpp"
#include "timesplit/evaluator.hpp"
#include "timesplit/metrics.hpp"
#include "timesplit/parallel.hpp"
#include "timesplit/rng.hpp"

namespace timesplit {

ImportanceReport permutation_importance(const LearnerSpec& spec, const Matrix& train_X,
                                        std::span<const std::int8_t> train_y, const Matrix& test_X,
                                        std::span<const std::int8_t> test_y,
                                        std::span<const std::string> feature_names, int n_folds,
                                        int n_shuffles, std::uint64_t seed, unsigned jobs) {
  if (feature_names.size() != train_X.cols()) {
    throw Error("permutation_importance: feature name count mismatch");
  }
  if (test_X.rows() != test_y.size()) throw Error("permutation_importance: test length mismatch");
  if (n_shuffles <= 0) throw Error("permutation_importance: n_shuffles must be > 0");

  SplitMix64 seeds(derive_seed(seed, "importance"));
  const std::uint64_t splitting_seed = seeds.next();
  const std::uint64_t training_seed = seeds.next();
  const std::uint64_t shuffle_seed = seeds.next();

  // Fitting once up front: the k fold models are only retrained when the
  // training data changes, never per shuffle.
  FoldPlan folds = stratified_kfold(train_y, n_folds, splitting_seed);
  std::vector<TrainedModel> models;
  models.reserve(n_folds);
  for (int fold = 0; fold < n_folds; ++fold) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < train_y.size(); ++i) {
      if (folds.fold_of[i] != fold) rows.push_back(i);
    }
    Matrix fold_X = train_X.select_rows(rows);
    std::vector<std::int8_t> fold_y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) fold_y[i] = train_y[rows[i]];
    LearnerSpec fold_spec = spec;
    fold_spec.training_seed = derive_seed(training_seed, static_cast<std::uint64_t>(fold));
    models.push_back(train(fold_spec, fold_X, fold_y));
  }

  auto ensemble_counts = [&](const Matrix& X) {
    std::vector<std::vector<double>> per_model;
    per_model.reserve(models.size());
    for (const auto& m : models) per_model.push_back(m.predict_proba(X));
    std::vector<double> mean(X.rows());
    std::vector<double> values(models.size());
    for (std::size_t r = 0; r < X.rows(); ++r) {
      for (std::size_t m = 0; m < models.size(); ++m) values[m] = per_model[m][r];
      std::sort(values.begin(), values.end());
      double sum = 0.0;
      for (double v : values) sum += v;
      mean[r] = sum / static_cast<double>(models.size());
    }
    return roc_auc_counts(mean, test_y);
  };

  const AucCounts all_counts = ensemble_counts(test_X);
  if (!all_counts.defined()) {
    throw Error("permutation_importance: test labels contain a single class");
  }

  // One permutation of test-row indices per shuffle repetition, drawn once
  // and reused across features (common random numbers).
  Xoshiro256StarStar shuffle_rng(shuffle_seed);
  std::vector<std::vector<std::size_t>> orders(static_cast<std::size_t>(n_shuffles));
  for (auto& order : orders) {
    order.resize(test_X.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    fisher_yates_shuffle(order, shuffle_rng);
  }

  ImportanceReport report;
  report.feature_names.assign(feature_names.begin(), feature_names.end());
  report.importances.resize(feature_names.size());
  report.auc_all = all_counts.value();
  report.n_folds = n_folds;
  report.n_shuffles = n_shuffles;
  report.seed = seed;

  const double pair_norm =
      2.0 * static_cast<double>(all_counts.n_pos) * static_cast<double>(all_counts.n_neg);
  parallel_for(feature_names.size(), jobs, [&](std::size_t k) {
    Matrix shuffled = test_X;
    std::uint64_t wins2_total = 0;
    for (const auto& order : orders) {
      for (std::size_t r = 0; r < test_X.rows(); ++r) shuffled(r, k) = test_X(order[r], k);
      wins2_total += ensemble_counts(shuffled).wins2;
    }
    // Integer pair counts make the all-shuffles-identical case cancel
    // exactly: mean AUC_k == AUC_all implies importance == 0.0.
    const double auc_k = static_cast<double>(wins2_total) /
                         (static_cast<double>(n_shuffles) * pair_norm);
    report.importances[k] = report.auc_all - auc_k;
  });
  return report;
}

std::vector<std::pair<std::string, double>> rank_features(const ImportanceReport& report,
                                                          std::size_t top_n) {
  std::vector<std::pair<std::string, double>> ranked;
  ranked.reserve(report.feature_names.size());
  for (std::size_t i = 0; i < report.feature_names.size(); ++i) {
    ranked.emplace_back(report.feature_names[i], report.importances[i]);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (top_n < ranked.size()) ranked.resize(top_n);
  return ranked;
}

std::string ImportanceReport::to_json_string() const {
  nlohmann::json j;
  j["auc_all"] = auc_all;
  j["folds"] = n_folds;
  j["shuffles"] = n_shuffles;
  j["seed"] = seed;
  nlohmann::json imp;
  for (std::size_t i = 0; i < feature_names.size(); ++i) imp[feature_names[i]] = importances[i];
  j["importances"] = std::move(imp);
  return j.dump(2);
}

void write_importance_csv(const std::filesystem::path& path, const ImportanceReport& report) {
  csv::Table table;
  table.header = {"feature", "importance"};
  for (const auto& [name, value] : rank_features(report, report.feature_names.size())) {
    table.rows.push_back({name, csv::format_double(value)});
  }
  csv::write_file(path, table);
}

}  // namespace timesplit
