#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "timesplit/learners.hpp"
#include "timesplit/matrix.hpp"

namespace timesplit {

// Permutation importance on the held-out set: importance = auc_all - auc_k,
// where auc_k averages the ensemble AUC over n_shuffles reorderings of test
// column k. The same shuffle orders are reused for every feature.
struct ImportanceReport {
  std::vector<std::string> feature_names;
  std::vector<double> importances;  // aligned with feature_names
  double auc_all = 0.0;
  int n_folds = 4;
  int n_shuffles = 25;
  std::uint64_t seed = 0;

  std::string to_json_string() const;
};

ImportanceReport permutation_importance(const LearnerSpec& spec, const Matrix& train_X,
                                        std::span<const std::int8_t> train_y, const Matrix& test_X,
                                        std::span<const std::int8_t> test_y,
                                        std::span<const std::string> feature_names, int n_folds,
                                        int n_shuffles, std::uint64_t seed, unsigned jobs = 1);

// Descending by importance; ties broken by feature name.
std::vector<std::pair<std::string, double>> rank_features(const ImportanceReport& report,
                                                          std::size_t top_n);

void write_importance_csv(const std::filesystem::path& path, const ImportanceReport& report);

}  // namespace timesplit
