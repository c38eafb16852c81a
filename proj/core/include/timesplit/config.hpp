#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "timesplit/evaluator.hpp"
#include "timesplit/feature_filter.hpp"
#include "timesplit/synthetic.hpp"

namespace timesplit {

struct FeatureInput {
  std::string name;
  std::filesystem::path path;
};

struct ImportanceConfig {
  std::string dataset;
  std::string learner_name;
  std::string target;
  std::string split_label = "time";
  int n_folds = 4;
  int n_shuffles = 25;
  std::size_t top_n = 20;
};

struct LeakageConfig {
  int k = 15;
  std::int64_t n_permutations = 100000;
};

struct ChemspaceConfig {
  std::string split_label = "time";
  int fingerprint_radius = 2;
  int fingerprint_bits = 2048;
  int pca_components = 2;
};

// One JSON document drives every subcommand. Relative input paths resolve
// against the config file's directory.
struct RunConfig {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::filesystem::path out_dir;

  std::vector<FeatureInput> features;
  std::optional<std::filesystem::path> labels_path, dates_path, smiles_path, synonyms_path,
      approvals_path, publications_path;

  FilterConfig filter;
  double positive_ratio_low = 0.2;
  double positive_ratio_high = 0.8;

  std::vector<SplitSetting> splits;
  std::vector<NamedLearner> learners;
  std::vector<std::string> targets;  // empty: every retained target
  int repetitions = 20;
  int k_folds = 5;

  bool concat_datasets = false;
  std::vector<std::string> ensemble_datasets;
  std::vector<std::string> protein_datasets;
  std::string time_label = "time";
  std::string random_label = "random";

  ImportanceConfig importance;
  LeakageConfig leakage;
  ChemspaceConfig chemspace;
  std::optional<SyntheticSpec> synthetic;

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_json_string(const std::string& text,
                                    const std::filesystem::path& base_dir);

  // Every problem is collected before failing (thrown as ConfigError).
  void validate_for(std::string_view command) const;

  // Fully resolved effective config (defaults filled, paths absolute).
  std::string to_json_string() const;
};

}  // namespace timesplit
