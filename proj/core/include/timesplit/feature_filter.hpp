#pragma once

#include <string>
#include <utility>
#include <vector>

#include "timesplit/dataset.hpp"

namespace timesplit {

// What the three filter stages removed, and why.
struct FilterReport {
  std::vector<std::string> dropped_duplicates;
  std::vector<std::string> dropped_low_cv;
  // (surviving trigger column, dropped column)
  std::vector<std::pair<std::string, std::string>> dropped_correlated;
  std::vector<std::string> kept;

  std::string to_json_string() const;
};

struct FilterConfig {
  double cv_threshold = 0.05;
  double r2_threshold = 0.85;
};

// Among groups of columns with identical value vectors (missing matches
// missing), only the leftmost survives.
FeatureTable drop_duplicate_features(const FeatureTable& table, FilterReport& report);

// Drops column j when sd_j / |mean_j| < threshold over non-missing entries
// (population sd). Constant columns are dropped; zero-mean columns with
// spread are kept (infinite CV). Columns with no non-missing entries drop.
FeatureTable drop_low_cv_features(const FeatureTable& table, double threshold,
                                  FilterReport& report);

// Scans ordered column pairs (i < j); when Pearson r^2 over jointly
// non-missing rows exceeds the threshold, j is dropped. Earlier columns
// always survive their pairings. Pairs with fewer than 3 shared rows are
// skipped.
FeatureTable drop_correlated_features(const FeatureTable& table, double r2_threshold,
                                      FilterReport& report);

// duplicates -> CV -> correlation, in that order. Throws when nothing
// survives.
std::pair<FeatureTable, FilterReport> apply_filter_pipeline(const FeatureTable& table,
                                                            const FilterConfig& config = {});

}  // namespace timesplit
