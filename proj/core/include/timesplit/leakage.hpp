#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "timesplit/month_date.hpp"

namespace timesplit {

struct PublicationRecord {
  std::string compound_id;
  std::string feature_id;
  MonthDate first_publication;
};

// Signed month lags (publication - approval) for every (compound, feature)
// pair where both dates exist.
struct LagTable {
  // feature -> compound -> lag in months
  std::map<std::string, std::map<std::string, int>> by_feature;
  std::size_t skipped_pairs = 0;  // pairs lacking an approval date
};

LagTable compute_time_lags(const std::map<std::string, MonthDate>& approvals,
                           std::span<const PublicationRecord> publications,
                           const std::set<std::string>& restrict_to);

std::optional<double> feature_mean_lag(const LagTable& lags, const std::string& feature);

struct LeakageResult {
  double observed_mean_lag = 0.0;  // mean of the top-k features' mean lags
  double p_value = 1.0;            // (1 + #{draws <= observed}) / (1 + n)
  int k = 0;
  std::int64_t n_permutations = 0;
  std::size_t pool_size = 0;
  double null_mean = 0.0;
  double null_sd = 0.0;
  std::vector<std::pair<std::string, double>> top_features;  // (feature, mean lag)

  std::string to_json_string() const;
};

// Permutation test for anomalously early post-approval publications among
// the top-ranked features: the null statistic is the mean of k feature mean
// lags over uniformly drawn k-subsets of the eligible pool. One-sided; small
// lags are the alarm.
LeakageResult top_feature_lag_test(const LagTable& lags,
                                   std::span<const std::string> ranked_features, int k,
                                   std::int64_t n_permutations, std::uint64_t seed,
                                   unsigned jobs = 1);

std::map<std::string, MonthDate> load_approvals(const std::filesystem::path& path);
std::vector<PublicationRecord> load_publications(const std::filesystem::path& path);

}  // namespace timesplit
