#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "timesplit/dataset.hpp"
#include "timesplit/month_date.hpp"

namespace timesplit {

enum class SplitMethod { time, random };

std::string_view split_method_name(SplitMethod m);

// A reproducible train/test assignment with its provenance.
struct SplitPlan {
  SplitMethod method = SplitMethod::time;
  std::optional<MonthDate> threshold;           // time splits
  std::optional<std::uint64_t> seed;            // random splits
  std::optional<std::size_t> fixed_test_positive_count;
  std::vector<std::string> train_ids;           // sorted lexicographically
  std::vector<std::string> test_ids;            // sorted lexicographically

  std::string to_json_string() const;
};

// Market date strictly before the threshold -> train; at or after -> test.
// Compounds without a market date are rejected outright (silently placing
// them would bias the comparison); the error lists the offending ids.
SplitPlan time_split(const DatasetBundle& bundle, MonthDate threshold);

// Uniform random partition of the bundle. When fixed_test_positive_count is
// set, the test set carries exactly that many positives of `target`, drawn
// uniformly among all valid partitions.
SplitPlan random_split(const DatasetBundle& bundle, std::size_t n_train, std::size_t n_test,
                       std::uint64_t seed,
                       std::optional<std::size_t> fixed_test_positive_count = std::nullopt,
                       const std::string* target = nullptr);

// Stratified k-fold assignment over rows with the given 0/1 labels.
// Positives and negatives are shuffled independently and dealt round-robin
// (one running counter across both classes), so fold sizes and per-fold
// positive counts each differ by at most one.
struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold_of;  // aligned with the input rows
};

FoldPlan stratified_kfold(std::span<const std::int8_t> labels, int k, std::uint64_t seed);

}  // namespace timesplit
