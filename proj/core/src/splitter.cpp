#include "timesplit/splitter.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "timesplit/error.hpp"
#include "timesplit/rng.hpp"

namespace timesplit {

std::string_view split_method_name(SplitMethod m) {
  return m == SplitMethod::time ? "time" : "random";
}

std::string SplitPlan::to_json_string() const {
  nlohmann::json j;
  j["method"] = std::string(split_method_name(method));
  j["threshold"] = threshold ? nlohmann::json(threshold->to_string()) : nlohmann::json(nullptr);
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  if (fixed_test_positive_count) j["fixed_test_positive_count"] = *fixed_test_positive_count;
  j["train_ids"] = train_ids;
  j["test_ids"] = test_ids;
  return j.dump();
}

SplitPlan time_split(const DatasetBundle& bundle, MonthDate threshold) {
  if (bundle.registry.empty()) {
    throw Error("time_split: bundle has no compound registry (market dates required)");
  }
  std::vector<std::string> undated;
  SplitPlan plan;
  plan.method = SplitMethod::time;
  plan.threshold = threshold;
  for (const auto& rec : bundle.registry) {
    if (!rec.market_date) {
      undated.push_back(rec.id);
      continue;
    }
    if (*rec.market_date < threshold) {
      plan.train_ids.push_back(rec.id);
    } else {
      plan.test_ids.push_back(rec.id);
    }
  }
  if (!undated.empty()) {
    std::string msg = "time_split: compounds without a market date:";
    for (const auto& id : undated) msg += " " + id;
    throw Error(msg);
  }
  std::sort(plan.train_ids.begin(), plan.train_ids.end());
  std::sort(plan.test_ids.begin(), plan.test_ids.end());
  if (plan.train_ids.empty() || plan.test_ids.empty()) {
    throw Error("time_split: threshold " + threshold.to_string() +
                " leaves an empty train or test side");
  }
  return plan;
}

SplitPlan random_split(const DatasetBundle& bundle, std::size_t n_train, std::size_t n_test,
                       std::uint64_t seed, std::optional<std::size_t> fixed_test_positive_count,
                       const std::string* target) {
  const std::size_t n = bundle.compound_ids.size();
  if (n_train + n_test != n) {
    throw ValidationError("random_split: n_train + n_test = " + std::to_string(n_train + n_test) +
                          " but the bundle has " + std::to_string(n) + " compounds");
  }
  if (n_train == 0 || n_test == 0) {
    throw ValidationError("random_split: both sides must be non-empty");
  }

  SplitPlan plan;
  plan.method = SplitMethod::random;
  plan.seed = seed;
  plan.fixed_test_positive_count = fixed_test_positive_count;
  Xoshiro256StarStar rng(seed);

  std::vector<bool> in_test(n, false);
  if (fixed_test_positive_count) {
    if (!target) throw ValidationError("random_split: fixed positive count requires a target");
    auto t = bundle.labels.target_index(*target);
    if (!t) throw ValidationError("random_split: unknown target '" + *target + "'");
    std::vector<std::size_t> positives, others;
    for (std::size_t i = 0; i < n; ++i) {
      (bundle.labels.at(i, *t) == 1 ? positives : others).push_back(i);
    }
    const std::size_t want_pos = *fixed_test_positive_count;
    if (want_pos > n_test || want_pos > positives.size() || n_test - want_pos > others.size()) {
      throw ValidationError("random_split: cannot place " + std::to_string(want_pos) +
                            " positives in a test set of " + std::to_string(n_test) + " (" +
                            std::to_string(positives.size()) + " positives, " +
                            std::to_string(others.size()) + " others available)");
    }
    for (std::size_t i : sample_without_replacement(positives.size(), want_pos, rng)) {
      in_test[positives[i]] = true;
    }
    for (std::size_t i : sample_without_replacement(others.size(), n_test - want_pos, rng)) {
      in_test[others[i]] = true;
    }
  } else {
    for (std::size_t i : sample_without_replacement(n, n_test, rng)) in_test[i] = true;
  }

  for (std::size_t i = 0; i < n; ++i) {
    (in_test[i] ? plan.test_ids : plan.train_ids).push_back(bundle.compound_ids[i]);
  }
  // bundle ids are sorted, so the filtered lists already are.
  return plan;
}

FoldPlan stratified_kfold(std::span<const std::int8_t> labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error("stratified_kfold: k must be >= 2");
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      positives.push_back(i);
    } else if (labels[i] == 0) {
      negatives.push_back(i);
    } else {
      throw Error("stratified_kfold: labels must be 0/1");
    }
  }
  if (positives.size() < static_cast<std::size_t>(k) ||
      negatives.size() < static_cast<std::size_t>(k)) {
    throw Error("stratified_kfold: need at least k=" + std::to_string(k) +
                " rows of each class (" + std::to_string(positives.size()) + " positive, " +
                std::to_string(negatives.size()) + " negative)");
  }

  Xoshiro256StarStar rng(seed);
  fisher_yates_shuffle(positives, rng);
  fisher_yates_shuffle(negatives, rng);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.fold_of.assign(labels.size(), -1);
  std::size_t counter = 0;
  for (std::size_t i : positives) plan.fold_of[i] = static_cast<int>(counter++ % k);
  for (std::size_t i : negatives) plan.fold_of[i] = static_cast<int>(counter++ % k);
  return plan;
}

}  // namespace timesplit
