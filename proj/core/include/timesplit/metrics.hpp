#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace timesplit {

// The five evaluation metrics. roc_auc / pr_auc are absent when the labels
// contain a single class.
struct MetricSet {
  double accuracy = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  std::optional<double> roc_auc;
  std::optional<double> pr_auc;
};

// Rank-based Mann-Whitney AUC kept in exact integer form: wins2 counts each
// correctly ordered positive/negative pair twice and each tie once, so
// value() is the correctly rounded quotient and averages over shuffles can
// be made exact.
struct AucCounts {
  std::uint64_t wins2 = 0;
  std::uint64_t n_pos = 0;
  std::uint64_t n_neg = 0;

  bool defined() const { return n_pos > 0 && n_neg > 0; }
  double value() const {
    return static_cast<double>(wins2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
  }
};

AucCounts roc_auc_counts(std::span<const double> scores, std::span<const std::int8_t> labels);
std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::int8_t> labels);

// Average precision: recall-weighted step sum of precision at each score
// threshold (descending), tied scores grouped.
std::optional<double> pr_auc(std::span<const double> scores, std::span<const std::int8_t> labels);

// accuracy / F1 / MCC from the thresholded confusion matrix (score >=
// threshold predicts positive) plus both ranking metrics.
MetricSet compute_metrics(std::span<const double> scores, std::span<const std::int8_t> labels,
                          double threshold = 0.5);

}  // namespace timesplit
