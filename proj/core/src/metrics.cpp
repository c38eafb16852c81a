#include "timesplit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "timesplit/error.hpp"

namespace timesplit {

namespace {

void check_lengths(std::span<const double> scores, std::span<const std::int8_t> labels) {
  if (scores.size() != labels.size()) {
    throw Error("metrics: scores and labels differ in length (" + std::to_string(scores.size()) +
                " vs " + std::to_string(labels.size()) + ")");
  }
  for (std::int8_t y : labels) {
    if (y != 0 && y != 1) throw Error("metrics: labels must be 0/1");
  }
}

std::vector<std::size_t> order_by_score_ascending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

AucCounts roc_auc_counts(std::span<const double> scores, std::span<const std::int8_t> labels) {
  check_lengths(scores, labels);
  AucCounts counts;
  for (std::int8_t y : labels) {
    ++(y == 1 ? counts.n_pos : counts.n_neg);
  }
  if (!counts.defined()) return counts;

  auto order = order_by_score_ascending(scores);
  std::uint64_t negatives_below = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    // One group of tied scores at a time.
    std::size_t j = i;
    std::uint64_t group_pos = 0, group_neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      ++(labels[order[j]] == 1 ? group_pos : group_neg);
      ++j;
    }
    counts.wins2 += group_pos * (2 * negatives_below + group_neg);
    negatives_below += group_neg;
    i = j;
  }
  return counts;
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::int8_t> labels) {
  AucCounts counts = roc_auc_counts(scores, labels);
  if (!counts.defined()) return std::nullopt;
  return counts.value();
}

std::optional<double> pr_auc(std::span<const double> scores, std::span<const std::int8_t> labels) {
  check_lengths(scores, labels);
  std::uint64_t n_pos = 0;
  for (std::int8_t y : labels) n_pos += (y == 1);
  if (n_pos == 0 || n_pos == labels.size()) return std::nullopt;

  auto order = order_by_score_ascending(scores);
  // Walk thresholds from the highest score down; each tied group enters at
  // once.
  double ap = 0.0;
  std::uint64_t tp = 0, fp = 0;
  std::size_t i = order.size();
  while (i > 0) {
    std::size_t j = i;
    std::uint64_t group_pos = 0, group_neg = 0;
    while (j > 0 && scores[order[j - 1]] == scores[order[i - 1]]) {
      ++(labels[order[j - 1]] == 1 ? group_pos : group_neg);
      --j;
    }
    tp += group_pos;
    fp += group_neg;
    if (group_pos > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += precision * static_cast<double>(group_pos);
    }
    i = j;
  }
  return ap / static_cast<double>(n_pos);
}

MetricSet compute_metrics(std::span<const double> scores, std::span<const std::int8_t> labels,
                          double threshold) {
  check_lengths(scores, labels);
  if (labels.empty()) throw Error("metrics: empty input");

  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      ++(predicted ? tp : fn);
    } else {
      ++(predicted ? fp : tn);
    }
  }

  MetricSet m;
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(labels.size());
  m.f1 = (2 * tp + fp + fn) == 0
             ? 0.0
             : static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  const double denom = static_cast<double>(tp + fp) * static_cast<double>(tp + fn) *
                       static_cast<double>(tn + fp) * static_cast<double>(tn + fn);
  m.mcc = denom == 0.0 ? 0.0
                       : (static_cast<double>(tp) * static_cast<double>(tn) -
                          static_cast<double>(fp) * static_cast<double>(fn)) /
                             std::sqrt(denom);
  m.roc_auc = roc_auc(scores, labels);
  m.pr_auc = pr_auc(scores, labels);
  return m;
}

}  // namespace timesplit
