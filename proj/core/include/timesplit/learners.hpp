#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "timesplit/matrix.hpp"

namespace timesplit {

enum class LearnerKind { elastic_net, naive_bayes, gbdt };

std::string_view learner_kind_name(LearnerKind kind);
LearnerKind learner_kind_from_name(std::string_view name);

struct ElasticNetParams {
  double l1_weight = 1e-2;
  double l2_weight = 1e-2;
  int max_iters = 10000;
  double tol = 1e-7;
};

struct NaiveBayesParams {
  double variance_floor = 1e-9;
};

struct GbdtParams {
  int n_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_leaf = 5;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::elastic_net;
  ElasticNetParams elastic_net;
  NaiveBayesParams naive_bayes;
  GbdtParams gbdt;
  // Accepted for interface stability; the built-in learners are fully
  // deterministic and do not consume it.
  std::uint64_t training_seed = 0;

  void validate() const;
};

// --- model internals --------------------------------------------------------

struct ElasticNetModel {
  std::vector<double> feature_mean;  // z-scoring fitted on training rows only
  std::vector<double> feature_sd;
  std::vector<double> weights;
  double intercept = 0.0;
};

struct NaiveBayesModel {
  double log_prior_neg = 0.0, log_prior_pos = 0.0;
  std::vector<double> mean_neg, mean_pos;
  std::vector<double> var_neg, var_pos;
};

struct GbdtNode {
  int feature = -1;  // < 0 marks a leaf
  double threshold = 0.0;  // x <= threshold goes left
  int left = -1, right = -1;
  double value = 0.0;
  bool is_leaf() const { return feature < 0; }
};

struct GbdtTree {
  std::vector<GbdtNode> nodes;  // nodes[0] is the root
  double predict_raw(std::span<const double> row) const;
};

struct GbdtModel {
  double base_probability = 0.5;
  double base_raw = 0.0;
  double learning_rate = 0.1;
  std::vector<GbdtTree> trees;
};

class TrainedModel {
 public:
  TrainedModel(LearnerKind kind, std::size_t n_features,
               std::variant<ElasticNetModel, NaiveBayesModel, GbdtModel> impl)
      : kind_(kind), n_features_(n_features), impl_(std::move(impl)) {}

  LearnerKind kind() const { return kind_; }
  std::size_t n_features() const { return n_features_; }

  // Probability of the positive class per row, always in [0, 1].
  std::vector<double> predict_proba(const Matrix& X) const;
  double predict_proba_row(std::span<const double> row) const;

  const ElasticNetModel& elastic_net() const { return std::get<ElasticNetModel>(impl_); }
  const NaiveBayesModel& naive_bayes() const { return std::get<NaiveBayesModel>(impl_); }
  const GbdtModel& gbdt() const { return std::get<GbdtModel>(impl_); }

  // Versioned audit document: kind, hyperparameters, learned parameters.
  std::string to_json_string(const LearnerSpec& spec) const;

 private:
  LearnerKind kind_;
  std::size_t n_features_;
  std::variant<ElasticNetModel, NaiveBayesModel, GbdtModel> impl_;
};

// Requires complete, finite inputs with both classes present.
TrainedModel train(const LearnerSpec& spec, const Matrix& X, std::span<const std::int8_t> y);

// Per-iteration objective values, recorded when requested by tests.
struct ElasticNetTrace {
  std::vector<double> objective;
  bool converged = false;
};

TrainedModel train_elastic_net(const LearnerSpec& spec, const Matrix& X,
                               std::span<const std::int8_t> y,
                               ElasticNetTrace* trace = nullptr);

// Smooth part of the elastic-net objective on a given design matrix: mean
// logistic loss plus (l2/2)||w||^2. Exposed so the gradient can be verified
// against finite differences.
double elastic_net_smooth_value(const Matrix& X, std::span<const std::int8_t> y,
                                std::span<const double> weights, double intercept, double l2);
// Gradient; the last entry is the intercept derivative.
std::vector<double> elastic_net_smooth_gradient(const Matrix& X, std::span<const std::int8_t> y,
                                                std::span<const double> weights, double intercept,
                                                double l2);

}  // namespace timesplit
