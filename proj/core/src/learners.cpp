#include "timesplit/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "timesplit/error.hpp"
#include "timesplit/math_util.hpp"

namespace timesplit {

std::string_view learner_kind_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::elastic_net: return "elastic_net";
    case LearnerKind::naive_bayes: return "naive_bayes";
    case LearnerKind::gbdt: return "gbdt";
  }
  return "unknown";
}

LearnerKind learner_kind_from_name(std::string_view name) {
  if (name == "elastic_net") return LearnerKind::elastic_net;
  if (name == "naive_bayes") return LearnerKind::naive_bayes;
  if (name == "gbdt") return LearnerKind::gbdt;
  throw ValidationError("unknown learner kind '" + std::string(name) + "'");
}

void LearnerSpec::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw ValidationError(std::string(what) + " must be > 0");
  };
  switch (kind) {
    case LearnerKind::elastic_net:
      if (elastic_net.l1_weight < 0.0 || elastic_net.l2_weight < 0.0) {
        throw ValidationError("elastic_net penalty weights must be >= 0");
      }
      positive(elastic_net.tol, "elastic_net.tol");
      if (elastic_net.max_iters <= 0) throw ValidationError("elastic_net.max_iters must be > 0");
      break;
    case LearnerKind::naive_bayes:
      positive(naive_bayes.variance_floor, "naive_bayes.variance_floor");
      break;
    case LearnerKind::gbdt:
      if (gbdt.n_trees < 0) throw ValidationError("gbdt.n_trees must be >= 0");
      if (gbdt.max_depth <= 0) throw ValidationError("gbdt.max_depth must be > 0");
      positive(gbdt.learning_rate, "gbdt.learning_rate");
      if (gbdt.min_leaf <= 0) throw ValidationError("gbdt.min_leaf must be > 0");
      break;
  }
}

namespace {

void check_training_input(const Matrix& X, std::span<const std::int8_t> y) {
  if (X.rows() != y.size()) throw Error("train: X rows and y length differ");
  if (X.rows() == 0) throw Error("train: empty training set");
  std::size_t pos = 0;
  for (std::int8_t v : y) {
    if (v != 0 && v != 1) throw Error("train: labels must be 0/1 with no missing entries");
    pos += (v == 1);
  }
  if (pos == 0 || pos == y.size()) throw Error("train: training labels contain a single class");
  for (double v : X.data()) {
    if (!std::isfinite(v)) throw Error("train: non-finite feature value (impute upstream)");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

// --- elastic net -------------------------------------------------------------

double elastic_net_smooth_value(const Matrix& X, std::span<const std::int8_t> y,
                                std::span<const double> weights, double intercept, double l2) {
  const std::size_t n = X.rows();
  const double mean_loss = pairwise_sum(n, [&](std::size_t i) {
    const double z = dot(X.row(i), weights) + intercept;
    return y[i] == 1 ? log1p_exp(-z) : log1p_exp(z);
  }) / static_cast<double>(n);
  const double ridge =
      0.5 * l2 * pairwise_sum(weights.size(), [&](std::size_t j) { return weights[j] * weights[j]; });
  return mean_loss + ridge;
}

std::vector<double> elastic_net_smooth_gradient(const Matrix& X, std::span<const std::int8_t> y,
                                                std::span<const double> weights, double intercept,
                                                double l2) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) {
    residual[i] = sigmoid(dot(X.row(i), weights) + intercept) - static_cast<double>(y[i]);
  }
  std::vector<double> grad(d + 1);
  for (std::size_t j = 0; j < d; ++j) {
    grad[j] = pairwise_sum(n, [&](std::size_t i) { return residual[i] * X(i, j); }) /
                  static_cast<double>(n) +
              l2 * weights[j];
  }
  grad[d] = pairwise_sum(n, [&](std::size_t i) { return residual[i]; }) / static_cast<double>(n);
  return grad;
}

namespace {

Matrix standardize_training(const Matrix& X, std::vector<double>& mean, std::vector<double>& sd) {
  const std::size_t n = X.rows(), d = X.cols();
  mean.resize(d);
  sd.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    mean[j] = pairwise_sum(n, [&](std::size_t i) { return X(i, j); }) / static_cast<double>(n);
    const double ss = pairwise_sum(n, [&](std::size_t i) {
      const double c = X(i, j) - mean[j];
      return c * c;
    });
    const double s = std::sqrt(ss / static_cast<double>(n));
    sd[j] = s > 0.0 ? s : 1.0;  // constant columns pass through unscaled
  }
  Matrix Z(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) Z(i, j) = (X(i, j) - mean[j]) / sd[j];
  }
  return Z;
}

}  // namespace

TrainedModel train_elastic_net(const LearnerSpec& spec, const Matrix& X,
                               std::span<const std::int8_t> y, ElasticNetTrace* trace) {
  check_training_input(X, y);
  const auto& p = spec.elastic_net;
  const std::size_t d = X.cols();

  ElasticNetModel model;
  Matrix Z = standardize_training(X, model.feature_mean, model.feature_sd);

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  auto l1_term = [&](std::span<const double> weights) {
    return p.l1_weight *
           pairwise_sum(weights.size(), [&](std::size_t j) { return std::abs(weights[j]); });
  };

  double f = elastic_net_smooth_value(Z, y, w, b, p.l2_weight);
  double objective = f + l1_term(w);
  if (trace) {
    trace->objective.clear();
    trace->objective.push_back(objective);
    trace->converged = false;
  }

  double step = 1.0;
  std::vector<double> w_next(d);
  for (int iter = 0; iter < p.max_iters; ++iter) {
    const std::vector<double> grad = elastic_net_smooth_gradient(Z, y, w, b, p.l2_weight);

    double f_next = 0.0, b_next = 0.0, objective_next = 0.0;
    bool accepted = false;
    while (step >= 1e-18) {
      for (std::size_t j = 0; j < d; ++j) {
        w_next[j] = soft_threshold(w[j] - step * grad[j], step * p.l1_weight);
      }
      b_next = b - step * grad[d];
      // Majorization check for the smooth part; the explicit objective check
      // keeps the recorded sequence non-increasing under rounding as well.
      double quad = 0.0, lin = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double delta = w_next[j] - w[j];
        lin += grad[j] * delta;
        quad += delta * delta;
      }
      const double db = b_next - b;
      lin += grad[d] * db;
      quad += db * db;
      f_next = elastic_net_smooth_value(Z, y, w_next, b_next, p.l2_weight);
      objective_next = f_next + l1_term(w_next);
      if (f_next <= f + lin + quad / (2.0 * step) && objective_next <= objective) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no representable step makes progress

    double max_change = std::abs(b_next - b);
    for (std::size_t j = 0; j < d; ++j) max_change = std::max(max_change, std::abs(w_next[j] - w[j]));

    w.swap(w_next);
    b = b_next;
    f = f_next;
    objective = objective_next;
    if (trace) trace->objective.push_back(objective);

    if (max_change <= p.tol) {
      if (trace) trace->converged = true;
      break;
    }
    step = std::min(step * 1.25, 1e6);
  }

  model.weights = std::move(w);
  model.intercept = b;
  return TrainedModel(LearnerKind::elastic_net, d, std::move(model));
}

// --- Gaussian naive Bayes ----------------------------------------------------

namespace {

TrainedModel train_naive_bayes(const LearnerSpec& spec, const Matrix& X,
                               std::span<const std::int8_t> y) {
  check_training_input(X, y);
  const std::size_t n = X.rows(), d = X.cols();
  std::vector<std::size_t> rows_neg, rows_pos;
  for (std::size_t i = 0; i < n; ++i) (y[i] == 1 ? rows_pos : rows_neg).push_back(i);

  NaiveBayesModel model;
  model.log_prior_neg = std::log(static_cast<double>(rows_neg.size()) / static_cast<double>(n));
  model.log_prior_pos = std::log(static_cast<double>(rows_pos.size()) / static_cast<double>(n));

  auto fit_class = [&](const std::vector<std::size_t>& rows, std::vector<double>& mean,
                       std::vector<double>& var) {
    mean.resize(d);
    var.resize(d);
    const double m = static_cast<double>(rows.size());
    for (std::size_t j = 0; j < d; ++j) {
      mean[j] = pairwise_sum(rows.size(), [&](std::size_t k) { return X(rows[k], j); }) / m;
      const double ss = pairwise_sum(rows.size(), [&](std::size_t k) {
        const double c = X(rows[k], j) - mean[j];
        return c * c;
      });
      var[j] = std::max(ss / m, spec.naive_bayes.variance_floor);
    }
  };
  fit_class(rows_neg, model.mean_neg, model.var_neg);
  fit_class(rows_pos, model.mean_pos, model.var_pos);
  return TrainedModel(LearnerKind::naive_bayes, d, std::move(model));
}

double naive_bayes_log_likelihood(const NaiveBayesModel& m, std::span<const double> row,
                                  bool positive) {
  const auto& mean = positive ? m.mean_pos : m.mean_neg;
  const auto& var = positive ? m.var_pos : m.var_neg;
  double ll = positive ? m.log_prior_pos : m.log_prior_neg;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double c = row[j] - mean[j];
    ll -= 0.5 * (std::log(2.0 * M_PI * var[j]) + c * c / var[j]);
  }
  return ll;
}

}  // namespace

// --- gradient-boosted trees ---------------------------------------------------

double GbdtTree::predict_raw(std::span<const double> row) const {
  int node = 0;
  while (!nodes[node].is_leaf()) {
    node = row[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                             : nodes[node].right;
  }
  return nodes[node].value;
}

namespace {

struct GbdtBuilder {
  const Matrix& X;
  const std::vector<double>& gradient;  // y - p
  const std::vector<double>& hessian;   // p (1 - p)
  const GbdtParams& params;
  GbdtTree tree;

  // Rows arrive in ascending index order and partitions preserve it, which
  // keeps every per-node sum reproducible.
  int build(const std::vector<std::uint32_t>& rows, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    double grad_sum = pairwise_sum(rows.size(), [&](std::size_t k) { return gradient[rows[k]]; });
    bool split_found = false;
    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 0.0;

    if (depth < params.max_depth && rows.size() >= 2 * static_cast<std::size_t>(params.min_leaf)) {
      const double total_term =
          grad_sum * grad_sum / static_cast<double>(rows.size());
      std::vector<std::uint32_t> order(rows);
      for (std::size_t j = 0; j < X.cols(); ++j) {
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
          return X(a, j) < X(b, j);
        });
        // Prefix sums over groups of equal values; each group boundary is a
        // split candidate with threshold = last value on the left.
        double left_sum = 0.0;
        std::size_t left_count = 0;
        std::size_t i = 0;
        while (i < order.size()) {
          std::size_t g = i;
          while (g < order.size() && X(order[g], j) == X(order[i], j)) ++g;
          left_sum += pairwise_sum_range(i, g, [&](std::size_t k) { return gradient[order[k]]; });
          left_count += g - i;
          i = g;
          if (i == order.size()) break;  // no right side left
          if (left_count < static_cast<std::size_t>(params.min_leaf)) continue;
          const std::size_t right_count = order.size() - left_count;
          if (right_count < static_cast<std::size_t>(params.min_leaf)) break;
          const double right_sum = grad_sum - left_sum;
          const double gain = left_sum * left_sum / static_cast<double>(left_count) +
                              right_sum * right_sum / static_cast<double>(right_count) -
                              total_term;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(j);
            best_threshold = X(order[i - 1], j);
            split_found = true;
          }
        }
      }
    }

    if (!split_found) {
      const double hess_sum =
          pairwise_sum(rows.size(), [&](std::size_t k) { return hessian[rows[k]]; });
      tree.nodes[node_id].value = hess_sum == 0.0 ? 0.0 : grad_sum / hess_sum;
      return node_id;
    }

    std::vector<std::uint32_t> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (std::uint32_t r : rows) {
      (X(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_rows : right_rows)
          .push_back(r);
    }
    tree.nodes[node_id].feature = best_feature;
    tree.nodes[node_id].threshold = best_threshold;
    const int left_id = build(left_rows, depth + 1);
    const int right_id = build(right_rows, depth + 1);
    tree.nodes[node_id].left = left_id;
    tree.nodes[node_id].right = right_id;
    return node_id;
  }
};

TrainedModel train_gbdt(const LearnerSpec& spec, const Matrix& X, std::span<const std::int8_t> y) {
  check_training_input(X, y);
  const auto& p = spec.gbdt;
  const std::size_t n = X.rows();

  GbdtModel model;
  model.learning_rate = p.learning_rate;
  std::size_t n_pos = 0;
  for (std::int8_t v : y) n_pos += (v == 1);
  model.base_probability = static_cast<double>(n_pos) / static_cast<double>(n);
  model.base_raw = std::log(model.base_probability / (1.0 - model.base_probability));

  std::vector<double> raw(n, model.base_raw);
  std::vector<double> gradient(n), hessian(n);
  std::vector<std::uint32_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0u);

  for (int t = 0; t < p.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = sigmoid(raw[i]);
      gradient[i] = static_cast<double>(y[i]) - prob;
      hessian[i] = prob * (1.0 - prob);
    }
    GbdtBuilder builder{X, gradient, hessian, p, {}};
    builder.build(all_rows, 0);
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] += p.learning_rate * builder.tree.predict_raw(X.row(i));
    }
    model.trees.push_back(std::move(builder.tree));
  }
  return TrainedModel(LearnerKind::gbdt, X.cols(), std::move(model));
}

}  // namespace

// --- shared surface -----------------------------------------------------------

TrainedModel train(const LearnerSpec& spec, const Matrix& X, std::span<const std::int8_t> y) {
  spec.validate();
  switch (spec.kind) {
    case LearnerKind::elastic_net: return train_elastic_net(spec, X, y);
    case LearnerKind::naive_bayes: return train_naive_bayes(spec, X, y);
    case LearnerKind::gbdt: return train_gbdt(spec, X, y);
  }
  throw Error("train: unknown learner kind");
}

double TrainedModel::predict_proba_row(std::span<const double> row) const {
  if (row.size() != n_features_) {
    throw Error("predict_proba: expected " + std::to_string(n_features_) + " features, got " +
                std::to_string(row.size()));
  }
  switch (kind_) {
    case LearnerKind::elastic_net: {
      const auto& m = std::get<ElasticNetModel>(impl_);
      double z = m.intercept;
      for (std::size_t j = 0; j < row.size(); ++j) {
        z += m.weights[j] * (row[j] - m.feature_mean[j]) / m.feature_sd[j];
      }
      return sigmoid(z);
    }
    case LearnerKind::naive_bayes: {
      const auto& m = std::get<NaiveBayesModel>(impl_);
      const double ll_pos = naive_bayes_log_likelihood(m, row, true);
      const double ll_neg = naive_bayes_log_likelihood(m, row, false);
      return sigmoid(ll_pos - ll_neg);
    }
    case LearnerKind::gbdt: {
      const auto& m = std::get<GbdtModel>(impl_);
      if (m.trees.empty()) return m.base_probability;  // exact base rate
      double raw = m.base_raw;
      for (const auto& tree : m.trees) raw += m.learning_rate * tree.predict_raw(row);
      return sigmoid(raw);
    }
  }
  throw Error("predict_proba: unknown learner kind");
}

std::vector<double> TrainedModel::predict_proba(const Matrix& X) const {
  if (X.rows() > 0 && X.cols() != n_features_) {
    throw Error("predict_proba: expected " + std::to_string(n_features_) + " features, got " +
                std::to_string(X.cols()));
  }
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict_proba_row(X.row(i));
  return out;
}

std::string TrainedModel::to_json_string(const LearnerSpec& spec) const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = std::string(learner_kind_name(kind_));
  j["n_features"] = n_features_;
  switch (kind_) {
    case LearnerKind::elastic_net: {
      const auto& m = std::get<ElasticNetModel>(impl_);
      j["hyperparameters"] = {{"l1_weight", spec.elastic_net.l1_weight},
                              {"l2_weight", spec.elastic_net.l2_weight},
                              {"max_iters", spec.elastic_net.max_iters},
                              {"tol", spec.elastic_net.tol}};
      j["parameters"] = {{"feature_mean", m.feature_mean},
                         {"feature_sd", m.feature_sd},
                         {"weights", m.weights},
                         {"intercept", m.intercept}};
      break;
    }
    case LearnerKind::naive_bayes: {
      const auto& m = std::get<NaiveBayesModel>(impl_);
      j["hyperparameters"] = {{"variance_floor", spec.naive_bayes.variance_floor}};
      j["parameters"] = {{"log_prior_neg", m.log_prior_neg}, {"log_prior_pos", m.log_prior_pos},
                         {"mean_neg", m.mean_neg},           {"mean_pos", m.mean_pos},
                         {"var_neg", m.var_neg},             {"var_pos", m.var_pos}};
      break;
    }
    case LearnerKind::gbdt: {
      const auto& m = std::get<GbdtModel>(impl_);
      j["hyperparameters"] = {{"n_trees", spec.gbdt.n_trees},
                              {"max_depth", spec.gbdt.max_depth},
                              {"learning_rate", spec.gbdt.learning_rate},
                              {"min_leaf", spec.gbdt.min_leaf}};
      auto trees = nlohmann::json::array();
      for (const auto& tree : m.trees) {
        auto nodes = nlohmann::json::array();
        for (const auto& node : tree.nodes) {
          nodes.push_back({{"feature", node.feature},
                           {"threshold", node.threshold},
                           {"left", node.left},
                           {"right", node.right},
                           {"value", node.value}});
        }
        trees.push_back(std::move(nodes));
      }
      j["parameters"] = {{"base_probability", m.base_probability},
                         {"base_raw", m.base_raw},
                         {"trees", std::move(trees)}};
      break;
    }
  }
  return j.dump();
}

}  // namespace timesplit
