#include "timesplit/chemspace.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "timesplit/error.hpp"
#include "timesplit/math_util.hpp"

namespace timesplit {

Matrix standardize_columns(const Matrix& X) {
  const std::size_t n = X.rows(), d = X.cols();
  Matrix Z(n, d);
  for (std::size_t j = 0; j < d; ++j) {
    std::size_t defined = 0;
    double sum = pairwise_sum(n, [&](std::size_t i) {
      const double v = X(i, j);
      if (is_missing(v)) return 0.0;
      ++defined;
      return v;
    });
    const double mean = defined ? sum / static_cast<double>(defined) : 0.0;
    double ss = pairwise_sum(n, [&](std::size_t i) {
      const double v = X(i, j);
      if (is_missing(v)) return 0.0;
      const double c = v - mean;
      return c * c;
    });
    const double sd = defined ? std::sqrt(ss / static_cast<double>(defined)) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = X(i, j);
      Z(i, j) = (is_missing(v) || sd == 0.0) ? 0.0 : (v - mean) / sd;
    }
  }
  return Z;
}

RowCorrelation row_correlation_matrix(const Matrix& standardized) {
  const std::size_t n = standardized.rows(), d = standardized.cols();
  RowCorrelation out;
  out.matrix = Matrix(n, n);

  // Row-centered, unit-norm copies; correlation reduces to a dot product.
  Matrix centered(n, d);
  std::vector<bool> constant(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += standardized(i, j);
    mean /= static_cast<double>(d);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = standardized(i, j) - mean;
      centered(i, j) = c;
      norm2 += c * c;
    }
    if (norm2 == 0.0) {
      constant[i] = true;
      out.constant_rows.push_back(static_cast<int>(i));
      continue;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t j = 0; j < d; ++j) centered(i, j) *= inv;
  }

  for (std::size_t i = 0; i < n; ++i) {
    out.matrix(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double r = 0.0;
      if (!constant[i] && !constant[j]) {
        for (std::size_t k = 0; k < d; ++k) r += centered(i, k) * centered(j, k);
        r = std::clamp(r, -1.0, 1.0);
      }
      out.matrix(i, j) = r;
      out.matrix(j, i) = r;
    }
  }
  return out;
}

CorrelationDistances correlation_distance_matrix(const Matrix& standardized) {
  RowCorrelation corr = row_correlation_matrix(standardized);
  CorrelationDistances out;
  out.constant_rows = std::move(corr.constant_rows);
  const std::size_t n = corr.matrix.rows();
  out.matrix = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.matrix(i, j) = i == j ? 0.0 : 1.0 - corr.matrix(i, j);
    }
  }
  return out;
}

PcaResult pca_embed(const Matrix& X, int n_components) {
  const std::size_t n = X.rows(), d = X.cols();
  if (n_components <= 0) throw Error("pca_embed: n_components must be > 0");
  if (static_cast<std::size_t>(n_components) > std::min(n, d)) {
    throw Error("pca_embed: n_components exceeds min(rows, cols)");
  }
  if (n < 2) throw Error("pca_embed: need at least 2 rows");

  // Column means; covariance of the centered data.
  Eigen::MatrixXd centered(n, d);
  for (std::size_t j = 0; j < d; ++j) {
    const double mean =
        pairwise_sum(n, [&](std::size_t i) { return X(i, j); }) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centered(i, j) = X(i, j) - mean;
  }
  Eigen::MatrixXd covariance =
      (centered.transpose() * centered) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success) throw Error("pca_embed: eigendecomposition failed");
  const Eigen::VectorXd eigenvalues = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd eigenvectors = solver.eigenvectors();

  const double total_variance = std::max(eigenvalues.sum(), 0.0);
  PcaResult result;
  result.scores = Matrix(n, static_cast<std::size_t>(n_components));
  result.explained_variance_fraction.resize(n_components, 0.0);
  if (total_variance <= 0.0) {
    result.degenerate = true;
    return result;  // all-zero scores
  }

  Eigen::MatrixXd components(d, n_components);
  for (int c = 0; c < n_components; ++c) {
    Eigen::VectorXd v = eigenvectors.col(static_cast<int>(d) - 1 - c);
    // Sign convention: the largest-magnitude loading is positive.
    int arg_max = 0;
    for (int k = 1; k < v.size(); ++k) {
      if (std::abs(v[k]) > std::abs(v[arg_max])) arg_max = k;
    }
    if (v[arg_max] < 0.0) v = -v;
    components.col(c) = v;
    result.explained_variance_fraction[c] =
        std::max(eigenvalues[static_cast<int>(d) - 1 - c], 0.0) / total_variance;
  }
  Eigen::MatrixXd scores = centered * components;
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < n_components; ++c) result.scores(i, c) = scores(i, c);
  }
  return result;
}

GroupedValues group_pair_values(const Matrix& pairwise, const std::vector<bool>& is_test) {
  if (pairwise.rows() != is_test.size()) throw Error("group_pair_values: mask length mismatch");
  GroupedValues out;
  for (std::size_t i = 0; i < pairwise.rows(); ++i) {
    for (std::size_t j = i + 1; j < pairwise.cols(); ++j) {
      const double v = pairwise(i, j);
      if (is_test[i] != is_test[j]) {
        out.cross.push_back(v);
      } else if (is_test[i]) {
        out.within_test.push_back(v);
      } else {
        out.within_train.push_back(v);
      }
    }
  }
  return out;
}

GroupedValues group_pair_hops(const std::vector<std::vector<int>>& hops,
                              const std::vector<bool>& is_test) {
  if (hops.size() != is_test.size()) throw Error("group_pair_hops: mask length mismatch");
  GroupedValues out;
  for (std::size_t i = 0; i < hops.size(); ++i) {
    for (std::size_t j = i + 1; j < hops.size(); ++j) {
      const double v = static_cast<double>(hops[i][j]);
      if (is_test[i] != is_test[j]) {
        out.cross.push_back(v);
      } else if (is_test[i]) {
        out.within_test.push_back(v);
      } else {
        out.within_train.push_back(v);
      }
    }
  }
  return out;
}

}  // namespace timesplit
