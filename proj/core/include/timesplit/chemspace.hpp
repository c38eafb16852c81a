#pragma once

#include <span>
#include <vector>

#include "timesplit/matrix.hpp"

namespace timesplit {

// Column z-scores with missing cells replaced by zero afterwards (a missing
// standardized value and the column mean coincide). Zero-spread columns map
// to zero.
Matrix standardize_columns(const Matrix& X);

// Pearson correlation between rows of a standardized matrix. Rows with zero
// spread are flagged; their correlations are defined as 0.
struct RowCorrelation {
  Matrix matrix;                    // symmetric, unit diagonal
  std::vector<int> constant_rows;   // flagged degenerate rows
};
RowCorrelation row_correlation_matrix(const Matrix& standardized);

// d(i, j) = 1 - Pearson(row_i, row_j); distances to constant rows are 1.
struct CorrelationDistances {
  Matrix matrix;                    // symmetric, zero diagonal
  std::vector<int> constant_rows;
};
CorrelationDistances correlation_distance_matrix(const Matrix& standardized);

// Principal components of the column covariance (sample covariance, n-1).
// Deterministic sign: the largest-magnitude loading of each component is
// positive. Degenerate (zero variance) input yields all-zero scores.
struct PcaResult {
  Matrix scores;                              // rows x n_components
  std::vector<double> explained_variance_fraction;  // non-increasing
  bool degenerate = false;
};
PcaResult pca_embed(const Matrix& X, int n_components = 2);

// Pairwise values split by split membership, upper triangle only.
struct GroupedValues {
  std::vector<double> within_train;
  std::vector<double> within_test;
  std::vector<double> cross;
};
GroupedValues group_pair_values(const Matrix& pairwise, const std::vector<bool>& is_test);
GroupedValues group_pair_hops(const std::vector<std::vector<int>>& hops,
                              const std::vector<bool>& is_test);  // -1 kept as -1

}  // namespace timesplit
