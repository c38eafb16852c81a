#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "timesplit/matrix.hpp"

namespace timesplit {

struct WeightedEdge {
  int a = 0, b = 0;
  double weight = 0.0;
};

// Undirected compound-similarity network.
struct WeightedGraph {
  int n = 0;
  std::vector<WeightedEdge> edges;
};

// Left-right planarity criterion on a simple undirected graph.
bool is_planar(int n_vertices, std::span<const std::pair<int, int>> edges);

// Planar maximally filtered graph: scans candidate edges by weight
// (descending; ties by lower index pair) and keeps an edge whenever the graph
// stays planar, stopping at 3(n-2) accepted edges. The planarity test runs
// from scratch per candidate. Requires a symmetric matrix with n >= 3.
WeightedGraph pmfg_construct(const Matrix& similarity);

// Unweighted breadth-first hop counts; -1 marks unreachable pairs.
std::vector<std::vector<int>> all_pairs_hops(const WeightedGraph& graph);

// Edge list as CSV (node_i, node_j, weight), using names when provided.
void write_edge_list_csv(const std::filesystem::path& path, const WeightedGraph& graph,
                         std::span<const std::string> node_names = {});

}  // namespace timesplit
