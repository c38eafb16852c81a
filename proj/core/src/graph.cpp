#include "timesplit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "timesplit/csv.hpp"
#include "timesplit/error.hpp"

namespace timesplit {

namespace {

// Left-right (de Fraysseix / Rosenstiehl) planarity criterion. Structure
// follows Brandes' formulation: an orientation DFS computes lowpoints and a
// nesting order, a second DFS maintains a stack of conflict pairs of return
// edge intervals; the graph is planar iff no merge step forces two return
// edges onto the same side.
class LrPlanarity {
 public:
  LrPlanarity(int n, std::span<const std::pair<int, int>> edges) : n_(n) {
    const std::size_t m = edges.size();
    adj_.resize(n_);
    src_.resize(m, -1);
    dst_.resize(m, -1);
    oriented_.resize(m, false);
    lowpt_.resize(m, 0);
    lowpt2_.resize(m, 0);
    nesting_depth_.resize(m, 0);
    ref_.resize(m, -1);
    lowpt_edge_.resize(m, -1);
    stack_bottom_.resize(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      adj_[edges[i].first].emplace_back(edges[i].second, static_cast<int>(i));
      adj_[edges[i].second].emplace_back(edges[i].first, static_cast<int>(i));
    }
    height_.resize(n_, -1);
    parent_edge_.resize(n_, -1);
  }

  bool planar() {
    for (int root = 0; root < n_; ++root) {
      if (height_[root] != -1) continue;
      height_[root] = 0;
      dfs_orient(root);
    }
    ordered_out_.resize(n_);
    for (int v = 0; v < n_; ++v) {
      for (auto [w, id] : adj_[v]) {
        (void)w;
        if (src_[id] == v) ordered_out_[v].push_back(id);
      }
      std::stable_sort(ordered_out_[v].begin(), ordered_out_[v].end(),
                       [&](int a, int b) { return nesting_depth_[a] < nesting_depth_[b]; });
    }
    for (int root = 0; root < n_; ++root) {
      if (parent_edge_[root] == -1 && height_[root] == 0) {
        if (!dfs_test(root)) return false;
      }
    }
    return true;
  }

 private:
  struct Interval {
    int low = -1, high = -1;
    bool empty() const { return low == -1 && high == -1; }
  };
  struct ConflictPair {
    Interval left, right;
  };

  int n_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
  std::vector<int> src_, dst_;
  std::vector<char> oriented_;
  std::vector<int> lowpt_, lowpt2_, nesting_depth_, ref_, lowpt_edge_;
  std::vector<std::size_t> stack_bottom_;
  std::vector<int> height_, parent_edge_;
  std::vector<std::vector<int>> ordered_out_;
  std::vector<ConflictPair> stack_;

  void dfs_orient(int v) {
    const int e = parent_edge_[v];
    for (auto [w, id] : adj_[v]) {
      if (oriented_[id]) continue;
      oriented_[id] = true;
      src_[id] = v;
      dst_[id] = w;
      lowpt_[id] = height_[v];
      lowpt2_[id] = height_[v];
      if (height_[w] == -1) {  // tree edge
        parent_edge_[w] = id;
        height_[w] = height_[v] + 1;
        dfs_orient(w);
      } else {  // back edge
        lowpt_[id] = height_[w];
      }
      nesting_depth_[id] = 2 * lowpt_[id] + (lowpt2_[id] < height_[v] ? 1 : 0);
      if (e != -1) {
        if (lowpt_[id] < lowpt_[e]) {
          lowpt2_[e] = std::min(lowpt_[e], lowpt2_[id]);
          lowpt_[e] = lowpt_[id];
        } else if (lowpt_[id] > lowpt_[e]) {
          lowpt2_[e] = std::min(lowpt2_[e], lowpt_[id]);
        } else {
          lowpt2_[e] = std::min(lowpt2_[e], lowpt2_[id]);
        }
      }
    }
  }

  bool conflicting(const Interval& interval, int b) const {
    return !interval.empty() && lowpt_[interval.high] > lowpt_[b];
  }

  int lowest(const ConflictPair& pair) const {
    if (pair.left.empty()) return lowpt_[pair.right.low];
    if (pair.right.empty()) return lowpt_[pair.left.low];
    return std::min(lowpt_[pair.left.low], lowpt_[pair.right.low]);
  }

  bool dfs_test(int v) {
    const int e = parent_edge_[v];
    bool first_edge = true;
    for (int id : ordered_out_[v]) {
      stack_bottom_[id] = stack_.size();
      const int w = dst_[id];
      if (id == parent_edge_[w]) {  // tree edge
        if (!dfs_test(w)) return false;
      } else {  // back edge
        lowpt_edge_[id] = id;
        ConflictPair pair;
        pair.right = Interval{id, id};
        stack_.push_back(pair);
      }
      if (lowpt_[id] < height_[v]) {  // id has a return edge below v
        if (first_edge) {
          lowpt_edge_[e] = lowpt_edge_[id];
        } else if (!add_constraints(id, e)) {
          return false;
        }
      }
      first_edge = false;
    }
    if (e != -1) trim_back_edges(src_[e]);
    return true;
  }

  bool add_constraints(int ei, int e) {
    ConflictPair merged;
    // Merge the return edges of ei into the right interval.
    do {
      ConflictPair q = stack_.back();
      stack_.pop_back();
      if (!q.left.empty()) std::swap(q.left, q.right);
      if (!q.left.empty()) return false;  // interlocked on both sides
      if (lowpt_[q.right.low] > lowpt_[e]) {
        if (merged.right.empty()) {
          merged.right = q.right;
        } else {
          ref_[merged.right.low] = q.right.high;
        }
        merged.right.low = q.right.low;
      } else {  // align under e
        ref_[q.right.low] = lowpt_edge_[e];
      }
    } while (stack_.size() != stack_bottom_[ei]);

    // Merge the conflicting return edges of earlier siblings into the left.
    while (!stack_.empty() &&
           (conflicting(stack_.back().left, ei) || conflicting(stack_.back().right, ei))) {
      ConflictPair q = stack_.back();
      stack_.pop_back();
      if (conflicting(q.right, ei)) std::swap(q.left, q.right);
      if (conflicting(q.right, ei)) return false;
      if (merged.right.low != -1) ref_[merged.right.low] = q.right.high;
      if (q.right.low != -1) merged.right.low = q.right.low;
      if (merged.left.empty()) {
        merged.left = q.left;
      } else {
        ref_[merged.left.low] = q.left.high;
      }
      merged.left.low = q.left.low;
    }
    if (!(merged.left.empty() && merged.right.empty())) stack_.push_back(merged);
    return true;
  }

  void trim_back_edges(int u) {
    while (!stack_.empty() && lowest(stack_.back()) == height_[u]) {
      stack_.pop_back();
    }
    if (stack_.empty()) return;
    ConflictPair pair = stack_.back();
    stack_.pop_back();
    while (pair.left.high != -1 && dst_[pair.left.high] == u) {
      pair.left.high = ref_[pair.left.high];
    }
    if (pair.left.high == -1 && pair.left.low != -1) {
      ref_[pair.left.low] = pair.right.low;
      pair.left.low = -1;
    }
    while (pair.right.high != -1 && dst_[pair.right.high] == u) {
      pair.right.high = ref_[pair.right.high];
    }
    if (pair.right.high == -1 && pair.right.low != -1) {
      ref_[pair.right.low] = pair.left.low;
      pair.right.low = -1;
    }
    stack_.push_back(pair);
  }
};

}  // namespace

bool is_planar(int n_vertices, std::span<const std::pair<int, int>> edges) {
  if (n_vertices < 0) throw Error("is_planar: negative vertex count");
  if (n_vertices >= 3 && edges.size() > static_cast<std::size_t>(3 * n_vertices - 6)) {
    return false;  // Euler bound
  }
  if (n_vertices <= 2) return true;
  LrPlanarity test(n_vertices, edges);
  return test.planar();
}

WeightedGraph pmfg_construct(const Matrix& similarity) {
  const std::size_t n = similarity.rows();
  if (similarity.cols() != n) throw Error("pmfg_construct: matrix is not square");
  if (n < 3) throw Error("pmfg_construct: need at least 3 nodes");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = similarity(i, j), b = similarity(j, i);
      if (a != b && !(std::isnan(a) && std::isnan(b))) {
        throw Error("pmfg_construct: matrix is not symmetric");
      }
    }
  }

  std::vector<WeightedEdge> candidates;
  candidates.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = similarity(i, j);
      if (std::isnan(w)) continue;
      candidates.push_back({static_cast<int>(i), static_cast<int>(j), w});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const WeightedEdge& x, const WeightedEdge& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  const std::size_t target = 3 * (n - 2);
  WeightedGraph graph;
  graph.n = static_cast<int>(n);
  std::vector<std::pair<int, int>> accepted;
  accepted.reserve(target + 1);
  for (const WeightedEdge& edge : candidates) {
    if (accepted.size() == target) break;
    accepted.emplace_back(edge.a, edge.b);
    if (is_planar(graph.n, accepted)) {
      graph.edges.push_back(edge);
    } else {
      accepted.pop_back();
    }
  }
  return graph;
}

std::vector<std::vector<int>> all_pairs_hops(const WeightedGraph& graph) {
  std::vector<std::vector<int>> adjacency(graph.n);
  for (const auto& e : graph.edges) {
    adjacency[e.a].push_back(e.b);
    adjacency[e.b].push_back(e.a);
  }
  std::vector<std::vector<int>> hops(graph.n, std::vector<int>(graph.n, -1));
  std::deque<int> queue;
  for (int start = 0; start < graph.n; ++start) {
    auto& row = hops[start];
    row[start] = 0;
    queue.clear();
    queue.push_back(start);
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int w : adjacency[v]) {
        if (row[w] == -1) {
          row[w] = row[v] + 1;
          queue.push_back(w);
        }
      }
    }
  }
  return hops;
}

void write_edge_list_csv(const std::filesystem::path& path, const WeightedGraph& graph,
                         std::span<const std::string> node_names) {
  csv::Table table;
  table.header = {"node_i", "node_j", "weight"};
  auto name_of = [&](int v) {
    return node_names.empty() ? std::to_string(v) : node_names[static_cast<std::size_t>(v)];
  };
  for (const auto& e : graph.edges) {
    table.rows.push_back({name_of(e.a), name_of(e.b), csv::format_double(e.weight)});
  }
  csv::write_file(path, table);
}

}  // namespace timesplit
