#ifndef RDLMPC_GRAPH_HPP_
#define RDLMPC_GRAPH_HPP_

#include <algorithm>
#include <deque>
#include <utility>
#include <vector>

#include "rdlmpc/types.hpp"

namespace rdlmpc {

//! Directed interconnection topology between subsystems.
//!
//! An edge i -> j means subsystem i influences subsystem j in one step.
//! All pairwise hop distances are computed once by BFS and cached; the
//! topology is immutable afterwards.
class InterconnectionGraph {
 public:
  InterconnectionGraph() = default;

  InterconnectionGraph(int n_vertices,
                       const std::vector<std::pair<int, int>>& edges)
      : n_(n_vertices), out_adj_(n_vertices), in_adj_(n_vertices) {
    require(n_vertices >= 1, "graph needs at least one vertex");
    for (auto [a, b] : edges) {
      check_vertex(a);
      check_vertex(b);
      if (a == b) continue;
      out_adj_[a].push_back(b);
      in_adj_[b].push_back(a);
    }
    for (auto& v : out_adj_) dedup(v);
    for (auto& v : in_adj_) dedup(v);
    dist_.assign(n_, std::vector<int>(n_, -1));
    for (int s = 0; s < n_; ++s) bfs(s);
  }

  int size() const { return n_; }

  //! Hop distance from i to j; -1 when unreachable.
  int distance(int from, int to) const {
    check_vertex(from);
    check_vertex(to);
    return dist_[from][to];
  }

  //! Vertices reachable from i within d hops (always contains i).
  std::vector<int> out_set(int i, int d) const {
    check_vertex(i);
    require(d >= 0, "locality radius must be nonnegative");
    std::vector<int> out;
    for (int j = 0; j < n_; ++j)
      if (dist_[i][j] >= 0 && dist_[i][j] <= d) out.push_back(j);
    return out;
  }

  //! Vertices that reach i within d hops (always contains i).
  std::vector<int> in_set(int i, int d) const {
    check_vertex(i);
    require(d >= 0, "locality radius must be nonnegative");
    std::vector<int> in;
    for (int j = 0; j < n_; ++j)
      if (dist_[j][i] >= 0 && dist_[j][i] <= d) in.push_back(j);
    return in;
  }

  const std::vector<int>& out_neighbors(int i) const {
    check_vertex(i);
    return out_adj_[i];
  }

  int diameter_upper_bound() const {
    int m = 0;
    for (const auto& row : dist_)
      for (int v : row) m = std::max(m, v);
    return m;
  }

 private:
  void check_vertex(int v) const {
    if (v < 0 || v >= n_) throw StructuralError("vertex id out of range");
  }

  static void dedup(std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  void bfs(int source) {
    std::deque<int> queue{source};
    dist_[source][source] = 0;
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      for (int w : out_adj_[v]) {
        if (dist_[source][w] < 0) {
          dist_[source][w] = dist_[source][v] + 1;
          queue.push_back(w);
        }
      }
    }
  }

  int n_ = 0;
  std::vector<std::vector<int>> out_adj_, in_adj_;
  std::vector<std::vector<int>> dist_;
};

//! d-incoming and d-outgoing sets of subsystem i, as (in, out).
inline std::pair<std::vector<int>, std::vector<int>> d_local_sets(
    const InterconnectionGraph& graph, int i, int d) {
  return {graph.in_set(i, d), graph.out_set(i, d)};
}

}  // namespace rdlmpc

#endif  // RDLMPC_GRAPH_HPP_
