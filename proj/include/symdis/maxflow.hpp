// s-t maximum flow on sparse graphs (Dinic's algorithm, double capacities).
// Used for exact binary MRF minimization; exactness matters, speed does not.
#pragma once

#include "symdis/core.hpp"

#include <algorithm>
#include <queue>
#include <vector>

namespace symdis {

class MaxFlowGraph {
 public:
  // Node ids: 0..n-1 are regular nodes, n is the source, n+1 the sink.
  explicit MaxFlowGraph(int n) : n_(n), head_(size_t(n) + 2, -1) {}

  int source() const { return n_; }
  int sink() const { return n_ + 1; }

  void add_edge(int u, int v, double cap_uv, double cap_vu = 0.0) {
    require(cap_uv >= 0 && cap_vu >= 0, "maxflow: negative capacity");
    push_arc(u, v, cap_uv);
    push_arc(v, u, cap_vu);
  }

  // Returns the max-flow value.
  double solve() {
    double flow = 0.0;
    while (bfs_levels()) {
      iter_ = head_;
      double f;
      while ((f = dfs_push(source(), kInf)) > 0.0) flow += f;
    }
    return flow;
  }

  // Valid after solve(): true if v is reachable from the source in the
  // residual graph (v is then on the source side of the minimum cut).
  bool source_side(int v) const { return level_[size_t(v)] >= 0; }

 private:
  static constexpr double kInf = 1e300;
  static constexpr double kEps = 1e-12;

  struct Arc {
    int to;
    int next;
    double cap;
  };

  void push_arc(int u, int v, double cap) {
    arcs_.push_back({v, head_[size_t(u)], cap});
    head_[size_t(u)] = int(arcs_.size()) - 1;
  }

  bool bfs_levels() {
    level_.assign(head_.size(), -1);
    std::queue<int> q;
    level_[size_t(source())] = 0;
    q.push(source());
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int a = head_[size_t(v)]; a >= 0; a = arcs_[size_t(a)].next) {
        const Arc& arc = arcs_[size_t(a)];
        if (arc.cap > kEps && level_[size_t(arc.to)] < 0) {
          level_[size_t(arc.to)] = level_[size_t(v)] + 1;
          q.push(arc.to);
        }
      }
    }
    return level_[size_t(sink())] >= 0;
  }

  double dfs_push(int v, double limit) {
    if (v == sink()) return limit;
    for (int& a = iter_[size_t(v)]; a >= 0; a = arcs_[size_t(a)].next) {
      Arc& arc = arcs_[size_t(a)];
      if (arc.cap <= kEps || level_[size_t(arc.to)] != level_[size_t(v)] + 1) continue;
      double pushed = dfs_push(arc.to, std::min(limit, arc.cap));
      if (pushed > 0.0) {
        arc.cap -= pushed;
        arcs_[size_t(a ^ 1)].cap += pushed;
        return pushed;
      }
    }
    level_[size_t(v)] = -1;  // dead end in this phase
    return 0.0;
  }

  int n_;
  std::vector<int> head_;
  std::vector<int> iter_;
  std::vector<int> level_;
  std::vector<Arc> arcs_;
};

}  // namespace symdis
