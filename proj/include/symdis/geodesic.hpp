// Geodesic distances approximated by Dijkstra shortest paths on the mesh
// edge graph with Euclidean edge lengths.
#pragma once

#include "symdis/mesh.hpp"

#include <limits>
#include <queue>
#include <vector>

namespace symdis {

// Distances from `source` to every vertex; unreachable vertices get +inf.
inline std::vector<double> geodesic_from(const TriMesh& mesh, const EdgeSets& edges,
                                         int source) {
  const int n = mesh.vertex_count();
  require(source >= 0 && source < n,
          "geodesic_from: source " + std::to_string(source) + " outside [0, " +
              std::to_string(n) + ")");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(size_t(n), kInf);
  dist[size_t(source)] = 0.0;
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[size_t(v)]) continue;
    for (int nb : edges.neighbors[size_t(v)]) {
      double cand = d + (mesh.positions[size_t(v)] - mesh.positions[size_t(nb)]).norm();
      if (cand < dist[size_t(nb)]) {
        dist[size_t(nb)] = cand;
        queue.emplace(cand, nb);
      }
    }
  }
  return dist;
}

inline std::vector<double> geodesic_from(const TriMesh& mesh, int source) {
  return geodesic_from(mesh, build_edges(mesh), source);
}

}  // namespace symdis
