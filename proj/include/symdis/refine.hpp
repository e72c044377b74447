// Binary MRF refinement of the symmetry channel, solved exactly by s-t
// minimum cut. Unaries come from the min-max-normalized chi, every mesh
// edge carries a constant Potts weight.
#pragma once

#include "symdis/maxflow.hpp"
#include "symdis/mesh.hpp"

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace symdis {

struct MrfInstance {
  std::vector<std::array<double, 2>> unary;   // per vertex: cost of label 0, 1
  std::vector<std::pair<int, int>> edges;     // undirected
  double pairwise_weight = 1.0;               // Potts cost for disagreeing labels
};

struct BinaryLabeling {
  std::vector<std::uint8_t> labels;
  double energy = 0.0;
};

// Min-max normalize chi (constant fields map to all 0.5), then
// theta_v(0) = chi_v, theta_v(1) = 1 - chi_v, with weight omega per edge.
inline MrfInstance build_instance(const std::vector<double>& chi, const TriMesh& mesh,
                                  double omega = 1.0) {
  require(omega >= 0.0, "build_instance: pairwise weight must be >= 0");
  require(int(chi.size()) == mesh.vertex_count(),
          "build_instance: chi length " + std::to_string(chi.size()) + " vs " +
              std::to_string(mesh.vertex_count()) + " vertices");
  MrfInstance inst;
  inst.pairwise_weight = omega;
  inst.edges = build_edges(mesh).undirected;
  double lo = chi[0], hi = chi[0];
  for (double v : chi) {
    require(std::isfinite(v), "build_instance: non-finite chi value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  inst.unary.resize(chi.size());
  for (size_t v = 0; v < chi.size(); ++v) {
    double x = hi > lo ? (chi[v] - lo) / (hi - lo) : 0.5;
    inst.unary[v] = {x, 1.0 - x};
  }
  return inst;
}

inline double mrf_energy(const MrfInstance& inst, const std::vector<std::uint8_t>& labels) {
  require(labels.size() == inst.unary.size(),
          "mrf_energy: labeling length " + std::to_string(labels.size()) + " vs " +
              std::to_string(inst.unary.size()) + " vertices");
  double e = 0.0;
  for (size_t v = 0; v < labels.size(); ++v) {
    require(labels[v] <= 1, "mrf_energy: labels must be 0 or 1");
    e += inst.unary[v][labels[v]];
  }
  for (auto [u, v] : inst.edges)
    if (labels[size_t(u)] != labels[size_t(v)]) e += inst.pairwise_weight;
  return e;
}

// Globally optimal labeling. The pairwise term is Potts on binary labels,
// hence submodular and exactly solvable by min-cut. Among multiple optima
// this returns the one with the maximal label-0 set (source->v carries
// theta_v(0), v->sink carries theta_v(1); label 1 = source side), which is
// also the lexicographically smallest optimum.
inline BinaryLabeling solve_mrf(const MrfInstance& inst) {
  const int n = int(inst.unary.size());
  MaxFlowGraph g(n);
  for (int v = 0; v < n; ++v) {
    g.add_edge(g.source(), v, inst.unary[size_t(v)][0]);
    g.add_edge(v, g.sink(), inst.unary[size_t(v)][1]);
  }
  for (auto [u, v] : inst.edges)
    g.add_edge(u, v, inst.pairwise_weight, inst.pairwise_weight);
  g.solve();
  BinaryLabeling out;
  out.labels.resize(size_t(n));
  for (int v = 0; v < n; ++v) out.labels[size_t(v)] = g.source_side(v) ? 1 : 0;
  // recompute from the instance; flow values carry rounding noise
  out.energy = mrf_energy(inst, out.labels);
  return out;
}

}  // namespace symdis
