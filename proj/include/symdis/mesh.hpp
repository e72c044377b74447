// Triangle mesh and the differential-geometry helpers built on its edge
// graph: adjacency, vertex normals, tangential cosines, tuple sets, surface
// area and labeling-aware connected components.
#pragma once

#include "symdis/autodiff.hpp"
#include "symdis/core.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace symdis {

struct TriMesh {
  std::vector<Vec3> positions;
  std::vector<std::array<int, 3>> faces;

  int vertex_count() const { return int(positions.size()); }
  int face_count() const { return int(faces.size()); }
};

// Throws ValidationError if face indices are out of range, a face repeats a
// vertex, or the mesh has fewer than 3 vertices.
inline void validate_mesh(const TriMesh& mesh) {
  const int n = mesh.vertex_count();
  require(n >= 3, "mesh: needs at least 3 vertices, has " + std::to_string(n));
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    for (int k = 0; k < 3; ++k)
      require(t[size_t(k)] >= 0 && t[size_t(k)] < n,
              "mesh: face " + std::to_string(f) + " references vertex " +
                  std::to_string(t[size_t(k)]) + " outside [0, " + std::to_string(n) + ")");
    require(t[0] != t[1] && t[1] != t[2] && t[0] != t[2],
            "mesh: face " + std::to_string(f) + " repeats a vertex");
  }
}

// Undirected edge set E plus, implicitly, the directed set with both
// orientations. Neighbor lists are sorted ascending for determinism.
struct EdgeSets {
  std::vector<std::pair<int, int>> undirected;   // u < v
  std::vector<std::vector<int>> neighbors;       // per vertex, ascending

  bool adjacent(int u, int v) const {
    const auto& nb = neighbors[size_t(u)];
    return std::binary_search(nb.begin(), nb.end(), v);
  }
  int directed_count() const { return 2 * int(undirected.size()); }
};

inline EdgeSets build_edges(const TriMesh& mesh) {
  validate_mesh(mesh);
  const int n = mesh.vertex_count();
  std::vector<std::pair<int, int>> all;
  all.reserve(mesh.faces.size() * 3);
  for (const auto& f : mesh.faces)
    for (int k = 0; k < 3; ++k) {
      int a = f[size_t(k)], b = f[size_t((k + 1) % 3)];
      all.emplace_back(std::min(a, b), std::max(a, b));
    }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  EdgeSets es;
  es.undirected = std::move(all);
  es.neighbors.assign(size_t(n), {});
  for (auto [u, v] : es.undirected) {
    es.neighbors[size_t(u)].push_back(v);
    es.neighbors[size_t(v)].push_back(u);
  }
  for (auto& nb : es.neighbors) std::sort(nb.begin(), nb.end());
  return es;
}

// Area-weighted average of incident face normals, unit length. Isolated
// vertices get the zero vector. Orientation follows face winding as stored.
inline std::vector<Vec3> vertex_normals(const TriMesh& mesh) {
  validate_mesh(mesh);
  std::vector<Vec3> normals(mesh.positions.size(), Vec3::Zero());
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.positions[size_t(f[0])];
    const Vec3& b = mesh.positions[size_t(f[1])];
    const Vec3& c = mesh.positions[size_t(f[2])];
    Vec3 an = 0.5 * (b - a).cross(c - a);  // magnitude = face area
    for (int k = 0; k < 3; ++k) normals[size_t(f[size_t(k)])] += an;
  }
  for (Vec3& nv : normals) {
    double len = nv.norm();
    nv = len > kNormEps ? Vec3(nv / len) : Vec3::Zero();
  }
  return normals;
}

inline double surface_area(const TriMesh& mesh) {
  double area = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.positions[size_t(f[0])];
    const Vec3& b = mesh.positions[size_t(f[1])];
    const Vec3& c = mesh.positions[size_t(f[2])];
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  return area;
}

namespace detail {
// Cosine between the projected incoming direction (v - u_proj) and outgoing
// direction (w_proj - v) after projecting both neighbors into v's tangent
// plane. Degenerate projected edges give 0.
inline double tangential_cosine_with_normal(const TriMesh& mesh, const Vec3& normal,
                                            int u, int v, int w) {
  const Vec3& pv = mesh.positions[size_t(v)];
  Vec3 du = mesh.positions[size_t(u)] - pv;
  Vec3 dw = mesh.positions[size_t(w)] - pv;
  Vec3 a = du - normal.dot(du) * normal;   // projected u - v
  Vec3 b = dw - normal.dot(dw) * normal;   // projected w - v
  double na = a.norm(), nb = b.norm();
  if (na <= kNormEps || nb <= kNormEps) return 0.0;
  return (-a).dot(b) / (na * nb);
}
}  // namespace detail

// Tangential cosine similarity C_v(u, w) between the incoming edge (u, v)
// and outgoing edge (v, w). Requires both directed edges to exist.
inline double tangential_cosine(const TriMesh& mesh, int u, int v, int w) {
  EdgeSets es = build_edges(mesh);
  require(es.adjacent(u, v) && es.adjacent(v, w),
          "tangential_cosine: (" + std::to_string(u) + "," + std::to_string(v) +
              ") and (" + std::to_string(v) + "," + std::to_string(w) +
              ") must both be edges");
  // Only v's own normal matters; derive it from the full normal field.
  std::vector<Vec3> normals = vertex_normals(mesh);
  return detail::tangential_cosine_with_normal(mesh, normals[size_t(v)], u, v, w);
}

// Per vertex v: all ordered neighbor pairs (u, w), u = w included, each with
// its precomputed tangential cosine. This is the tuple set S_v of the
// boundary loss; cosines depend on geometry only.
inline ad::TupleTable build_tuple_table(const TriMesh& mesh) {
  EdgeSets es = build_edges(mesh);
  std::vector<Vec3> normals = vertex_normals(mesh);
  ad::TupleTable table;
  const int n = mesh.vertex_count();
  table.offset.assign(size_t(n) + 1, 0);
  for (int v = 0; v < n; ++v) {
    int deg = int(es.neighbors[size_t(v)].size());
    table.offset[size_t(v) + 1] = table.offset[size_t(v)] + deg * deg;
  }
  table.entries.resize(size_t(table.offset.back()));
  int k = 0;
  for (int v = 0; v < n; ++v)
    for (int u : es.neighbors[size_t(v)])
      for (int w : es.neighbors[size_t(v)]) {
        table.entries[size_t(k)].u = u;
        table.entries[size_t(k)].w = w;
        table.entries[size_t(k)].cosine =
            detail::tangential_cosine_with_normal(mesh, normals[size_t(v)], u, v, w);
        ++k;
      }
  return table;
}

// Number of maximal edge-connected vertex sets with uniform label, counted
// on an explicit edge graph. Isolated vertices are their own component.
inline int connected_components_on_edges(int vertex_count,
                                         const std::vector<std::pair<int, int>>& edges,
                                         const std::vector<int>& labels) {
  require(int(labels.size()) == vertex_count,
          "connected_components: labeling length " + std::to_string(labels.size()) +
              " vs " + std::to_string(vertex_count) + " vertices");
  std::vector<std::vector<int>> adj(static_cast<size_t>(vertex_count));
  for (auto [u, v] : edges)
    if (labels[size_t(u)] == labels[size_t(v)]) {
      adj[size_t(u)].push_back(v);
      adj[size_t(v)].push_back(u);
    }
  std::vector<char> seen(size_t(vertex_count), 0);
  int components = 0;
  std::vector<int> stack;
  for (int s = 0; s < vertex_count; ++s) {
    if (seen[size_t(s)]) continue;
    ++components;
    stack.push_back(s);
    seen[size_t(s)] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int nb : adj[size_t(v)])
        if (!seen[size_t(nb)]) {
          seen[size_t(nb)] = 1;
          stack.push_back(nb);
        }
    }
  }
  return components;
}

inline int connected_components(const TriMesh& mesh, const std::vector<int>& labels) {
  EdgeSets es = build_edges(mesh);
  return connected_components_on_edges(mesh.vertex_count(), es.undirected, labels);
}

}  // namespace symdis
