// Shared mesh fixtures for the test suites.
#pragma once

#include "symdis/mesh.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace fixtures {

using symdis::TriMesh;
using symdis::Vec3;

// Unit square in the z=0 plane split along the 0-2 diagonal.
inline TriMesh unit_square() {
  TriMesh m;
  m.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

// Flat grid on z=0 spanning [0,w] x [0,h] with nx*ny vertices.
inline TriMesh flat_grid(int nx, int ny, double w = 1.0, double h = 1.0) {
  TriMesh m;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      m.positions.emplace_back(w * i / (nx - 1), h * j / (ny - 1), 0.0);
  auto idx = [nx](int i, int j) { return j * nx + i; };
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      m.faces.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
      m.faces.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
    }
  return m;
}

// Path v0..vk with unit edges on a straight line; each consecutive pair
// forms a triangle with a distant apex so the edge graph contains the path
// edges plus long spokes that never shorten a path.
inline TriMesh unit_path(int k, double apex_height = 100.0) {
  TriMesh m;
  for (int i = 0; i <= k; ++i) m.positions.emplace_back(double(i), 0.0, 0.0);
  m.positions.emplace_back(0.5 * k, apex_height, 0.0);
  int apex = k + 1;
  for (int i = 0; i < k; ++i) m.faces.push_back({i, i + 1, apex});
  return m;
}

// Icosphere: subdivided icosahedron projected to the unit sphere.
inline TriMesh icosphere(int subdivisions) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (Vec3& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 v = (verts[size_t(a)] + verts[size_t(b)]).normalized();
      verts.push_back(v);
      int idx = int(verts.size()) - 1;
      midpoint[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& f : faces) {
      int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  TriMesh m;
  m.positions = std::move(verts);
  m.faces = std::move(faces);
  return m;
}

}  // namespace fixtures
