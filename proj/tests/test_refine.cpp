#include "symdis/refine.hpp"
#include "symdis/rng.hpp"
#include "symdis/synthetic.hpp"

#include "fixtures.hpp"

#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

using namespace symdis;

namespace {

// Exhaustive minimum over all 2^n labelings.
std::pair<double, std::vector<std::uint8_t>> brute_force(const MrfInstance& inst) {
  const int n = int(inst.unary.size());
  double best = 1e300;
  std::vector<std::uint8_t> best_labels;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<std::uint8_t> labels(static_cast<size_t>(n));
    for (int v = 0; v < n; ++v) labels[size_t(v)] = (mask >> v) & 1u;
    double e = mrf_energy(inst, labels);
    if (e < best) {
      best = e;
      best_labels = labels;
    }
  }
  return {best, best_labels};
}

// Random sparse instance on up to max_n vertices.
MrfInstance random_instance(Rng& rng, int max_n, double omega) {
  MrfInstance inst;
  int n = 2 + int(rng.uniform_int(std::uint64_t(max_n - 1)));
  inst.unary.resize(size_t(n));
  for (auto& u : inst.unary) u = {rng.uniform(), rng.uniform()};
  inst.pairwise_weight = omega;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.uniform() < 0.3) inst.edges.emplace_back(u, v);
  return inst;
}

}  // namespace

TEST_CASE("build_instance normalizes chi and fills potentials") {
  TriMesh mesh = fixtures::unit_path(2);  // 4 vertices: 3 path + apex
  SECTION("already-normalized chi is unchanged") {
    MrfInstance inst = build_instance({0.0, 1.0, 0.5, 0.25}, mesh, 1.0);
    REQUIRE(inst.unary[0][0] == 0.0);
    REQUIRE(inst.unary[0][1] == 1.0);
    REQUIRE(inst.unary[1][0] == 1.0);
    REQUIRE(inst.unary[1][1] == 0.0);
  }
  SECTION("constant chi maps to 0.5 everywhere") {
    MrfInstance inst = build_instance({0.7, 0.7, 0.7, 0.7}, mesh, 1.0);
    for (const auto& u : inst.unary) {
      REQUIRE(u[0] == 0.5);
      REQUIRE(u[1] == 0.5);
    }
  }
  SECTION("min-max rescaling by hand") {
    MrfInstance inst = build_instance({0.2, 0.8, 0.5, 0.2}, mesh, 1.0);
    REQUIRE(inst.unary[0][0] == Approx(0.0));
    REQUIRE(inst.unary[1][0] == Approx(1.0));
    REQUIRE(inst.unary[2][0] == Approx(0.5));
  }
}

TEST_CASE("solver returns all zeros when every unary favors 0") {
  MrfInstance inst;
  inst.unary = {{0, 1}, {0, 1}, {0, 1}};
  inst.edges = {{0, 1}, {1, 2}};
  BinaryLabeling sol = solve_mrf(inst);
  REQUIRE(sol.labels == std::vector<std::uint8_t>{0, 0, 0});
  REQUIRE(sol.energy == 0.0);
}

TEST_CASE("3-vertex path with chi 0,1,0 smooths the middle vertex") {
  MrfInstance inst;
  inst.unary = {{0, 1}, {1, 0}, {0, 1}};  // from normalized chi [0, 1, 0]
  inst.edges = {{0, 1}, {1, 2}};
  inst.pairwise_weight = 1.0;
  auto [best_energy, best_labels] = brute_force(inst);
  BinaryLabeling sol = solve_mrf(inst);
  REQUIRE(sol.labels == std::vector<std::uint8_t>{0, 0, 0});
  REQUIRE(sol.energy == 1.0);  // unary 1 for the middle, no boundary
  REQUIRE(sol.energy == best_energy);
  REQUIRE(best_labels == sol.labels);
}

TEST_CASE("solver energy equals brute force on random instances") {
  Rng rng(404);
  for (double omega : {0.1, 1.0, 5.0}) {
    for (int trial = 0; trial < 34; ++trial) {
      MrfInstance inst = random_instance(rng, 16, omega);
      BinaryLabeling sol = solve_mrf(inst);
      auto [best, labels] = brute_force(inst);
      REQUIRE(sol.energy == best);  // identical float sums, exact equality
      REQUIRE(mrf_energy(inst, sol.labels) == best);
    }
  }
}

TEST_CASE("solver energy dominates arbitrary candidate labelings") {
  Rng rng(505);
  for (int trial = 0; trial < 100; ++trial) {
    MrfInstance inst = random_instance(rng, 14, rng.uniform(0.0, 3.0));
    BinaryLabeling sol = solve_mrf(inst);
    for (int c = 0; c < 10; ++c) {
      std::vector<std::uint8_t> candidate(inst.unary.size());
      for (auto& l : candidate) l = std::uint8_t(rng.uniform_int(2));
      REQUIRE(sol.energy <= mrf_energy(inst, candidate));
    }
  }
}

TEST_CASE("uniform labelings pay no pairwise cost") {
  Rng rng(606);
  MrfInstance inst = random_instance(rng, 10, 2.0);
  std::vector<std::uint8_t> zeros(inst.unary.size(), 0), ones(inst.unary.size(), 1);
  double e0 = 0, e1 = 0;
  for (const auto& u : inst.unary) {
    e0 += u[0];
    e1 += u[1];
  }
  REQUIRE(mrf_energy(inst, zeros) == e0);
  REQUIRE(mrf_energy(inst, ones) == e1);
}

TEST_CASE("degenerate constant chi resolves to all zeros by tie-break") {
  TriMesh mesh = fixtures::flat_grid(3, 3);
  std::vector<double> chi(size_t(mesh.vertex_count()), 0.25);
  BinaryLabeling sol = solve_mrf(build_instance(chi, mesh, 1.0));
  for (auto l : sol.labels) REQUIRE(l == 0);
}

TEST_CASE("refinement removes isolated speckles the threshold keeps") {
  // a flat grid whose chi is bimodal with one flipped speckle in each half
  TriMesh mesh = fixtures::flat_grid(8, 4, 2.0, 1.0);
  const int n = mesh.vertex_count();
  std::vector<double> chi(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v)
    chi[size_t(v)] = mesh.positions[size_t(v)].x() < 1.0 ? 0.1 : 0.9;
  chi[9] = 0.9;   // speckles
  chi[22] = 0.1;
  MrfInstance inst = build_instance(chi, mesh, 1.0);
  BinaryLabeling refined = solve_mrf(inst);

  std::vector<std::uint8_t> threshold(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v) threshold[size_t(v)] = chi[size_t(v)] >= 0.5 ? 1 : 0;
  auto disagreements = [&](const std::vector<std::uint8_t>& labels) {
    int count = 0;
    for (auto [u, v] : inst.edges)
      if (labels[size_t(u)] != labels[size_t(v)]) ++count;
    return count;
  };
  REQUIRE(refined.energy <= mrf_energy(inst, threshold));
  REQUIRE(disagreements(refined.labels) < disagreements(threshold));
  // the speckles are gone
  REQUIRE(refined.labels[9] == refined.labels[8]);
  REQUIRE(refined.labels[22] == refined.labels[23]);

  std::vector<int> refined_int(refined.labels.begin(), refined.labels.end());
  std::vector<int> threshold_int(threshold.begin(), threshold.end());
  REQUIRE(connected_components(mesh, refined_int) <=
          connected_components(mesh, threshold_int));
}

TEST_CASE("equal-unary labelings tie-break toward fewer boundary edges") {
  // two mid-value vertices have equal cost for either label; the solver must
  // pick the assignment with fewer disagreeing edges than the 0.5-threshold
  TriMesh mesh = fixtures::flat_grid(8, 3, 2.0, 1.0);
  const int n = mesh.vertex_count();
  std::vector<double> chi(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v)
    chi[size_t(v)] = mesh.positions[size_t(v)].x() < 1.0 ? 0.0 : 1.0;
  chi[1] = 0.5;   // in the left half
  chi[14] = 0.5;  // in the right half
  MrfInstance inst = build_instance(chi, mesh, 1.0);
  BinaryLabeling refined = solve_mrf(inst);

  std::vector<std::uint8_t> threshold(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v) threshold[size_t(v)] = chi[size_t(v)] >= 0.5 ? 1 : 0;
  double unary = [&](const std::vector<std::uint8_t>& labels) {
    double u = 0;
    for (size_t v = 0; v < labels.size(); ++v) u += inst.unary[v][labels[v]];
    return u;
  }(threshold);
  double unary_refined = 0;
  for (size_t v = 0; v < refined.labels.size(); ++v)
    unary_refined += inst.unary[v][refined.labels[v]];
  REQUIRE(unary_refined == unary);  // both flips are free
  auto disagreements = [&](const std::vector<std::uint8_t>& labels) {
    int count = 0;
    for (auto [u, v] : inst.edges)
      if (labels[size_t(u)] != labels[size_t(v)]) ++count;
    return count;
  };
  REQUIRE(disagreements(refined.labels) <= disagreements(threshold));
  REQUIRE(refined.labels[1] == 0);  // matches its half instead of islanding
}

TEST_CASE("refinement never increases component counts on synthetic fixtures") {
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    SyntheticShape s = generate_synthetic(seed, 6, 8, 0.3);
    // noisy stand-in for a learned chirality field
    Rng rng(seed * 31);
    std::vector<double> chi(static_cast<size_t>(s.mesh.vertex_count()));
    for (int v = 0; v < s.mesh.vertex_count(); ++v)
      chi[size_t(v)] = std::tanh(4.0 * s.mesh.positions[size_t(v)].x()) + 0.4 * rng.normal();
    MrfInstance inst = build_instance(chi, s.mesh, 1.0);
    BinaryLabeling refined = solve_mrf(inst);
    double lo = *std::min_element(chi.begin(), chi.end());
    double hi = *std::max_element(chi.begin(), chi.end());
    std::vector<int> threshold(static_cast<size_t>(s.mesh.vertex_count()));
    for (size_t v = 0; v < chi.size(); ++v)
      threshold[v] = (chi[v] - lo) / (hi - lo) >= 0.5 ? 1 : 0;
    std::vector<int> refined_int(refined.labels.begin(), refined.labels.end());
    REQUIRE(connected_components(s.mesh, refined_int) <=
            connected_components(s.mesh, threshold));
  }
}

TEST_CASE("build_instance validates input") {
  TriMesh mesh = fixtures::unit_square();
  REQUIRE_THROWS_AS(build_instance({0.1, 0.2}, mesh, 1.0), ValidationError);
  REQUIRE_THROWS_AS(build_instance({0.1, 0.2, 0.3, 0.4}, mesh, -1.0), ValidationError);
}
