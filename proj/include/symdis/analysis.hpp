// Task procedures and evaluation metrics: two-center clustering of the
// symmetry channel, intrinsic symmetry detection, left/right accuracy,
// connected-component statistics, cross-shape matching and geodesic errors.
#pragma once

#include "symdis/descriptors.hpp"
#include "symdis/geodesic.hpp"
#include "symdis/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

namespace symdis {

// Per-source-vertex target index (same shape for symmetry detection,
// another shape for matching).
using VertexMap = std::vector<int>;

// 1-D 2-means with centers initialized at the extremes; equivalent to
// thresholding at the midpoint of the converged centers. Cluster 0 is the
// one with the smaller center.
inline std::vector<int> cluster_two(const std::vector<double>& chi) {
  require(chi.size() >= 2, "cluster_two: need at least 2 values");
  double lo = chi[0], hi = chi[0];
  for (double v : chi) {
    require(std::isfinite(v), "cluster_two: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) throw ValidationError("cluster_two: degenerate chirality field");
  double c0 = lo, c1 = hi;
  for (int iter = 0; iter < 100; ++iter) {
    double t = 0.5 * (c0 + c1);
    double sum0 = 0, sum1 = 0;
    int n0 = 0, n1 = 0;
    for (double v : chi) {
      if (v < t) {
        sum0 += v;
        ++n0;
      } else {
        sum1 += v;
        ++n1;
      }
    }
    double nc0 = n0 ? sum0 / n0 : c0;
    double nc1 = n1 ? sum1 / n1 : c1;
    if (nc0 == c0 && nc1 == c1) break;
    c0 = nc0;
    c1 = nc1;
  }
  double t = 0.5 * (c0 + c1);
  std::vector<int> labels(chi.size());
  for (size_t v = 0; v < chi.size(); ++v) labels[v] = chi[v] < t ? 0 : 1;
  return labels;
}

namespace detail {
inline double cosine_similarity(const Mat& features, int a, int b,
                                const std::vector<double>& norms) {
  double na = norms[size_t(a)], nb = norms[size_t(b)];
  if (na <= kNormEps || nb <= kNormEps) return 0.0;
  return features.row(a).dot(features.row(b)) / (na * nb);
}
}  // namespace detail

// Map every vertex to the most feature-similar vertex of the opposite
// cluster. Ties break toward the lowest target index.
inline VertexMap detect_symmetry(const std::vector<int>& labeling, const Mat& features) {
  const int n = int(features.rows());
  require(int(labeling.size()) == n, "detect_symmetry: labeling length mismatch");
  int second = labeling[0];
  for (int l : labeling)
    if (l != labeling[0]) {
      if (second == labeling[0])
        second = l;
      else
        require(l == second, "detect_symmetry: labeling must be binary");
    }
  std::vector<int> side0, side1;
  for (int v = 0; v < n; ++v) (labeling[size_t(v)] == labeling[0] ? side0 : side1).push_back(v);
  if (side0.empty() || side1.empty())
    throw ValidationError("detect_symmetry: one cluster is empty");
  std::vector<double> norms(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v) norms[size_t(v)] = features.row(v).norm();
  VertexMap map(size_t(n), -1);
  for (int v = 0; v < n; ++v) {
    const std::vector<int>& candidates = labeling[size_t(v)] == labeling[0] ? side1 : side0;
    double best = -std::numeric_limits<double>::infinity();
    int best_idx = -1;
    for (int u : candidates) {
      double s = detail::cosine_similarity(features, v, u, norms);
      if (s > best) {
        best = s;
        best_idx = u;
      }
    }
    map[size_t(v)] = best_idx;
  }
  return map;
}

// Geodesic distance between map targets and ground-truth targets, averaged
// and normalized by sqrt(surface area). Vertices with sentinel (-1)
// annotations are skipped; `evaluated` reports how many contributed.
inline double mean_normalized_geodesic(const VertexMap& pred, const std::vector<int>& gt,
                                       const TriMesh& target_mesh, int* evaluated = nullptr) {
  require(pred.size() == gt.size(), "geodesic error: map lengths differ");
  const int n = target_mesh.vertex_count();
  double norm = std::sqrt(surface_area(target_mesh));
  require(norm > 0, "geodesic error: degenerate target mesh area");
  EdgeSets edges = build_edges(target_mesh);
  // one Dijkstra per distinct source; group from whichever side is smaller
  std::map<int, std::vector<size_t>> by_gt, by_pred;
  size_t count = 0;
  for (size_t v = 0; v < pred.size(); ++v) {
    if (gt[v] < 0) continue;  // unannotated
    require(gt[v] < n, "geodesic error: ground-truth index out of range");
    require(pred[v] >= 0 && pred[v] < n, "geodesic error: predicted index out of range");
    by_gt[gt[v]].push_back(v);
    by_pred[pred[v]].push_back(v);
    ++count;
  }
  if (evaluated) *evaluated = int(count);
  if (count == 0) return 0.0;
  bool group_gt = by_gt.size() <= by_pred.size();
  const auto& groups = group_gt ? by_gt : by_pred;
  double total = 0.0;
  for (const auto& [src, members] : groups) {
    std::vector<double> dist = geodesic_from(target_mesh, edges, src);
    for (size_t v : members) {
      double dv = dist[size_t(group_gt ? pred[v] : gt[v])];
      require(std::isfinite(dv), "geodesic error: target unreachable from source");
      total += dv;
    }
  }
  return total / (double(count) * norm);
}

inline double err_intrinsic(const VertexMap& pred, const GroundTruth& gt,
                            const TriMesh& mesh, int* evaluated = nullptr) {
  return mean_normalized_geodesic(pred, gt.sym_map, mesh, evaluated);
}

inline double err_matching(const VertexMap& pred, const std::vector<int>& gt_corr,
                           const TriMesh& target_mesh, int* evaluated = nullptr) {
  return mean_normalized_geodesic(pred, gt_corr, target_mesh, evaluated);
}

// Dataset-level left/right accuracy: hit rate of sign agreement averaged
// over shapes, then max(hit, 1 - hit) to absorb the global sign ambiguity.
struct LrShape {
  std::vector<int> predicted;  // -1 / +1 per vertex
  std::vector<int> gt;         // -1 / +1 per vertex
};

inline int sign_of(double x) { return x < 0.0 ? -1 : 1; }

inline std::vector<int> signs_of_chi(const std::vector<double>& chi) {
  std::vector<int> s(chi.size());
  for (size_t v = 0; v < chi.size(); ++v) s[v] = sign_of(chi[v]);
  return s;
}

// Refined binary labels, 0 mapped to -1.
inline std::vector<int> signs_of_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<int> s(labels.size());
  for (size_t v = 0; v < labels.size(); ++v) s[v] = labels[v] == 0 ? -1 : 1;
  return s;
}

inline double acc_left_right(const std::vector<LrShape>& shapes) {
  require(!shapes.empty(), "acc_left_right: empty dataset");
  double hit = 0.0;
  for (const LrShape& s : shapes) {
    require(s.predicted.size() == s.gt.size() && !s.gt.empty(),
            "acc_left_right: per-shape label lengths disagree");
    double match = 0.0;
    for (size_t v = 0; v < s.gt.size(); ++v) {
      require(s.predicted[v] == -1 || s.predicted[v] == 1,
              "acc_left_right: predictions must be -1 or +1");
      require(s.gt[v] == -1 || s.gt[v] == 1, "acc_left_right: labels must be -1 or +1");
      if (s.predicted[v] == s.gt[v]) match += 1.0;
    }
    hit += match / double(s.gt.size());
  }
  hit /= double(shapes.size());
  return std::max(hit, 1.0 - hit);
}

inline double avg_components(const std::vector<int>& per_shape_counts) {
  require(!per_shape_counts.empty(), "avg_components: empty dataset");
  double sum = 0.0;
  for (int c : per_shape_counts) sum += double(c);
  return sum / double(per_shape_counts.size());
}

// Match every row of descX to the most cosine-similar row of descY.
// Ties break toward the lowest target index.
inline VertexMap match_shapes(const Mat& desc_x, const Mat& desc_y) {
  require(desc_x.cols() == desc_y.cols(),
          "match_shapes: feature widths differ, " + shape_str(desc_x) + " vs " +
              shape_str(desc_y));
  std::vector<double> nx(size_t(desc_x.rows())), ny(size_t(desc_y.rows()));
  for (Eigen::Index v = 0; v < desc_x.rows(); ++v) nx[size_t(v)] = desc_x.row(v).norm();
  for (Eigen::Index v = 0; v < desc_y.rows(); ++v) ny[size_t(v)] = desc_y.row(v).norm();
  VertexMap map(size_t(desc_x.rows()), -1);
  for (Eigen::Index v = 0; v < desc_x.rows(); ++v) {
    double best = -std::numeric_limits<double>::infinity();
    int best_idx = -1;
    for (Eigen::Index u = 0; u < desc_y.rows(); ++u) {
      double s = (nx[size_t(v)] <= kNormEps || ny[size_t(u)] <= kNormEps)
                     ? 0.0
                     : desc_x.row(v).dot(desc_y.row(u)) / (nx[size_t(v)] * ny[size_t(u)]);
      if (s > best) {
        best = s;
        best_idx = int(u);
      }
    }
    map[size_t(v)] = best_idx;
  }
  return map;
}

// Feature assembly for matching: the base descriptor (raw F or the
// symmetry-agnostic features), optionally concatenated with a scaled
// chirality channel. chi = nullptr leaves the base unchanged.
inline Mat assemble_match_features(const Mat& base, const std::vector<double>* chi,
                                   double alpha = 1.0) {
  if (!chi) return base;
  require(int(chi->size()) == int(base.rows()),
          "assemble_match_features: chi length does not match feature rows");
  Mat out(base.rows(), base.cols() + 1);
  out.leftCols(base.cols()) = base;
  for (Eigen::Index v = 0; v < base.rows(); ++v)
    out(v, base.cols()) = alpha * (*chi)[size_t(v)];
  return out;
}

// Refined binary labels mapped to a {-1, +1} channel.
inline std::vector<double> chi_from_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<double> chi(labels.size());
  for (size_t v = 0; v < labels.size(); ++v) chi[v] = labels[v] == 0 ? -1.0 : 1.0;
  return chi;
}

}  // namespace symdis
