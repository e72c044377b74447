// The five unsupervised disentanglement losses and their weighted total,
// all recorded on an autodiff tape.
#pragma once

#include "symdis/autodiff.hpp"
#include "symdis/core.hpp"

#include <cmath>
#include <vector>

namespace symdis {

struct LossWeights {
  double sim = 1.0;          // lambda_1
  double rec = 0.2;          // lambda_2
  double bou = 10.0;         // lambda_3
  double con = 2.0;          // lambda_4
};

inline void validate_weights(const LossWeights& w) {
  require(w.sim >= 0 && w.rec >= 0 && w.bou >= 0 && w.con >= 0 &&
              std::isfinite(w.sim) && std::isfinite(w.rec) && std::isfinite(w.bou) &&
              std::isfinite(w.con),
          "loss weights must be finite and nonnegative");
}

// Pushes the symmetry channel of a vertex and of its mirrored input apart:
// -(1/sqrt(|V|)) * ||chi - chi_flipped||_2. Always <= 0.
inline ad::Var loss_dis(ad::Tape& t, ad::Var chi, ad::Var chi_flipped) {
  const Mat& a = t.value(chi);
  const Mat& b = t.value(chi_flipped);
  require(a.rows() == b.rows() && a.cols() == 1 && b.cols() == 1,
          "loss_dis: expected equal-length column vectors, got " + shape_str(a) +
              " and " + shape_str(b));
  double inv_sqrt = -1.0 / std::sqrt(double(a.rows()));
  return t.scale(t.norm(t.sub(chi, chi_flipped)), inv_sqrt);
}

// Pulls the symmetry-agnostic features of mirrored inputs together:
// (1/sqrt(|V|)) * ||agno - agno_flipped||_F.
inline ad::Var loss_sim(ad::Tape& t, ad::Var agno, ad::Var agno_flipped) {
  const Mat& a = t.value(agno);
  const Mat& b = t.value(agno_flipped);
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "loss_sim: shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  double inv_sqrt = 1.0 / std::sqrt(double(a.rows()));
  return t.scale(t.norm(t.sub(agno, agno_flipped)), inv_sqrt);
}

// Reconstruction of the column-stacked input [F, F̄]:
// (1/sqrt(|V|)) * ||stack - recon||_F.
inline ad::Var loss_rec(ad::Tape& t, ad::Var input_stack, ad::Var reconstruction) {
  const Mat& a = t.value(input_stack);
  const Mat& b = t.value(reconstruction);
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "loss_rec: shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  double inv_sqrt = 1.0 / std::sqrt(double(a.rows()));
  return t.scale(t.norm(t.sub(input_stack, reconstruction)), inv_sqrt);
}

// Straight-boundary regularizer: per vertex, the cheapest tuple (u, v, w)
// trading squared chi changes against the tangential cosine, for both
// branches, averaged over all vertices. Vertices without tuples contribute 0
// but stay in the denominator.
inline ad::Var loss_bou(ad::Tape& t, const ad::TupleTable& tuples, ad::Var chi,
                        ad::Var chi_flipped) {
  const int n = tuples.vertex_count();
  require(int(t.value(chi).rows()) == n && int(t.value(chi_flipped).rows()) == n,
          "loss_bou: chi length does not match tuple table");
  ad::Var per_vertex = t.add(t.boundary_min(chi, tuples),
                             t.boundary_min(chi_flipped, tuples));
  return t.scale(t.sum(per_vertex), 1.0 / double(n));
}

// Soft symmetry assignment of one branch: elementwise product of the
// min-max-normalized squared chi differences W and the agno similarity
// matrix C_c, restricted to the sampled vertices.
inline ad::Var consistency_assignment(ad::Tape& t, ad::Var chi, ad::Var agno,
                                      const std::vector<int>& sample) {
  require(!sample.empty(), "loss_con: empty sample");
  std::vector<char> seen(size_t(t.value(chi).rows()), 0);
  for (int s : sample) {
    require(s >= 0 && s < int(seen.size()), "loss_con: sample index out of range");
    require(!seen[size_t(s)], "loss_con: duplicate sample index " + std::to_string(s));
    seen[size_t(s)] = 1;
  }
  const int m = int(sample.size());
  ad::Var chi_m = t.gather_rows(chi, sample);
  ad::Var agno_m = t.gather_rows(agno, sample);
  // W_ij = (chi_i - chi_j)^2 via the outer difference of chi with itself
  ad::Var ones_row = t.constant(Mat::Ones(1, m));
  ad::Var b = t.matmul(chi_m, ones_row);           // m x m, rows constant
  ad::Var w = t.square(t.sub(b, t.transpose(b)));  // symmetric, zero diagonal
  ad::Var c_c = t.matmul(agno_m, t.transpose(agno_m));
  return t.cwise_mul(t.minmax_normalize(w), t.minmax_normalize(c_c));
}

// (1/m) * || [I_m, I_m] - [Pi^2, Pi_flipped^2] ||_F with Pi^2 the matrix
// square. Zero when both assignments are involutions.
inline ad::Var loss_con_from_assignments(ad::Tape& t, ad::Var pi, ad::Var pi_flipped) {
  const Mat& p = t.value(pi);
  require(p.rows() == p.cols(), "loss_con: assignment must be square");
  require(t.value(pi_flipped).rows() == p.rows() &&
              t.value(pi_flipped).cols() == p.cols(),
          "loss_con: branch assignments differ in shape");
  const int m = int(p.rows());
  ad::Var identity = t.constant(Mat::Identity(m, m));
  ad::Var lhs = t.sub(identity, t.matmul(pi, pi));
  ad::Var rhs = t.sub(identity, t.matmul(pi_flipped, pi_flipped));
  return t.scale(t.norm(t.concat_cols(lhs, rhs)), 1.0 / double(m));
}

inline ad::Var loss_con(ad::Tape& t, ad::Var chi, ad::Var agno, ad::Var chi_flipped,
                        ad::Var agno_flipped, const std::vector<int>& sample) {
  ad::Var pi = consistency_assignment(t, chi, agno, sample);
  ad::Var pi_flipped = consistency_assignment(t, chi_flipped, agno_flipped, sample);
  return loss_con_from_assignments(t, pi, pi_flipped);
}

// L = L_dis + l1 L_sim + l2 L_rec + l3 L_bou + l4 L_con. A zero weight
// removes its term exactly.
inline ad::Var loss_total(ad::Tape& t, ad::Var dis, ad::Var sim, ad::Var rec,
                          ad::Var bou, ad::Var con, const LossWeights& w) {
  validate_weights(w);
  ad::Var total = dis;
  total = t.add(total, t.scale(sim, w.sim));
  total = t.add(total, t.scale(rec, w.rec));
  total = t.add(total, t.scale(bou, w.bou));
  total = t.add(total, t.scale(con, w.con));
  return total;
}

}  // namespace symdis
