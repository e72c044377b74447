// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape records a DAG of matrix operations during the forward pass and
// replays it backwards to accumulate gradients for every parameter leaf.
// Values are plain 64-bit Eigen matrices; scalars are 1x1. Min-style
// selections (argmin of boundary tuples, argmin/argmax of the min-max
// normalization) route gradient only to the recorded selected entry.
#pragma once

#include "symdis/core.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace symdis::ad {

using symdis::Mat;

// Handle to a node on a tape. Cheap to copy; only valid for the tape that
// created it.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Per-vertex candidate tuples for the boundary-loss minimum. `cosine` is
// the precomputed tangential cosine C_v(u, w); it carries no gradient.
struct BoundaryTuple {
  int u = -1;
  int w = -1;
  double cosine = 0.0;
};

struct TupleTable {
  // tuples for vertex v live in entries [offset[v], offset[v + 1])
  std::vector<int> offset;
  std::vector<BoundaryTuple> entries;
  int vertex_count() const { return int(offset.size()) - 1; }
};

class Tape {
 public:
  // ---- leaves ----

  Var param(Mat value, std::string name = {}) {
    require_finite(value, "param " + name);
    return push(std::move(value), true, nullptr, std::move(name));
  }

  Var constant(Mat value, std::string name = {}) {
    require_finite(value, "constant " + name);
    return push(std::move(value), false, nullptr, std::move(name));
  }

  Var scalar(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return constant(std::move(m));
  }

  // ---- recorded operations ----

  Var matmul(Var a, Var b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (A.cols() != B.rows())
      throw ValidationError("matmul: inner dimensions disagree, " + shape_str(A) +
                            " * " + shape_str(B));
    Mat out = A * B;
    return push(std::move(out), needs(a) || needs(b),
                [a, b](Tape& t, int self) {
                  const Mat& g = t.grad_of(self);
                  if (t.needs(a)) t.accumulate(a, g * t.value(b).transpose());
                  if (t.needs(b)) t.accumulate(b, t.value(a).transpose() * g);
                });
  }

  Var add(Var a, Var b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (A.rows() == B.rows() && A.cols() == B.cols()) {
      Mat out = A + B;
      return push(std::move(out), needs(a) || needs(b),
                  [a, b](Tape& t, int self) {
                    const Mat& g = t.grad_of(self);
                    if (t.needs(a)) t.accumulate(a, g);
                    if (t.needs(b)) t.accumulate(b, g);
                  });
    }
    if (B.rows() == 1 && B.cols() == A.cols()) {
      // broadcast: row vector added to every row (bias)
      Mat out = A.rowwise() + B.row(0);
      return push(std::move(out), needs(a) || needs(b),
                  [a, b](Tape& t, int self) {
                    const Mat& g = t.grad_of(self);
                    if (t.needs(a)) t.accumulate(a, g);
                    if (t.needs(b)) t.accumulate(b, Mat(g.colwise().sum()));
                  });
    }
    throw ValidationError("add: incompatible shapes " + shape_str(A) + " + " +
                          shape_str(B));
  }

  Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

  Var scale(Var a, double s) {
    Mat out = s * value(a);
    return push(std::move(out), needs(a), [a, s](Tape& t, int self) {
      if (t.needs(a)) t.accumulate(a, Mat(s * t.grad_of(self)));
    });
  }

  Var cwise_mul(Var a, Var b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (A.rows() != B.rows() || A.cols() != B.cols())
      throw ValidationError("cwise_mul: shape mismatch " + shape_str(A) + " vs " +
                            shape_str(B));
    Mat out = A.cwiseProduct(B);
    return push(std::move(out), needs(a) || needs(b),
                [a, b](Tape& t, int self) {
                  const Mat& g = t.grad_of(self);
                  if (t.needs(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
                  if (t.needs(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
                });
  }

  Var square(Var a) {
    Mat out = value(a).array().square().matrix();
    return push(std::move(out), needs(a), [a](Tape& t, int self) {
      if (t.needs(a))
        t.accumulate(a, Mat(2.0 * t.grad_of(self).cwiseProduct(t.value(a))));
    });
  }

  Var relu(Var a) {
    Mat out = value(a).cwiseMax(0.0);
    return push(std::move(out), needs(a), [a](Tape& t, int self) {
      if (!t.needs(a)) return;
      Mat mask = (t.value(a).array() > 0.0).cast<double>().matrix();
      t.accumulate(a, t.grad_of(self).cwiseProduct(mask));
    });
  }

  Var transpose(Var a) {
    Mat out = value(a).transpose();
    return push(std::move(out), needs(a), [a](Tape& t, int self) {
      if (t.needs(a)) t.accumulate(a, t.grad_of(self).transpose());
    });
  }

  Var concat_cols(Var a, Var b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (A.rows() != B.rows())
      throw ValidationError("concat_cols: row counts differ, " + shape_str(A) +
                            " vs " + shape_str(B));
    Mat out(A.rows(), A.cols() + B.cols());
    out.leftCols(A.cols()) = A;
    out.rightCols(B.cols()) = B;
    const int ac = int(A.cols());
    return push(std::move(out), needs(a) || needs(b),
                [a, b, ac](Tape& t, int self) {
                  const Mat& g = t.grad_of(self);
                  if (t.needs(a)) t.accumulate(a, g.leftCols(ac));
                  if (t.needs(b)) t.accumulate(b, g.rightCols(g.cols() - ac));
                });
  }

  // Columns [begin, end) of a.
  Var slice_cols(Var a, int begin, int end) {
    const Mat& A = value(a);
    require(begin >= 0 && end <= A.cols() && begin < end,
            "slice_cols: bad range [" + std::to_string(begin) + ", " +
                std::to_string(end) + ") for " + shape_str(A));
    Mat out = A.middleCols(begin, end - begin);
    return push(std::move(out), needs(a), [a, begin, end](Tape& t, int self) {
      if (!t.needs(a)) return;
      const Mat& A2 = t.value(a);
      Mat g = Mat::Zero(A2.rows(), A2.cols());
      g.middleCols(begin, end - begin) = t.grad_of(self);
      t.accumulate(a, g);
    });
  }

  Var gather_rows(Var a, std::vector<int> rows) {
    const Mat& A = value(a);
    for (int r : rows)
      require(r >= 0 && r < A.rows(), "gather_rows: row index out of range");
    Mat out(Eigen::Index(rows.size()), A.cols());
    for (size_t i = 0; i < rows.size(); ++i) out.row(Eigen::Index(i)) = A.row(rows[i]);
    return push(std::move(out), needs(a),
                [a, rows = std::move(rows)](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Mat& g = t.grad_of(self);
                  Mat acc = Mat::Zero(t.value(a).rows(), t.value(a).cols());
                  for (size_t i = 0; i < rows.size(); ++i)
                    acc.row(rows[i]) += g.row(Eigen::Index(i));
                  t.accumulate(a, acc);
                });
  }

  // Each row scaled to unit L2 norm; rows with norm <= eps become zero.
  Var row_l2_normalize(Var a, double eps = kNormEps) {
    const Mat& A = value(a);
    Mat out(A.rows(), A.cols());
    std::vector<double> norms(size_t(A.rows()));
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      double n = A.row(r).norm();
      norms[size_t(r)] = n;
      if (n > eps)
        out.row(r) = A.row(r) / n;
      else
        out.row(r).setZero();
    }
    return push(std::move(out), needs(a),
                [a, eps, norms = std::move(norms)](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Mat& g = t.grad_of(self);
                  const Mat& y = t.value(Var{self});
                  Mat acc = Mat::Zero(y.rows(), y.cols());
                  for (Eigen::Index r = 0; r < y.rows(); ++r) {
                    double n = norms[size_t(r)];
                    if (n <= eps) continue;  // zero rows are constants
                    double dot = g.row(r).dot(y.row(r));
                    acc.row(r) = (g.row(r) - dot * y.row(r)) / n;
                  }
                  t.accumulate(a, acc);
                });
  }

  // Global min-max normalization: (x - min) / (max - min + eps). A constant
  // matrix maps to all zeros. Gradient routes the min/max contributions to
  // the first occurrence in row-major order.
  Var minmax_normalize(Var a, double eps = kNormEps) {
    const Mat& A = value(a);
    require(A.size() > 0, "minmax_normalize: empty matrix");
    Eigen::Index pmin = 0, pmax = 0;
    const double* d = A.data();  // row-major scan
    for (Eigen::Index i = 1; i < A.size(); ++i) {
      if (d[i] < d[pmin]) pmin = i;
      if (d[i] > d[pmax]) pmax = i;
    }
    const double lo = d[pmin], hi = d[pmax];
    const double denom = hi - lo + eps;
    Mat out = ((A.array() - lo) / denom).matrix();
    return push(std::move(out), needs(a),
                [a, pmin, pmax, lo, denom](Tape& t, int self) {
                  if (!t.needs(a)) return;
                  const Mat& g = t.grad_of(self);
                  const Mat& A2 = t.value(a);
                  Mat acc = g / denom;
                  // contributions through the selected min and max entries
                  double gmin = 0.0, gmax = 0.0;
                  const double* ad = A2.data();
                  const double* gd = g.data();
                  for (Eigen::Index i = 0; i < A2.size(); ++i) {
                    double x = ad[i] - lo;
                    gmin += gd[i] * (-1.0 / denom + x / (denom * denom));
                    gmax += gd[i] * (-x / (denom * denom));
                  }
                  acc.data()[pmin] += gmin;
                  acc.data()[pmax] += gmax;
                  t.accumulate(a, acc);
                });
  }

  // sqrt(sum of squares): the L2 norm of a vector and the Frobenius norm of
  // a matrix. Subgradient zero at the origin.
  Var norm(Var a, double eps = kNormEps) {
    double n = value(a).norm();
    Mat out(1, 1);
    out(0, 0) = n;
    return push(std::move(out), needs(a), [a, n, eps](Tape& t, int self) {
      if (!t.needs(a) || n <= eps) return;
      double g = t.grad_of(self)(0, 0);
      t.accumulate(a, Mat((g / n) * t.value(a)));
    });
  }

  Var sum(Var a) {
    Mat out(1, 1);
    out(0, 0) = value(a).sum();
    return push(std::move(out), needs(a), [a](Tape& t, int self) {
      if (!t.needs(a)) return;
      double g = t.grad_of(self)(0, 0);
      t.accumulate(a, Mat(Mat::Constant(t.value(a).rows(), t.value(a).cols(), g)));
    });
  }

  // Per-vertex minimum of (chi[u]-chi[v])^2 + (chi[v]-chi[w])^2 - C_v(u,w)
  // over the vertex's tuple set. chi must be n x 1 with n matching the
  // table. Vertices with no tuples contribute 0 and receive no gradient.
  // Ties break toward the lowest tuple index.
  Var boundary_min(Var chi, const TupleTable& table) {
    const Mat& c = value(chi);
    require(c.cols() == 1, "boundary_min: chi must be a column vector, got " +
                               shape_str(c));
    require(int(c.rows()) == table.vertex_count(),
            "boundary_min: chi length " + std::to_string(c.rows()) +
                " vs tuple table for " + std::to_string(table.vertex_count()) +
                " vertices");
    const int n = table.vertex_count();
    Mat out = Mat::Zero(n, 1);
    // argmin tuple (u, w) per vertex; u = -1 marks an empty tuple set
    std::vector<std::pair<int, int>> sel(size_t(n), {-1, -1});
    for (int v = 0; v < n; ++v) {
      double best = 0.0;
      bool found = false;
      for (int k = table.offset[size_t(v)]; k < table.offset[size_t(v) + 1]; ++k) {
        const BoundaryTuple& tp = table.entries[size_t(k)];
        double du = c(tp.u, 0) - c(v, 0);
        double dw = c(v, 0) - c(tp.w, 0);
        double term = du * du + dw * dw - tp.cosine;
        if (!found || term < best) {
          best = term;
          found = true;
          sel[size_t(v)] = {tp.u, tp.w};
        }
      }
      if (found) out(v, 0) = best;
    }
    return push(std::move(out), needs(chi),
                [chi, sel = std::move(sel)](Tape& t, int self) {
                  if (!t.needs(chi)) return;
                  const Mat& g = t.grad_of(self);
                  const Mat& c2 = t.value(chi);
                  Mat acc = Mat::Zero(c2.rows(), 1);
                  for (int v = 0; v < int(sel.size()); ++v) {
                    auto [u, w] = sel[size_t(v)];
                    if (u < 0) continue;
                    double gv = g(v, 0);
                    double du = c2(u, 0) - c2(v, 0);
                    double dw = c2(v, 0) - c2(w, 0);
                    acc(u, 0) += gv * 2.0 * du;
                    acc(v, 0) += gv * (-2.0 * du + 2.0 * dw);
                    acc(w, 0) += gv * (-2.0 * dw);
                  }
                  t.accumulate(chi, acc);
                });
  }

  // Cayley transform A = (I - S)^{-1} (I + S) of a skew-symmetric S.
  // (I - S) is always invertible for real skew S.
  Var cayley(Var skew) {
    const Mat& S = value(skew);
    require(S.rows() == S.cols(), "cayley: square matrix required, got " + shape_str(S));
    require((S + Mat(S.transpose())).cwiseAbs().maxCoeff() < 1e-9,
            "cayley: input is not skew-symmetric");
    const Eigen::Index d = S.rows();
    Mat I = Mat::Identity(d, d);
    Eigen::PartialPivLU<Mat> lu(Mat(I - S));
    Mat Minv = lu.solve(I);     // (I - S)^{-1}; always exists for real skew S
    require(((I - S) * Minv - I).cwiseAbs().maxCoeff() < 1e-8,
            "cayley: (I - S) solve failed");
    Mat A = Minv * (I + S);
    return push(std::move(A), needs(skew),
                [skew, Minv](Tape& t, int self) {
                  if (!t.needs(skew)) return;
                  const Mat& g = t.grad_of(self);
                  const Mat& A2 = t.value(Var{self});
                  Mat I2 = Mat::Identity(A2.rows(), A2.cols());
                  // dA = M dS (A + I)  =>  dL/dS = M^T G (A + I)^T
                  t.accumulate(skew, Mat(Minv.transpose() * g * (A2 + I2).transpose()));
                });
  }

  // ---- access / backward ----

  const Mat& value(Var v) const { return node(v.id).value; }

  const Mat& grad(Var v) const {
    const Node& n = node(v.id);
    require(n.requires_grad, "grad: node does not require gradients");
    require(ran_backward_, "grad: backward() has not run");
    return n.grad;
  }

  bool needs(Var v) const { return node(v.id).requires_grad; }

  // Reverse sweep from a scalar root. Populates grad() for every node with
  // requires_grad reachable from the root.
  void backward(Var root) {
    const Node& r = node(root.id);
    if (r.value.rows() != 1 || r.value.cols() != 1)
      throw ValidationError("backward: root must be scalar, got " +
                            shape_str(r.value));
    for (Node& n : nodes_)
      if (n.requires_grad) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    ran_backward_ = true;
    if (!r.requires_grad) return;  // constant root: all-zero gradients
    nodes_[size_t(root.id)].grad(0, 0) = 1.0;
    for (int i = root.id; i >= 0; --i) {
      Node& n = nodes_[size_t(i)];
      if (n.requires_grad && n.backprop) n.backprop(*this, i);
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::function<void(Tape&, int)> backprop;  // null for leaves
    std::string name;
  };

  const Node& node(int id) const {
    require(id >= 0 && id < int(nodes_.size()), "invalid tape handle");
    return nodes_[size_t(id)];
  }

  const Mat& grad_of(int id) { return nodes_[size_t(id)].grad; }

  void accumulate(Var v, const Mat& delta) { nodes_[size_t(v.id)].grad += delta; }

  Var push(Mat value, bool requires_grad, std::function<void(Tape&, int)> backprop,
           std::string name = {}) {
    require_finite(value, name.empty() ? "tape op" : name);
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backprop = std::move(backprop);
    n.name = std::move(name);
    nodes_.push_back(std::move(n));
    return Var{int(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

// (A - A^T) / 2; keeps an unconstrained parameter exactly on the
// skew-symmetric manifold.
inline Var skew_part(Tape& t, Var a) {
  return t.scale(t.sub(a, t.transpose(a)), 0.5);
}

}  // namespace symdis::ad
