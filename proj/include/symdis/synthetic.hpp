// Synthetic bilaterally symmetric fixtures: a curved half-sheet generated
// for x > 0, mirrored across x = 0 with the seam column welded, carrying
// planted descriptors with a known chirality direction.
//
// The planted latent per vertex is z_v = [c_v, s_v]: c_v = tanh(4 x_v) and
// s_v a unit vector of low-order trigonometric features of (|x|, y, z),
// identical for mirror pairs. Descriptors are F_v = z_v Q + noise and
// flipped F̄_v = [-c_v, s_v] Q + noise for a fixed orthonormal Q, so at
// noise 0 the descriptor of a vertex's mirror equals its flipped descriptor
// bit for bit.
#pragma once

#include "symdis/descriptors.hpp"
#include "symdis/mesh.hpp"
#include "symdis/rng.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace symdis {

struct SyntheticShape {
  TriMesh mesh;
  DescriptorField field;
  GroundTruth gt;
  Mat planted_latents;  // |V| x d rows [c, s]; test/inspection aid
  Mat mixing;           // the orthonormal Q used to mix latents
};

// Corpus-level randomness: shapes of one corpus share the latent->descriptor
// mixing Q and the trig coefficients of the symmetric field, so a single
// trained model is meaningful across the corpus.
struct SyntheticContext {
  int d = 16;
  Mat q;           // d x d orthonormal
  Mat trig_freq;   // (d-1) x 3 frequencies for (|x|, y, z)
  std::vector<double> trig_phase;  // d-1
};

inline SyntheticContext make_synthetic_context(std::uint64_t seed, int d) {
  require(d >= 8, "synthetic: d must be >= 8, got " + std::to_string(d));
  Rng rng(Rng::mix(seed, 0x51));
  SyntheticContext ctx;
  ctx.d = d;
  // orthonormalize a Gaussian matrix; fix column signs for reproducibility
  Mat g = rng.normal_matrix(d, d);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(d, d);
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < d; ++c)
    if (r(c, c) < 0) q.col(c) = -q.col(c);
  ctx.q = q;
  ctx.trig_freq = Mat(d - 1, 3);
  ctx.trig_phase.resize(size_t(d - 1));
  for (int k = 0; k < d - 1; ++k) {
    for (int a = 0; a < 3; ++a) ctx.trig_freq(k, a) = rng.uniform(0.5, 3.0);
    ctx.trig_phase[size_t(k)] = rng.uniform(0.0, 2.0 * M_PI);
  }
  return ctx;
}

// One bilateral shape. half_res is the grid resolution of the open half
// surface; the welded full mesh has (2*half_res + 1) * (half_res + 1)
// vertices. sigma is the descriptor noise scale.
inline SyntheticShape generate_corpus_shape(const SyntheticContext& ctx,
                                            std::uint64_t shape_seed, int half_res,
                                            double sigma) {
  require(half_res >= 2, "synthetic: half_res must be >= 2");
  require(sigma >= 0.0, "synthetic: sigma must be >= 0");
  const int n = half_res, m = half_res;
  const int d = ctx.d;
  Rng rng(Rng::mix(shape_seed, 0x9e));

  // per-shape height field, a function of (u, y) only => mirror symmetric
  struct Wave {
    double amp, fu, fy, pu, py;
  };
  std::vector<Wave> waves(3);
  for (Wave& w : waves)
    w = {rng.uniform(0.05, 0.25), rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0),
         rng.uniform(0.0, 2.0 * M_PI), rng.uniform(0.0, 2.0 * M_PI)};
  auto height = [&](double u, double y) {
    double z = 0.0;
    for (const Wave& w : waves)
      z += w.amp * std::sin(w.fu * M_PI * u + w.pu) * std::sin(w.fy * M_PI * y + w.py);
    return z;
  };

  const int half_count = (n + 1) * (m + 1);
  const int total = (2 * n + 1) * (m + 1);
  auto right_idx = [&](int i, int j) { return i * (m + 1) + j; };
  auto left_idx = [&](int i, int j) { return half_count + (i - 1) * (m + 1) + j; };

  // half-surface width; wide enough that tanh(4x) saturates away from the
  // seam so only a thin band carries weak chirality
  const double kHalfWidth = 1.6;

  SyntheticShape shape;
  shape.mesh.positions.resize(size_t(total));
  std::vector<int> mirror(static_cast<size_t>(total));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= m; ++j) {
      double u = double(i) / n;
      double y = 2.0 * double(j) / m - 1.0;
      double z = height(u, y);
      int rv = right_idx(i, j);
      shape.mesh.positions[size_t(rv)] = Vec3(kHalfWidth * u, y, z);
      if (i == 0) {
        mirror[size_t(rv)] = rv;  // seam vertices are their own mirror
      } else {
        int lv = left_idx(i, j);
        shape.mesh.positions[size_t(lv)] = Vec3(-kHalfWidth * u, y, z);
        mirror[size_t(rv)] = lv;
        mirror[size_t(lv)] = rv;
      }
    }

  // right-half grid faces; mirrored faces get flipped winding so normals
  // stay consistent across the seam
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      int a = right_idx(i, j), b = right_idx(i + 1, j);
      int c = right_idx(i + 1, j + 1), e = right_idx(i, j + 1);
      shape.mesh.faces.push_back({a, b, c});
      shape.mesh.faces.push_back({a, c, e});
      int am = mirror[size_t(a)], bm = mirror[size_t(b)];
      int cm = mirror[size_t(c)], em = mirror[size_t(e)];
      shape.mesh.faces.push_back({am, cm, bm});
      shape.mesh.faces.push_back({am, em, cm});
    }

  // planted latents: compute on the right half, mirror-copy with negated
  // chirality so mirror pairs agree exactly
  Mat latents(total, d);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= m; ++j) {
      int rv = right_idx(i, j);
      const Vec3& p = shape.mesh.positions[size_t(rv)];
      double c = std::tanh(4.0 * p.x());
      Eigen::RowVectorXd s(d - 1);
      for (int k = 0; k < d - 1; ++k)
        s(k) = std::sin(ctx.trig_freq(k, 0) * p.x() + ctx.trig_freq(k, 1) * p.y() +
                        ctx.trig_freq(k, 2) * p.z() + ctx.trig_phase[size_t(k)]);
      double sn = s.norm();
      if (sn > kNormEps) s /= sn;
      latents(rv, 0) = c;
      latents.row(rv).tail(d - 1) = s;
      if (i > 0) {
        int lv = left_idx(i, j);
        latents(lv, 0) = -c;
        latents.row(lv).tail(d - 1) = s;
      }
    }

  // descriptors: row-by-row products keep the sigma=0 mirror identity exact
  Mat values(total, d), flipped(total, d);
  Mat flipped_latent(1, d);
  for (int v = 0; v < total; ++v) {
    values.row(v) = latents.row(v) * ctx.q;
    flipped_latent = latents.row(v);
    flipped_latent(0, 0) = -flipped_latent(0, 0);
    flipped.row(v) = flipped_latent * ctx.q;
  }
  for (int v = 0; v < total; ++v)
    for (int c = 0; c < d; ++c) values(v, c) += sigma * rng.normal();
  for (int v = 0; v < total; ++v)
    for (int c = 0; c < d; ++c) flipped(v, c) += sigma * rng.normal();

  shape.field = {std::move(values), std::move(flipped)};
  shape.planted_latents = std::move(latents);
  shape.mixing = ctx.q;

  shape.gt.sym_map = mirror;
  shape.gt.lr_labels.resize(size_t(total));
  shape.gt.corr.resize(size_t(total));
  for (int v = 0; v < total; ++v) {
    double x = shape.mesh.positions[size_t(v)].x();
    shape.gt.lr_labels[size_t(v)] = x < 0.0 ? -1 : 1;  // seam gets +1
    shape.gt.corr[size_t(v)] = v;  // corpus shapes share the grid
  }
  return shape;
}

inline SyntheticShape generate_synthetic(std::uint64_t seed, int half_res, int d,
                                         double sigma) {
  SyntheticContext ctx = make_synthetic_context(seed, d);
  return generate_corpus_shape(ctx, Rng::mix(seed, 1), half_res, sigma);
}

}  // namespace symdis
