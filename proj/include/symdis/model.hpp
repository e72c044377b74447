// The disentanglement autoencoder: three-layer MLP encoder and decoder with
// skip connections, plus a trainable orthonormal projection realized through
// the Cayley transform of a skew-symmetric generator.
//
// Forward pipeline per branch (same parameters for F and flipped F):
//   mid   = input + mlp_enc(input)           (skip around the encoder)
//   mid_n = row_l2_normalize(mid)
//   proj  = mid_n * A,  A = cayley(skew(S))
//   chi   = proj[:, 0],  agno = row_l2_normalize(proj[:, 1:])
//   recon = mid_n + mlp_dec(mid_n)           (skip around the decoder)
#pragma once

#include "symdis/autodiff.hpp"
#include "symdis/core.hpp"
#include "symdis/descriptors.hpp"
#include "symdis/rng.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

namespace symdis {

struct ModelParams {
  int d = 0;
  std::array<Mat, 3> enc_w;
  std::array<Mat, 3> enc_b;  // 1 x d rows
  std::array<Mat, 3> dec_w;
  std::array<Mat, 3> dec_b;
  Mat skew_gen;  // d x d unconstrained; used through its skew part

  template <typename Fn>
  void for_each(Fn&& fn) {
    for (int i = 0; i < 3; ++i) {
      fn("enc_w" + std::to_string(i), enc_w[size_t(i)]);
      fn("enc_b" + std::to_string(i), enc_b[size_t(i)]);
    }
    for (int i = 0; i < 3; ++i) {
      fn("dec_w" + std::to_string(i), dec_w[size_t(i)]);
      fn("dec_b" + std::to_string(i), dec_b[size_t(i)]);
    }
    fn("skew_gen", skew_gen);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<ModelParams*>(this)->for_each(
        [&](const std::string& name, Mat& m) { fn(name, const_cast<const Mat&>(m)); });
  }
};

// Near-identity start: tiny Gaussian inner weights, zero biases, zero skew
// generator (so A = I and both MLPs are dominated by their skip paths).
inline ModelParams init_params(int d, std::uint64_t seed, double weight_std = 1e-3) {
  require(d >= 2, "model: d must be >= 2, got " + std::to_string(d));
  Rng rng(Rng::mix(seed, 0x7a));
  ModelParams p;
  p.d = d;
  for (int i = 0; i < 3; ++i) {
    p.enc_w[size_t(i)] = rng.normal_matrix(d, d, weight_std);
    p.enc_b[size_t(i)] = Mat::Zero(1, d);
  }
  for (int i = 0; i < 3; ++i) {
    p.dec_w[size_t(i)] = rng.normal_matrix(d, d, weight_std);
    p.dec_b[size_t(i)] = Mat::Zero(1, d);
  }
  p.skew_gen = Mat::Zero(d, d);
  return p;
}

// Tape handles for the registered parameters of one training step.
struct ParamVars {
  std::array<ad::Var, 3> enc_w, enc_b, dec_w, dec_b;
  ad::Var skew_gen;
  ad::Var a;  // cayley(skew_part(skew_gen)), shared by both branches

  // Same order as ModelParams::for_each.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (int i = 0; i < 3; ++i) {
      fn("enc_w" + std::to_string(i), enc_w[size_t(i)]);
      fn("enc_b" + std::to_string(i), enc_b[size_t(i)]);
    }
    for (int i = 0; i < 3; ++i) {
      fn("dec_w" + std::to_string(i), dec_w[size_t(i)]);
      fn("dec_b" + std::to_string(i), dec_b[size_t(i)]);
    }
    fn("skew_gen", skew_gen);
  }
};

inline ParamVars register_params(ad::Tape& tape, const ModelParams& p) {
  ParamVars v;
  for (int i = 0; i < 3; ++i) {
    v.enc_w[size_t(i)] = tape.param(p.enc_w[size_t(i)], "enc_w" + std::to_string(i));
    v.enc_b[size_t(i)] = tape.param(p.enc_b[size_t(i)], "enc_b" + std::to_string(i));
    v.dec_w[size_t(i)] = tape.param(p.dec_w[size_t(i)], "dec_w" + std::to_string(i));
    v.dec_b[size_t(i)] = tape.param(p.dec_b[size_t(i)], "dec_b" + std::to_string(i));
  }
  v.skew_gen = tape.param(p.skew_gen, "skew_gen");
  v.a = tape.cayley(ad::skew_part(tape, v.skew_gen));
  return v;
}

namespace detail {
inline ad::Var mlp3(ad::Tape& t, ad::Var x, const std::array<ad::Var, 3>& w,
                    const std::array<ad::Var, 3>& b) {
  ad::Var h = t.add(t.matmul(x, w[0]), b[0]);
  h = t.relu(h);
  h = t.relu(t.add(t.matmul(h, w[1]), b[1]));
  return t.add(t.matmul(h, w[2]), b[2]);
}
}  // namespace detail

// One branch of the disentangler recorded on a tape.
struct BranchVars {
  ad::Var input;  // |V| x d constant
  ad::Var mid;    // row-normalized intermediate
  ad::Var chi;    // |V| x 1 in [-1, 1]
  ad::Var agno;   // |V| x (d-1), unit rows
  ad::Var recon;  // |V| x d
};

inline BranchVars forward_branch(ad::Tape& t, const ParamVars& pv, const Mat& input) {
  BranchVars bv;
  bv.input = t.constant(input);
  ad::Var enc = detail::mlp3(t, bv.input, pv.enc_w, pv.enc_b);
  bv.mid = t.row_l2_normalize(t.add(bv.input, enc));
  ad::Var proj = t.matmul(bv.mid, pv.a);
  const int d = int(input.cols());
  bv.chi = t.slice_cols(proj, 0, 1);
  bv.agno = t.row_l2_normalize(t.slice_cols(proj, 1, d));
  bv.recon = t.add(bv.mid, detail::mlp3(t, bv.mid, pv.dec_w, pv.dec_b));
  return bv;
}

// Plain-data forward results for inference.
struct DisentangledFeatures {
  Mat chi;    // |V| x 1
  Mat agno;   // |V| x (d-1)
};

struct ForwardResult {
  DisentangledFeatures features;          // from F
  DisentangledFeatures features_flipped;  // from flipped F
  Mat reconstruction;                     // |V| x 2d, [recon(F), recon(F̄)]
  Mat mid;                                // |V| x d, normalized intermediate of F
};

// Runs both branches without recording gradients.
inline ForwardResult forward(const ModelParams& params, const DescriptorField& field) {
  require(field.dim() == params.d,
          "forward: descriptor dimension " + std::to_string(field.dim()) +
              " does not match model d=" + std::to_string(params.d));
  ad::Tape t;
  ParamVars pv;
  for (int i = 0; i < 3; ++i) {
    pv.enc_w[size_t(i)] = t.constant(params.enc_w[size_t(i)]);
    pv.enc_b[size_t(i)] = t.constant(params.enc_b[size_t(i)]);
    pv.dec_w[size_t(i)] = t.constant(params.dec_w[size_t(i)]);
    pv.dec_b[size_t(i)] = t.constant(params.dec_b[size_t(i)]);
  }
  pv.skew_gen = t.constant(params.skew_gen);
  pv.a = t.cayley(ad::skew_part(t, pv.skew_gen));
  BranchVars f = forward_branch(t, pv, field.values);
  BranchVars g = forward_branch(t, pv, field.flipped);
  ForwardResult out;
  out.features = {t.value(f.chi), t.value(f.agno)};
  out.features_flipped = {t.value(g.chi), t.value(g.agno)};
  out.reconstruction = Mat(field.values.rows(), 2 * params.d);
  out.reconstruction.leftCols(params.d) = t.value(f.recon);
  out.reconstruction.rightCols(params.d) = t.value(g.recon);
  out.mid = t.value(f.mid);
  return out;
}

// The orthonormal projection matrix of the current parameters.
inline Mat cayley(const ModelParams& params) {
  ad::Tape t;
  ad::Var s = t.constant(params.skew_gen);
  return t.value(t.cayley(ad::skew_part(t, s)));
}

// ---- checkpoints ----
// "SDCK" | u32 version=1 | u32 d | u32 param count |
// per param: u32 name length | name bytes | u64 rows | u64 cols | f64 data

inline void save_checkpoint(const std::string& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write("SDCK", 4);
  std::uint32_t version = 1, d = std::uint32_t(params.d), count = 0;
  params.for_each([&](const std::string&, const Mat&) { ++count; });
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(&count), 4);
  params.for_each([&](const std::string& name, const Mat& m) {
    std::uint32_t len = std::uint32_t(name.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(name.data(), std::streamsize(name.size()));
    std::uint64_t rows = std::uint64_t(m.rows()), cols = std::uint64_t(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    out.write(reinterpret_cast<const char*>(m.data()),
              std::streamsize(sizeof(double) * size_t(m.size())));
  });
  if (!out) throw IoError("write failed on '" + path + "'");
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SDCK", 4) != 0)
    throw IoError("'" + path + "': bad checkpoint magic");
  std::uint32_t version, d, count;
  if (!in.read(reinterpret_cast<char*>(&version), 4) ||
      !in.read(reinterpret_cast<char*>(&d), 4) ||
      !in.read(reinterpret_cast<char*>(&count), 4))
    throw IoError("'" + path + "': truncated checkpoint header");
  if (version != 1)
    throw IoError("'" + path + "': unsupported checkpoint version " +
                  std::to_string(version));
  ModelParams params;
  params.d = int(d);
  std::vector<std::pair<std::string, Mat>> loaded;
  for (std::uint32_t k = 0; k < count; ++k) {
    std::uint32_t len;
    if (!in.read(reinterpret_cast<char*>(&len), 4))
      throw IoError("'" + path + "': truncated at parameter " + std::to_string(k));
    std::string name(len, '\0');
    std::uint64_t rows, cols;
    if (!in.read(name.data(), len) || !in.read(reinterpret_cast<char*>(&rows), 8) ||
        !in.read(reinterpret_cast<char*>(&cols), 8))
      throw IoError("'" + path + "': truncated at parameter " + std::to_string(k));
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (!in.read(reinterpret_cast<char*>(m.data()),
                 std::streamsize(sizeof(double) * size_t(m.size()))))
      throw IoError("'" + path + "': truncated payload for '" + name + "'");
    loaded.emplace_back(std::move(name), std::move(m));
  }
  size_t taken = 0;
  params.for_each([&](const std::string& name, Mat& slot) {
    for (auto& [n, m] : loaded)
      if (n == name) {
        slot = m;
        ++taken;
        return;
      }
    throw IoError("'" + path + "': missing parameter '" + name + "'");
  });
  if (taken != loaded.size())
    throw IoError("'" + path + "': unexpected extra parameters");
  // shape sanity against d
  params.for_each([&](const std::string& name, Mat& m) {
    bool bias = name.find("_b") != std::string::npos;
    Eigen::Index er = bias ? 1 : params.d;
    if (m.rows() != er || m.cols() != params.d)
      throw IoError("'" + path + "': parameter '" + name + "' has shape " +
                    shape_str(m) + ", inconsistent with d=" + std::to_string(params.d));
  });
  return params;
}

}  // namespace symdis
