#include "symdis/model.hpp"
#include "symdis/rng.hpp"

#include "oracles.hpp"

#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>

using namespace symdis;

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

ModelParams random_params(int d, std::uint64_t seed, double scale = 0.3) {
  ModelParams p = init_params(d, seed);
  Rng rng(seed + 1000);
  p.for_each([&](const std::string&, Mat& m) { m = rng.normal_matrix(m.rows(), m.cols(), scale); });
  p.d = d;
  return p;
}

DescriptorField random_field(std::uint64_t seed, int n, int d) {
  Rng rng(seed);
  return normalize({rng.normal_matrix(n, d), rng.normal_matrix(n, d)});
}
}  // namespace

TEST_CASE("cayley of the zero generator is the identity") {
  ModelParams p = init_params(6, 3);
  Mat a = cayley(p);
  REQUIRE((a - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("cayley is orthonormal for random generators") {
  ModelParams p = random_params(8, 17);
  Mat a = cayley(p);
  REQUIRE((Mat(a.transpose()) * a - Mat::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("forward output ranges: chi in [-1,1], agno rows unit") {
  ModelParams p = random_params(8, 29);
  DescriptorField field = random_field(5, 12, 8);
  ForwardResult fr = forward(p, field);
  for (Eigen::Index v = 0; v < fr.features.chi.rows(); ++v) {
    REQUIRE(std::abs(fr.features.chi(v, 0)) <= 1.0 + 1e-12);
    REQUIRE(std::abs(fr.features.agno.row(v).norm() - 1.0) < 1e-10);
    REQUIRE(std::abs(fr.features_flipped.agno.row(v).norm() - 1.0) < 1e-10);
  }
}

TEST_CASE("identity-configured model passes the first normalized coordinate through") {
  // zero inner weights make both MLPs vanish; the skip paths and A = I remain
  ModelParams p = init_params(8, 1, /*weight_std=*/0.0);
  DescriptorField field = random_field(9, 10, 8);
  ForwardResult fr = forward(p, field);
  Mat expected = oracle::row_normalize(field.values);
  for (Eigen::Index v = 0; v < fr.features.chi.rows(); ++v)
    REQUIRE(fr.features.chi(v, 0) == Approx(expected(v, 0)).margin(1e-12));
}

TEST_CASE("forward matches the straight-line oracle") {
  ModelParams p = random_params(8, 41);
  DescriptorField field = random_field(43, 5, 8);
  ForwardResult fr = forward(p, field);
  oracle::ForwardOracle want = oracle::forward(p, field.values);
  REQUIRE((fr.features.chi - want.chi).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE((fr.features.agno - want.agno).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE((fr.reconstruction.leftCols(8) - want.recon).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE((fr.mid - want.mid).cwiseAbs().maxCoeff() < 1e-10);
  oracle::ForwardOracle want_flipped = oracle::forward(p, field.flipped);
  REQUIRE((fr.features_flipped.chi - want_flipped.chi).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE((fr.reconstruction.rightCols(8) - want_flipped.recon).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("projection preserves per-vertex norms (isometry of A)") {
  ModelParams p = random_params(10, 59);
  DescriptorField field = random_field(61, 9, 10);
  ad::Tape t;
  ParamVars pv = register_params(t, p);
  BranchVars b = forward_branch(t, pv, field.values);
  const Mat& chi = t.value(b.chi);
  const Mat& mid = t.value(b.mid);
  Mat a = cayley(p);
  for (Eigen::Index v = 0; v < chi.rows(); ++v) {
    Mat proj = mid.row(v) * a;
    REQUIRE(std::abs(proj.norm() - 1.0) < 1e-8);
    double agno_pre = proj.rightCols(9).norm();
    REQUIRE(chi(v, 0) * chi(v, 0) + agno_pre * agno_pre == Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("forward is deterministic") {
  ModelParams p = random_params(8, 71);
  DescriptorField field = random_field(73, 6, 8);
  ForwardResult a = forward(p, field);
  ForwardResult b = forward(p, field);
  REQUIRE(a.features.chi == b.features.chi);
  REQUIRE(a.reconstruction == b.reconstruction);
}

TEST_CASE("forward rejects dimension mismatches") {
  ModelParams p = init_params(8, 1);
  DescriptorField field = random_field(3, 4, 6);
  REQUIRE_THROWS_WITH(forward(p, field), Catch::Contains("dimension"));
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  ModelParams p = random_params(9, 83);
  std::string path = temp_path("model.ckpt");
  save_checkpoint(path, p);
  ModelParams back = load_checkpoint(path);
  REQUIRE(back.d == p.d);
  bool all_equal = true;
  back.for_each([&](const std::string& name, Mat& m) {
    p.for_each([&](const std::string& name2, Mat& m2) {
      if (name == name2 && !(m == m2)) all_equal = false;
    });
  });
  REQUIRE(all_equal);
}

TEST_CASE("truncated checkpoints are rejected") {
  ModelParams p = random_params(6, 89);
  std::string path = temp_path("trunc.ckpt");
  save_checkpoint(path, p);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 16);
  REQUIRE_THROWS_AS(load_checkpoint(path), IoError);
}

TEST_CASE("checkpoint dimension mismatches are caught at use") {
  ModelParams p = random_params(6, 97);
  DescriptorField field = random_field(5, 4, 8);
  REQUIRE_THROWS_WITH(forward(p, field), Catch::Contains("does not match"));
}
