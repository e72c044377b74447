#include "symdis/autodiff.hpp"
#include "symdis/optimizer.hpp"
#include "symdis/rng.hpp"

#include "oracles.hpp"

#include <catch2/catch.hpp>

#include <cstring>
#include <limits>

using namespace symdis;
using ad::Tape;
using ad::Var;

TEST_CASE("matmul identity and hand-computed products") {
  Tape t;
  Mat x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  Var prod = t.matmul(t.constant(Mat::Identity(2, 2)), t.constant(x));
  REQUIRE(t.value(prod) == x);

  Mat a(2, 2), b(2, 1);
  a << 1, 2, 3, 4;
  b << 0, 1;
  Mat expected(2, 1);
  expected << 2, 4;
  REQUIRE(t.value(t.matmul(t.constant(a), t.constant(b))) == expected);
}

TEST_CASE("matmul matches the naive triple-loop oracle") {
  Rng rng(101);
  Mat a = rng.normal_matrix(5, 7);
  Mat b = rng.normal_matrix(7, 3);
  Tape t;
  Mat got = t.value(t.matmul(t.constant(a), t.constant(b)));
  Mat want = oracle::matmul(a, b);
  REQUIRE((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("matmul rejects mismatched shapes with a shape report") {
  Tape t;
  Var a = t.constant(Mat::Zero(2, 3));
  Var b = t.constant(Mat::Zero(2, 3));
  REQUIRE_THROWS_WITH(t.matmul(a, b),
                      Catch::Contains("2x3") && Catch::Contains("matmul"));
}

TEST_CASE("row_l2_normalize handles plain, unit and degenerate rows") {
  Tape t;
  Mat x(3, 2);
  x << 3, 4, 1, 0, 0, 0;
  Mat y = t.value(t.row_l2_normalize(t.constant(x)));
  REQUIRE(y(0, 0) == Approx(0.6).epsilon(1e-14));
  REQUIRE(y(0, 1) == Approx(0.8).epsilon(1e-14));
  REQUIRE(y(1, 0) == 1.0);  // unit row unchanged
  REQUIRE(y(2, 0) == 0.0);  // zero row stays zero
  REQUIRE(y(2, 1) == 0.0);
}

TEST_CASE("row_l2_normalize produces unit rows on random input") {
  Rng rng(7);
  Mat x = rng.normal_matrix(20, 6);
  Tape t;
  Mat y = t.value(t.row_l2_normalize(t.constant(x)));
  for (Eigen::Index r = 0; r < y.rows(); ++r)
    REQUIRE(std::abs(y.row(r).norm() - 1.0) < 1e-10);
}

TEST_CASE("backward of squared Frobenius norm is 2X") {
  Rng rng(3);
  Mat x = rng.normal_matrix(4, 3);
  Tape t;
  Var xv = t.param(x);
  Var root = t.sum(t.square(xv));
  t.backward(root);
  REQUIRE((t.grad(xv) - 2.0 * x).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("backward of a constant root yields all-zero gradients") {
  Tape t;
  Var p = t.param(Mat::Ones(2, 2));
  Var c = t.scalar(5.0);
  t.backward(c);
  REQUIRE(t.grad(p).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward rejects non-scalar roots") {
  Tape t;
  Var p = t.param(Mat::Ones(2, 2));
  REQUIRE_THROWS_AS(t.backward(p), ValidationError);
}

TEST_CASE("forward replay is bit-identical") {
  auto build = [] {
    Rng rng(99);
    Tape t;
    Var a = t.param(rng.normal_matrix(4, 4));
    Var b = t.row_l2_normalize(t.relu(t.matmul(a, a)));
    return t.value(t.norm(b))(0, 0);
  };
  double first = build();
  double second = build();
  REQUIRE(std::memcmp(&first, &second, sizeof first) == 0);
}

TEST_CASE("minmax_normalize maps a constant matrix to zeros") {
  Tape t;
  Mat y = t.value(t.minmax_normalize(t.constant(Mat::Constant(3, 3, 4.2))));
  REQUIRE(y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cayley transform basics") {
  Tape t;
  SECTION("zero generator gives identity") {
    Mat a = t.value(t.cayley(t.constant(Mat::Zero(4, 4))));
    REQUIRE((a - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("hand-solved 2x2 rotation") {
    Mat s(2, 2);
    s << 0, 1, -1, 0;
    Mat expected(2, 2);
    expected << 0, 1, -1, 0;
    Mat a = t.value(t.cayley(t.constant(s)));
    REQUIRE((a - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("random skew 6x6 yields an orthonormal matrix") {
    Rng rng(55);
    Mat raw = rng.normal_matrix(6, 6);
    Mat skew = 0.5 * (raw - Mat(raw.transpose()));
    Mat a = t.value(t.cayley(t.constant(skew)));
    REQUIRE((Mat(a.transpose()) * a - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("optimizer leaves parameters unchanged on zero gradient") {
  AdamState opt(AdamConfig{0.1, 0.9, 0.999, 1e-8});
  Mat p = Mat::Constant(2, 2, 3.0);
  Mat before = p;
  opt.begin_step();
  opt.update("p", p, Mat::Zero(2, 2));
  REQUIRE(p == before);
}

TEST_CASE("optimizer first step moves a scalar by about lr") {
  AdamState opt(AdamConfig{0.1, 0.9, 0.999, 1e-8});
  Mat p = Mat::Constant(1, 1, 1.0);
  opt.begin_step();
  opt.update("p", p, Mat::Ones(1, 1));
  // bias correction makes the first step lr * g / (|g| + eps)
  REQUIRE(p(0, 0) == Approx(0.9).margin(1e-6));
}

TEST_CASE("optimizer trajectories are bit-identical across runs") {
  auto run = [] {
    Rng rng(11);
    AdamState opt(AdamConfig{1e-2, 0.9, 0.999, 1e-8});
    Mat p = rng.normal_matrix(3, 3);
    for (int step = 0; step < 20; ++step) {
      Mat g = rng.normal_matrix(3, 3);
      opt.begin_step();
      opt.update("p", p, g);
    }
    return p;
  };
  Mat a = run();
  Mat b = run();
  REQUIRE(std::memcmp(a.data(), b.data(), sizeof(double) * size_t(a.size())) == 0);
}

TEST_CASE("optimizer rejects non-finite gradients") {
  AdamState opt;
  Mat p = Mat::Ones(1, 1);
  Mat g = Mat::Ones(1, 1);
  g(0, 0) = std::numeric_limits<double>::quiet_NaN();
  opt.begin_step();
  REQUIRE_THROWS_AS(opt.update("p", p, g), ValidationError);
}

TEST_CASE("optimizer rejects gradient shape mismatches") {
  AdamState opt;
  Mat p = Mat::Ones(2, 2);
  opt.begin_step();
  REQUIRE_THROWS_WITH(opt.update("p", p, Mat::Ones(2, 3)),
                      Catch::Contains("shape"));
}

TEST_CASE("gather rejects out-of-range rows") {
  Tape t;
  Var a = t.constant(Mat::Ones(3, 2));
  REQUIRE_THROWS_AS(t.gather_rows(a, {0, 3}), ValidationError);
}

TEST_CASE("gather, slice and concat route gradients to the right entries") {
  Rng rng(5);
  Mat x = rng.normal_matrix(4, 3);
  Tape t;
  Var xv = t.param(x);
  Var gathered = t.gather_rows(xv, {2, 0, 2});
  Var sliced = t.slice_cols(gathered, 1, 3);
  Var root = t.sum(sliced);
  t.backward(root);
  Mat g = t.grad(xv);
  REQUIRE(g(0, 0) == 0.0);
  REQUIRE(g(0, 1) == 1.0);
  REQUIRE(g(2, 1) == 2.0);  // row 2 gathered twice
  REQUIRE(g(3, 2) == 0.0);
}
