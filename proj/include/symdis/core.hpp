// Shared basics: matrix alias, error types, small helpers.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace symdis {

// Dense 64-bit matrix, row-major storage. Vectors are n x 1 columns,
// scalars are 1 x 1.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec3 = Eigen::Vector3d;

// Guard used for every normalization denominator.
inline constexpr double kNormEps = 1e-12;

// Bad caller input (shape mismatch, out-of-range index, malformed value).
// CLI maps this to exit code 1.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// File / stream problem. CLI maps this to exit code 2.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

inline void require_finite(const Mat& m, const std::string& where) {
  if (!m.allFinite())
    throw ValidationError(where + ": non-finite entries in " + shape_str(m) + " matrix");
}

}  // namespace symdis
