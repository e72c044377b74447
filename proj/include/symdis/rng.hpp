// Deterministic random number generator. All randomness in the project
// flows through this so that runs with equal seeds are byte-identical
// regardless of standard-library internals.
#pragma once

#include "symdis/core.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace symdis {

// splitmix64 stream; small state, good mixing, trivially reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // modulo bias is < 2^-40 for the n used here; acceptable and deterministic
    return next_u64() % n;
  }

  // Standard normal via Box-Muller (no cached spare, keeps the stream simple).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Mat normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev = 1.0) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = stddev * normal();
    return m;
  }

  // k distinct indices from [0, n), ascending. Partial Fisher-Yates then sort.
  std::vector<int> sample_without_replacement(int n, int k) {
    require(k <= n, "sample_without_replacement: k > n");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + int(uniform_int(std::uint64_t(n - i)));
      std::swap(pool[i], pool[j]);
    }
    std::vector<int> out(pool.begin(), pool.begin() + k);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Derive an independent stream (e.g. per shape, per step).
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
    Rng r(seed ^ (0x632be59bd9b4e019ULL * (salt + 1)));
    return r.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace symdis
