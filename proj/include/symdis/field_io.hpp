// Small binary containers for inference outputs, little-endian:
//   CHI1: magic "CHI1" | u32 version=1 | u64 n | n float32   (scalar field)
//   SDM1: magic "SDM1" | u32 version=1 | u64 rows | u64 cols | float32 data
// plus the text format for binary labelings (one 0/1 per line).
#pragma once

#include "symdis/descriptors.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace symdis {

inline void save_chi(const std::string& path, const std::vector<double>& chi) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write("CHI1", 4);
  detail::write_u32(out, 1);
  detail::write_u64(out, chi.size());
  for (double v : chi) {
    float f = float(v);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
  if (!out) throw IoError("write failed on '" + path + "'");
}

inline std::vector<double> load_chi(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "CHI1", 4) != 0)
    throw IoError("'" + path + "': bad magic (expected CHI1)");
  std::uint32_t version = detail::read_u32(in, path);
  if (version != 1)
    throw IoError("'" + path + "': unsupported CHI1 version " + std::to_string(version));
  std::uint64_t n = detail::read_u64(in, path);
  std::vector<double> chi(n);
  for (std::uint64_t v = 0; v < n; ++v) {
    float f;
    if (!in.read(reinterpret_cast<char*>(&f), 4))
      throw IoError("'" + path + "': truncated at byte " + std::to_string(in.tellg()));
    chi[v] = double(f);
  }
  return chi;
}

inline void save_matrix(const std::string& path, const Mat& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write("SDM1", 4);
  detail::write_u32(out, 1);
  detail::write_u64(out, std::uint64_t(m.rows()));
  detail::write_u64(out, std::uint64_t(m.cols()));
  detail::write_f32_matrix(out, m);
  if (!out) throw IoError("write failed on '" + path + "'");
}

inline Mat load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SDM1", 4) != 0)
    throw IoError("'" + path + "': bad magic (expected SDM1)");
  std::uint32_t version = detail::read_u32(in, path);
  if (version != 1)
    throw IoError("'" + path + "': unsupported SDM1 version " + std::to_string(version));
  std::uint64_t rows = detail::read_u64(in, path);
  std::uint64_t cols = detail::read_u64(in, path);
  return detail::read_f32_matrix(in, rows, cols, path);
}

inline void save_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (std::uint8_t l : labels) out << int(l) << '\n';
  if (!out) throw IoError("write failed on '" + path + "'");
}

inline std::vector<std::uint8_t> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::uint8_t> labels;
  int v;
  while (in >> v) {
    if (v != 0 && v != 1)
      throw IoError("'" + path + "': labels must be 0 or 1, got " + std::to_string(v));
    labels.push_back(std::uint8_t(v));
  }
  return labels;
}

}  // namespace symdis
