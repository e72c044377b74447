// Per-vertex descriptor fields (the feature stack F and its flipped
// counterpart) plus ground-truth annotations.
//
// SDF1 binary layout, little-endian:
//   magic "SDF1" | u32 version=1 | u64 |V| | u64 d |
//   |V|*d float32 row-major (F) | |V|*d float32 row-major (flipped F)
//
// Annotation files are ASCII, one line per vertex:
//   <sym_index> <lr_label> [<corr_index>]
// where sym_index is the intrinsic symmetric counterpart (-1 = unannotated),
// lr_label is -1 or +1, and the optional third column is an inter-shape
// correspondence target. '#' starts a comment.
#pragma once

#include "symdis/core.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace symdis {

struct DescriptorField {
  Mat values;   // |V| x d
  Mat flipped;  // |V| x d

  int dim() const { return int(values.cols()); }
  int vertex_count() const { return int(values.rows()); }
};

struct GroundTruth {
  std::vector<int> sym_map;    // -1 = unannotated
  std::vector<int> lr_labels;  // -1 or +1
  std::vector<int> corr;       // empty when absent
  bool has_corr() const { return !corr.empty(); }
};

// Row-wise unit L2 normalization of a bare matrix (no gradient tracking).
inline Mat row_l2_normalize(const Mat& x, double eps = kNormEps) {
  Mat out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double n = x.row(r).norm();
    if (n > eps)
      out.row(r) = x.row(r) / n;
    else
      out.row(r).setZero();
  }
  return out;
}

inline DescriptorField normalize(const DescriptorField& field, double eps = kNormEps) {
  return {row_l2_normalize(field.values, eps), row_l2_normalize(field.flipped, eps)};
}

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
inline void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}
inline std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v;
  if (!in.read(reinterpret_cast<char*>(&v), 4))
    throw IoError("'" + path + "': truncated at byte " + std::to_string(in.tellg()));
  return v;
}
inline std::uint64_t read_u64(std::istream& in, const std::string& path) {
  std::uint64_t v;
  if (!in.read(reinterpret_cast<char*>(&v), 8))
    throw IoError("'" + path + "': truncated at byte " + std::to_string(in.tellg()));
  return v;
}

inline void write_f32_matrix(std::ostream& out, const Mat& m) {
  std::vector<float> row(static_cast<size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[size_t(c)] = float(m(r, c));
    out.write(reinterpret_cast<const char*>(row.data()),
              std::streamsize(row.size() * sizeof(float)));
  }
}

inline Mat read_f32_matrix(std::istream& in, std::uint64_t rows, std::uint64_t cols,
                           const std::string& path) {
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<float> row(static_cast<size_t>(cols));
  for (std::uint64_t r = 0; r < rows; ++r) {
    if (!in.read(reinterpret_cast<char*>(row.data()),
                 std::streamsize(row.size() * sizeof(float))))
      throw IoError("'" + path + "': payload truncated at byte " +
                    std::to_string(in.tellg()) + " (expected " +
                    std::to_string(rows * cols) + " floats per matrix)");
    for (std::uint64_t c = 0; c < cols; ++c)
      m(Eigen::Index(r), Eigen::Index(c)) = double(row[size_t(c)]);
  }
  return m;
}

}  // namespace detail

inline void save_descriptors(const std::string& path, const DescriptorField& field) {
  require(field.values.rows() == field.flipped.rows() &&
              field.values.cols() == field.flipped.cols(),
          "save_descriptors: values " + shape_str(field.values) + " vs flipped " +
              shape_str(field.flipped));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write("SDF1", 4);
  detail::write_u32(out, 1);
  detail::write_u64(out, std::uint64_t(field.values.rows()));
  detail::write_u64(out, std::uint64_t(field.values.cols()));
  detail::write_f32_matrix(out, field.values);
  detail::write_f32_matrix(out, field.flipped);
  if (!out) throw IoError("write failed on '" + path + "'");
}

inline DescriptorField load_descriptors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SDF1", 4) != 0)
    throw IoError("'" + path + "': bad magic at byte 0 (expected SDF1)");
  std::uint32_t version = detail::read_u32(in, path);
  if (version != 1)
    throw IoError("'" + path + "': unsupported SDF1 version " + std::to_string(version));
  std::uint64_t vcount = detail::read_u64(in, path);
  std::uint64_t d = detail::read_u64(in, path);
  if (d == 0) throw IoError("'" + path + "': descriptor dimension 0");
  if (vcount == 0) throw IoError("'" + path + "': vertex count 0");
  DescriptorField field;
  field.values = detail::read_f32_matrix(in, vcount, d, path);
  field.flipped = detail::read_f32_matrix(in, vcount, d, path);
  if (!field.values.allFinite() || !field.flipped.allFinite())
    throw IoError("'" + path + "': non-finite descriptor entries");
  return field;
}

inline void save_annotations(const std::string& path, const GroundTruth& gt) {
  require(gt.sym_map.size() == gt.lr_labels.size(),
          "save_annotations: field lengths disagree");
  require(gt.corr.empty() || gt.corr.size() == gt.sym_map.size(),
          "save_annotations: correspondence length disagrees");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "# per vertex: <sym_index> <lr_label>";
  if (gt.has_corr()) out << " <corr_index>";
  out << "\n";
  for (size_t v = 0; v < gt.sym_map.size(); ++v) {
    out << gt.sym_map[v] << ' ' << gt.lr_labels[v];
    if (gt.has_corr()) out << ' ' << gt.corr[v];
    out << '\n';
  }
  if (!out) throw IoError("write failed on '" + path + "'");
}

inline GroundTruth load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  GroundTruth gt;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    int sym, lr;
    if (!(ss >> sym)) continue;  // blank/comment line
    if (!(ss >> lr))
      throw IoError("'" + path + "' line " + std::to_string(lineno) +
                    ": expected '<sym_index> <lr_label>'");
    if (lr != -1 && lr != 1)
      throw IoError("'" + path + "' line " + std::to_string(lineno) +
                    ": lr_label must be -1 or +1, got " + std::to_string(lr));
    if (sym < -1)
      throw IoError("'" + path + "' line " + std::to_string(lineno) +
                    ": sym_index must be >= -1");
    gt.sym_map.push_back(sym);
    gt.lr_labels.push_back(lr);
    int corr;
    if (ss >> corr) gt.corr.push_back(corr);
  }
  if (!gt.corr.empty() && gt.corr.size() != gt.sym_map.size())
    throw IoError("'" + path + "': correspondence column present on some lines only");
  return gt;
}

}  // namespace symdis
