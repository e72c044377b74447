// OBJ (ASCII) and PLY (ASCII + binary little-endian) mesh readers and
// writers. Polygon faces are fan-triangulated. The PLY writer stores
// positions as doubles so save/load round-trips are bit-exact, and can
// attach per-vertex uchar RGB for visualization.
#pragma once

#include "symdis/mesh.hpp"

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace symdis {

struct VertexColor {
  std::uint8_t r = 0, g = 0, b = 0;
};

struct MeshWithColors {
  TriMesh mesh;
  std::vector<VertexColor> colors;  // empty when the file has none
};

namespace detail {

inline void fan_triangulate(const std::vector<int>& poly, size_t line_or_face,
                            const char* what, std::vector<std::array<int, 3>>& out) {
  if (poly.size() < 3)
    throw IoError(std::string(what) + " " + std::to_string(line_or_face) +
                  ": face with fewer than 3 vertices");
  for (size_t k = 1; k + 1 < poly.size(); ++k)
    out.push_back({poly[0], poly[k], poly[k + 1]});
}

inline int parse_obj_index(const std::string& token, int vertex_count, size_t line) {
  // accept i, i/t, i//n, i/t/n; only the vertex index matters here
  size_t slash = token.find('/');
  std::string head = slash == std::string::npos ? token : token.substr(0, slash);
  int idx = 0;
  try {
    idx = std::stoi(head);
  } catch (const std::exception&) {
    throw IoError("obj line " + std::to_string(line) + ": bad face index '" + token + "'");
  }
  if (idx < 0) idx = vertex_count + 1 + idx;  // relative indexing
  if (idx < 1 || idx > vertex_count)
    throw IoError("obj line " + std::to_string(line) + ": vertex index " + head +
                  " outside [1, " + std::to_string(vertex_count) + "]");
  return idx - 1;
}

}  // namespace detail

inline TriMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  TriMesh mesh;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw IoError("obj line " + std::to_string(lineno) + ": unparseable vertex record");
      mesh.positions.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string token;
      while (ss >> token)
        poly.push_back(detail::parse_obj_index(token, mesh.vertex_count(), lineno));
      detail::fan_triangulate(poly, lineno, "obj line", mesh.faces);
    }
    // other records (vn, vt, usemtl, ...) are ignored
  }
  validate_mesh(mesh);
  return mesh;
}

inline void save_obj(const std::string& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  char buf[128];
  for (const Vec3& p : mesh.positions) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  for (const auto& f : mesh.faces)
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw IoError("write failed on '" + path + "'");
}

namespace detail {

struct PlyProperty {
  std::string type;  // float, double, uchar, int, ...
  std::string name;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> props;
};

inline size_t ply_scalar_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw IoError("ply: unknown property type '" + t + "'");
}

inline double ply_read_scalar_binary(std::istream& in, const std::string& type) {
  unsigned char raw[8];
  size_t sz = ply_scalar_size(type);
  if (!in.read(reinterpret_cast<char*>(raw), std::streamsize(sz)))
    throw IoError("ply: truncated binary payload at offset " +
                  std::to_string(in.tellg()));
  if (type == "float" || type == "float32") {
    float f;
    std::memcpy(&f, raw, 4);
    return double(f);
  }
  if (type == "double" || type == "float64") {
    double d;
    std::memcpy(&d, raw, 8);
    return d;
  }
  // integral types, little-endian
  std::uint64_t u = 0;
  for (size_t i = 0; i < sz; ++i) u |= std::uint64_t(raw[i]) << (8 * i);
  bool sign = type[0] != 'u';
  if (sign) {
    // sign-extend
    if (sz < 8 && (u & (std::uint64_t(1) << (8 * sz - 1))))
      u |= ~std::uint64_t(0) << (8 * sz);
    return double(std::int64_t(u));
  }
  return double(u);
}

inline double ply_read_scalar_ascii(std::istream& in) {
  double v;
  if (!(in >> v)) throw IoError("ply: unparseable ascii payload");
  return v;
}

}  // namespace detail

inline MeshWithColors load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0)
    throw IoError("'" + path + "': not a PLY file");
  bool binary = false;
  std::vector<detail::PlyElement> elements;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "comment" || tag.empty()) continue;
    if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        throw IoError("ply: unsupported format '" + fmt + "'");
    } else if (tag == "element") {
      detail::PlyElement el;
      ss >> el.name >> el.count;
      elements.push_back(el);
    } else if (tag == "property") {
      if (elements.empty()) throw IoError("ply: property before element");
      detail::PlyProperty p;
      std::string t;
      ss >> t;
      if (t == "list") {
        p.is_list = true;
        ss >> p.count_type >> p.type >> p.name;
      } else {
        p.type = t;
        ss >> p.name;
      }
      elements.back().props.push_back(p);
    } else if (tag == "end_header") {
      break;
    } else if (tag == "obj_info") {
      continue;
    } else {
      throw IoError("ply: unrecognized header line '" + line + "'");
    }
  }

  MeshWithColors result;
  auto read_scalar = [&](const std::string& type) {
    return binary ? detail::ply_read_scalar_binary(in, type)
                  : detail::ply_read_scalar_ascii(in);
  };
  for (const auto& el : elements) {
    if (el.name == "vertex") {
      int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
      for (size_t i = 0; i < el.props.size(); ++i) {
        if (el.props[i].is_list) throw IoError("ply: list property on vertex element");
        const std::string& n = el.props[i].name;
        if (n == "x") ix = int(i);
        if (n == "y") iy = int(i);
        if (n == "z") iz = int(i);
        if (n == "red") ir = int(i);
        if (n == "green") ig = int(i);
        if (n == "blue") ib = int(i);
      }
      if (ix < 0 || iy < 0 || iz < 0) throw IoError("ply: vertex element lacks x/y/z");
      bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
      result.mesh.positions.reserve(el.count);
      for (size_t v = 0; v < el.count; ++v) {
        std::vector<double> vals(el.props.size());
        for (size_t i = 0; i < el.props.size(); ++i) vals[i] = read_scalar(el.props[i].type);
        result.mesh.positions.emplace_back(vals[size_t(ix)], vals[size_t(iy)], vals[size_t(iz)]);
        if (has_color)
          result.colors.push_back({std::uint8_t(vals[size_t(ir)]),
                                   std::uint8_t(vals[size_t(ig)]),
                                   std::uint8_t(vals[size_t(ib)])});
      }
    } else if (el.name == "face") {
      for (size_t f = 0; f < el.count; ++f) {
        for (const auto& p : el.props) {
          if (!p.is_list) {
            read_scalar(p.type);
            continue;
          }
          size_t cnt = size_t(read_scalar(p.count_type));
          std::vector<int> poly(cnt);
          for (size_t k = 0; k < cnt; ++k) {
            double idx = read_scalar(p.type);
            int i = int(idx);
            if (i < 0 || i >= result.mesh.vertex_count())
              throw IoError("ply face " + std::to_string(f) + ": vertex index " +
                            std::to_string(i) + " out of range");
            poly[k] = i;
          }
          if (p.name == "vertex_indices" || p.name == "vertex_index")
            detail::fan_triangulate(poly, f, "ply face", result.mesh.faces);
        }
      }
    } else {
      throw IoError("ply: unsupported element '" + el.name + "'");
    }
  }
  validate_mesh(result.mesh);
  return result;
}

inline TriMesh load_mesh(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".obj") return load_obj(path);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".ply")
    return load_ply(path).mesh;
  throw IoError("'" + path + "': unknown mesh extension (expected .obj or .ply)");
}

// Binary little-endian PLY with double positions; colors optional.
inline void save_ply(const std::string& path, const TriMesh& mesh,
                     const std::vector<VertexColor>* colors = nullptr, bool binary = true) {
  if (colors)
    require(colors->size() == mesh.positions.size(),
            "save_ply: color count " + std::to_string(colors->size()) + " vs " +
                std::to_string(mesh.positions.size()) + " vertices");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << mesh.positions.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (colors)
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << mesh.faces.size() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";
  if (binary) {
    for (size_t v = 0; v < mesh.positions.size(); ++v) {
      double xyz[3] = {mesh.positions[v].x(), mesh.positions[v].y(), mesh.positions[v].z()};
      out.write(reinterpret_cast<const char*>(xyz), sizeof xyz);
      if (colors) {
        const VertexColor& c = (*colors)[v];
        std::uint8_t rgb[3] = {c.r, c.g, c.b};
        out.write(reinterpret_cast<const char*>(rgb), 3);
      }
    }
    for (const auto& f : mesh.faces) {
      std::uint8_t n = 3;
      out.write(reinterpret_cast<const char*>(&n), 1);
      std::int32_t idx[3] = {f[0], f[1], f[2]};
      out.write(reinterpret_cast<const char*>(idx), sizeof idx);
    }
  } else {
    char buf[160];
    for (size_t v = 0; v < mesh.positions.size(); ++v) {
      const Vec3& p = mesh.positions[v];
      std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", p.x(), p.y(), p.z());
      out << buf;
      if (colors) {
        const VertexColor& c = (*colors)[v];
        out << ' ' << int(c.r) << ' ' << int(c.g) << ' ' << int(c.b);
      }
      out << '\n';
    }
    for (const auto& f : mesh.faces)
      out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
  if (!out) throw IoError("write failed on '" + path + "'");
}

}  // namespace symdis
