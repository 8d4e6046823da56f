#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "hofit/common.hpp"
#include "hofit/geometry.hpp"

namespace hofit {

struct TriMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Eigen::Vector3d> vertex_normals;  // empty until computed

  // Area-weighted average of incident face normals.
  void compute_vertex_normals() {
    vertex_normals.assign(vertices.size(), Eigen::Vector3d::Zero());
    for (const auto& f : faces) {
      const Eigen::Vector3d n =
          (vertices[f[1]] - vertices[f[0]])
              .cross(vertices[f[2]] - vertices[f[0]]);
      for (int k = 0; k < 3; ++k) vertex_normals[f[k]] += n;
    }
    for (auto& n : vertex_normals) {
      const double len = n.norm();
      if (len > 1e-20) n /= len;
    }
  }

  void validate() const {
    const int n = static_cast<int>(vertices.size());
    for (const auto& f : faces) {
      for (int k = 0; k < 3; ++k) {
        require(f[k] >= 0 && f[k] < n, errc::invariant_violation,
                "face index out of range");
      }
    }
    for (const auto& nrm : vertex_normals) {
      require(std::abs(nrm.norm() - 1.0) <= 1e-6, errc::invariant_violation,
              "vertex normal not unit length");
    }
  }

  Eigen::AlignedBox3d bounds() const {
    Eigen::AlignedBox3d box;
    for (const auto& v : vertices) box.extend(v);
    return box;
  }

  TriMesh transformed(const RigidTransform& t) const {
    TriMesh out;
    out.faces = faces;
    out.vertices.reserve(vertices.size());
    for (const auto& v : vertices) out.vertices.push_back(t(v));
    out.vertex_normals.reserve(vertex_normals.size());
    for (const auto& n : vertex_normals) {
      out.vertex_normals.push_back(t.rotation * n);
    }
    return out;
  }
};

// Signed volume by the divergence theorem; meaningful for closed meshes with
// outward-oriented faces.
inline double mesh_volume(const TriMesh& mesh) {
  double v6 = 0.0;
  for (const auto& f : mesh.faces) {
    v6 += mesh.vertices[f[0]].dot(
        mesh.vertices[f[1]].cross(mesh.vertices[f[2]]));
  }
  return v6 / 6.0;
}

// ---------------------------------------------------------------------------
// Wavefront OBJ (v / vn / f records, 1-based indices)

inline void save_obj(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::missing_input, "cannot open " + path);
  out.precision(17);
  for (const auto& v : mesh.vertices) {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const auto& n : mesh.vertex_normals) {
    out << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  }
  const bool with_normals = !mesh.vertex_normals.empty();
  for (const auto& f : mesh.faces) {
    out << 'f';
    for (int k = 0; k < 3; ++k) {
      out << ' ' << f[k] + 1;
      if (with_normals) out << "//" << f[k] + 1;
    }
    out << '\n';
  }
}

inline TriMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::missing_input, "cannot open " + path);
  TriMesh mesh;
  std::vector<Eigen::Vector3d> normals;
  std::vector<int> normal_of_vertex;  // vn index per vertex, -1 unknown
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Eigen::Vector3d v;
      if (!(ss >> v.x() >> v.y() >> v.z())) {
        fail(errc::parse_error,
             path + ":" + std::to_string(line_no) + ": bad vertex");
      }
      mesh.vertices.push_back(v);
      normal_of_vertex.push_back(-1);
    } else if (tag == "vn") {
      Eigen::Vector3d n;
      if (!(ss >> n.x() >> n.y() >> n.z())) {
        fail(errc::parse_error,
             path + ":" + std::to_string(line_no) + ": bad normal");
      }
      normals.push_back(n);
    } else if (tag == "f") {
      std::array<int, 3> vi{};
      std::string item;
      int count = 0;
      while (ss >> item && count < 3) {
        // forms: v, v/vt, v//vn, v/vt/vn
        int v_idx = 0, n_idx = -1;
        const auto first_slash = item.find('/');
        v_idx = std::stoi(item.substr(0, first_slash));
        if (first_slash != std::string::npos) {
          const auto second_slash = item.find('/', first_slash + 1);
          if (second_slash != std::string::npos &&
              second_slash + 1 < item.size()) {
            n_idx = std::stoi(item.substr(second_slash + 1));
          }
        }
        vi[count] = v_idx - 1;
        if (n_idx > 0 && vi[count] >= 0 &&
            vi[count] < static_cast<int>(normal_of_vertex.size())) {
          normal_of_vertex[vi[count]] = n_idx - 1;
        }
        ++count;
      }
      if (count != 3) {
        fail(errc::parse_error, path + ":" + std::to_string(line_no) +
                                    ": only triangular faces supported");
      }
      mesh.faces.push_back(vi);
    }
  }
  if (!normals.empty()) {
    mesh.vertex_normals.assign(mesh.vertices.size(), Eigen::Vector3d::Zero());
    bool all_mapped = true;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const int ni = normal_of_vertex[i];
      if (ni >= 0 && ni < static_cast<int>(normals.size())) {
        mesh.vertex_normals[i] = normals[ni];
      } else if (i < normals.size()) {
        mesh.vertex_normals[i] = normals[i];  // common vn-per-v layout
      } else {
        all_mapped = false;
      }
    }
    if (!all_mapped) mesh.compute_vertex_normals();
  }
  mesh.validate();
  return mesh;
}

// ---------------------------------------------------------------------------
// Binary little-endian PLY (float32 coordinates, uchar-count face lists)

namespace detail {

template <typename T>
void write_le(std::ostream& out, T value) {
  // Assumes little-endian host, which holds for every target we build on.
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace detail

inline void save_ply(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::missing_input, "cannot open " + path);
  const bool with_normals = !mesh.vertex_normals.empty();
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (with_normals) {
    out << "property float nx\nproperty float ny\nproperty float nz\n";
  }
  out << "element face " << mesh.faces.size() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      detail::write_le(out, static_cast<float>(mesh.vertices[i](k)));
    }
    if (with_normals) {
      for (int k = 0; k < 3; ++k) {
        detail::write_le(out, static_cast<float>(mesh.vertex_normals[i](k)));
      }
    }
  }
  for (const auto& f : mesh.faces) {
    detail::write_le<std::uint8_t>(out, 3);
    for (int k = 0; k < 3; ++k) detail::write_le<std::int32_t>(out, f[k]);
  }
}

inline TriMesh load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::missing_input, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  require(line == "ply", errc::parse_error, path + ": not a PLY file");
  std::getline(in, line);
  require(line.rfind("format binary_little_endian", 0) == 0, errc::parse_error,
          path + ": only binary little-endian PLY supported");

  struct Property {
    std::string name;
    std::string type;
  };
  std::size_t n_vertices = 0, n_faces = 0;
  std::vector<Property> vertex_props;
  std::string current_element;
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "element") {
      std::string name;
      std::size_t count;
      ss >> name >> count;
      current_element = name;
      if (name == "vertex") n_vertices = count;
      if (name == "face") n_faces = count;
    } else if (tag == "property" && current_element == "vertex") {
      Property p;
      ss >> p.type >> p.name;
      vertex_props.push_back(p);
    }
  }

  auto scalar_size = [&](const std::string& t) -> std::size_t {
    if (t == "float" || t == "float32" || t == "int" || t == "int32" ||
        t == "uint" || t == "uint32")
      return 4;
    if (t == "double" || t == "float64") return 8;
    if (t == "uchar" || t == "char" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16")
      return 2;
    fail(errc::parse_error, path + ": unsupported property type " + t);
  };

  TriMesh mesh;
  mesh.vertices.resize(n_vertices);
  bool has_normals = false;
  for (const auto& p : vertex_props) {
    if (p.name == "nx") has_normals = true;
  }
  if (has_normals) {
    mesh.vertex_normals.assign(n_vertices, Eigen::Vector3d::Zero());
  }
  for (std::size_t i = 0; i < n_vertices; ++i) {
    for (const auto& p : vertex_props) {
      double value = 0.0;
      if (p.type == "float" || p.type == "float32") {
        value = detail::read_le<float>(in);
      } else if (p.type == "double" || p.type == "float64") {
        value = detail::read_le<double>(in);
      } else {
        in.ignore(static_cast<std::streamsize>(scalar_size(p.type)));
        continue;
      }
      if (p.name == "x") mesh.vertices[i].x() = value;
      else if (p.name == "y") mesh.vertices[i].y() = value;
      else if (p.name == "z") mesh.vertices[i].z() = value;
      else if (p.name == "nx") mesh.vertex_normals[i].x() = value;
      else if (p.name == "ny") mesh.vertex_normals[i].y() = value;
      else if (p.name == "nz") mesh.vertex_normals[i].z() = value;
    }
  }
  mesh.faces.resize(n_faces);
  for (std::size_t i = 0; i < n_faces; ++i) {
    const auto count = detail::read_le<std::uint8_t>(in);
    require(count == 3, errc::parse_error,
            path + ": only triangular faces supported");
    for (int k = 0; k < 3; ++k) {
      mesh.faces[i][k] = detail::read_le<std::int32_t>(in);
    }
  }
  require(in.good(), errc::parse_error, path + ": truncated PLY payload");
  if (has_normals) {
    // float32 storage perturbs unit length; renormalize.
    for (auto& n : mesh.vertex_normals) {
      const double len = n.norm();
      if (len > 1e-20) n /= len;
    }
  }
  mesh.validate();
  return mesh;
}

// ---------------------------------------------------------------------------
// Primitive builders (test scenes and the synthetic capture harness)

// Axis-aligned box with each face an n x n vertex grid. Edge vertices are
// duplicated between faces; the surface is still geometrically closed.
inline TriMesh make_box(const Eigen::Vector3d& center,
                        const Eigen::Vector3d& half_extents,
                        int subdivisions = 1) {
  TriMesh mesh;
  const int n = std::max(1, subdivisions);
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign = -1; sign <= 1; sign += 2) {
      const int u_axis = (axis + 1) % 3;
      const int v_axis = (axis + 2) % 3;
      const int base = static_cast<int>(mesh.vertices.size());
      for (int iu = 0; iu <= n; ++iu) {
        for (int iv = 0; iv <= n; ++iv) {
          Eigen::Vector3d p = center;
          p(axis) += sign * half_extents(axis);
          p(u_axis) += (-1.0 + 2.0 * iu / n) * half_extents(u_axis);
          p(v_axis) += (-1.0 + 2.0 * iv / n) * half_extents(v_axis);
          mesh.vertices.push_back(p);
        }
      }
      for (int iu = 0; iu < n; ++iu) {
        for (int iv = 0; iv < n; ++iv) {
          const int a = base + iu * (n + 1) + iv;
          const int b = a + (n + 1);
          // Winding flips with face sign to keep normals outward.
          if (sign > 0) {
            mesh.faces.push_back({a, b, a + 1});
            mesh.faces.push_back({a + 1, b, b + 1});
          } else {
            mesh.faces.push_back({a, a + 1, b});
            mesh.faces.push_back({a + 1, b + 1, b});
          }
        }
      }
    }
  }
  mesh.compute_vertex_normals();
  return mesh;
}

inline TriMesh make_uv_sphere(const Eigen::Vector3d& center, double radius,
                              int n_lat = 24, int n_lon = 32) {
  TriMesh mesh;
  mesh.vertices.push_back(center + Eigen::Vector3d(0, 0, radius));
  for (int i = 1; i < n_lat; ++i) {
    const double phi = std::numbers::pi * i / n_lat;  // from +z pole
    for (int j = 0; j < n_lon; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / n_lon;
      mesh.vertices.push_back(
          center + radius * Eigen::Vector3d(std::sin(phi) * std::cos(theta),
                                            std::sin(phi) * std::sin(theta),
                                            std::cos(phi)));
    }
  }
  mesh.vertices.push_back(center + Eigen::Vector3d(0, 0, -radius));
  const int south = static_cast<int>(mesh.vertices.size()) - 1;
  auto ring = [&](int i, int j) { return 1 + (i - 1) * n_lon + (j % n_lon); };
  for (int j = 0; j < n_lon; ++j) {
    mesh.faces.push_back({0, ring(1, j), ring(1, j + 1)});
    mesh.faces.push_back({south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)});
  }
  for (int i = 1; i < n_lat - 1; ++i) {
    for (int j = 0; j < n_lon; ++j) {
      const int a = ring(i, j), b = ring(i, j + 1);
      const int c = ring(i + 1, j), d = ring(i + 1, j + 1);
      mesh.faces.push_back({a, c, b});
      mesh.faces.push_back({b, c, d});
    }
  }
  // Exact analytic normals.
  mesh.vertex_normals.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) {
    mesh.vertex_normals.push_back((v - center).normalized());
  }
  return mesh;
}

// Sphere stretched per axis; normals follow the implicit-surface gradient.
inline TriMesh make_ellipsoid(const Eigen::Vector3d& center,
                              const Eigen::Vector3d& radii, int n_lat = 24,
                              int n_lon = 32) {
  TriMesh mesh = make_uv_sphere(Eigen::Vector3d::Zero(), 1.0, n_lat, n_lon);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Eigen::Vector3d unit = mesh.vertices[i];
    mesh.vertices[i] = center + unit.cwiseProduct(radii);
    mesh.vertex_normals[i] =
        unit.cwiseQuotient(radii).normalized();
  }
  return mesh;
}

}  // namespace hofit
