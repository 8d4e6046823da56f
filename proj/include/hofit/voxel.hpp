#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Geometry>

#include "hofit/common.hpp"
#include "hofit/mesh.hpp"

namespace hofit {
namespace detail {

// Per-axis parity tables for a fixed voxel grid: for every grid row parallel
// to `axis`, the sorted coordinates where that row's line crosses the mesh.
class CrossingTable {
 public:
  CrossingTable(const TriMesh& mesh, int axis, const Eigen::Vector3d& origin,
                double h, const Eigen::Vector3i& dims)
      : axis_(axis), origin_(origin), h_(h), dims_(dims) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    rows_.resize(static_cast<std::size_t>(dims(u)) * dims(v));
    for (const auto& f : mesh.faces) {
      // Project onto the (u, v) plane, normalized to CCW so the edge
      // functions below are all non-negative inside.
      std::array<Eigen::Vector2d, 3> q;
      std::array<double, 3> za;
      for (int k = 0; k < 3; ++k) {
        const Eigen::Vector3d& p = mesh.vertices[f[k]];
        q[k] = Eigen::Vector2d(p(u), p(v));
        za[k] = p(axis);
      }
      double area2 = (q[1].x() - q[0].x()) * (q[2].y() - q[0].y()) -
                     (q[2].x() - q[0].x()) * (q[1].y() - q[0].y());
      if (area2 == 0.0) continue;  // parallel to the ray
      if (area2 < 0.0) {
        std::swap(q[1], q[2]);
        std::swap(za[1], za[2]);
        area2 = -area2;
      }
      const double min_u = std::min({q[0].x(), q[1].x(), q[2].x()});
      const double max_u = std::max({q[0].x(), q[1].x(), q[2].x()});
      const double min_v = std::min({q[0].y(), q[1].y(), q[2].y()});
      const double max_v = std::max({q[0].y(), q[1].y(), q[2].y()});
      const int iu0 = std::max(0, cell_floor(min_u, u));
      const int iu1 = std::min(dims(u) - 1, cell_ceil(max_u, u));
      const int iv0 = std::max(0, cell_floor(min_v, v));
      const int iv1 = std::min(dims(v) - 1, cell_ceil(max_v, v));
      for (int iu = iu0; iu <= iu1; ++iu) {
        for (int iv = iv0; iv <= iv1; ++iv) {
          const Eigen::Vector2d s(origin(u) + (iu + 0.5) * h,
                                  origin(v) + (iv + 0.5) * h);
          double e[3];
          bool hit = true;
          for (int k = 0; k < 3 && hit; ++k) {
            e[k] = oriented_edge(q[k], q[(k + 1) % 3], s);
            if (e[k] < 0.0) {
              hit = false;
            } else if (e[k] == 0.0) {
              // Top-left fill rule: a sample exactly on an edge belongs to
              // the triangle whose traversal goes up, or left when level.
              const double du = q[(k + 1) % 3].x() - q[k].x();
              const double dv = q[(k + 1) % 3].y() - q[k].y();
              if (!(dv > 0.0 || (dv == 0.0 && du < 0.0))) hit = false;
            }
          }
          if (!hit) continue;
          // e[k] is proportional to the weight of the opposite vertex.
          const double w0 = e[1] / area2;
          const double w1 = e[2] / area2;
          const double w2 = e[0] / area2;
          rows_[static_cast<std::size_t>(iu) * dims(v) + iv].push_back(
              w0 * za[0] + w1 * za[1] + w2 * za[2]);
        }
      }
    }
    for (auto& row : rows_) std::sort(row.begin(), row.end());
  }

  // Parity of crossings beyond the voxel center along `axis`.
  bool inside(const Eigen::Vector3i& cell) const {
    const int u = (axis_ + 1) % 3;
    const int v = (axis_ + 2) % 3;
    const auto& row =
        rows_[static_cast<std::size_t>(cell(u)) * dims_(v) + cell(v)];
    const double coord = origin_(axis_) + (cell(axis_) + 0.5) * h_;
    const auto it = std::upper_bound(row.begin(), row.end(), coord);
    return ((row.end() - it) % 2) != 0;
  }

 private:
  // Edge function of the directed edge a->b at s, evaluated with the
  // endpoints in a canonical order so that triangles sharing an edge get
  // bit-identical magnitudes and an exactly opposite sign. Without this,
  // rounding could make both neighbors claim (or both drop) an on-edge
  // sample, which breaks the crossing parity.
  static double oriented_edge(const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b,
                              const Eigen::Vector2d& s) {
    const bool a_first =
        a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    const Eigen::Vector2d& lo = a_first ? a : b;
    const Eigen::Vector2d& hi = a_first ? b : a;
    const double val = (hi.x() - lo.x()) * (s.y() - lo.y()) -
                       (hi.y() - lo.y()) * (s.x() - lo.x());
    return a_first ? val : -val;
  }

  int cell_floor(double coord, int axis) const {
    return static_cast<int>(
        std::floor((coord - origin_(axis)) / h_ - 0.5));
  }
  int cell_ceil(double coord, int axis) const {
    return static_cast<int>(std::ceil((coord - origin_(axis)) / h_ - 0.5));
  }

  int axis_;
  Eigen::Vector3d origin_;
  double h_;
  Eigen::Vector3i dims_;
  std::vector<std::vector<double>> rows_;
};

struct ParityVote {
  bool inside;
  bool unanimous;
};

inline ParityVote vote(const std::array<const CrossingTable*, 3>& tables,
                       const Eigen::Vector3i& cell) {
  int votes = 0;
  for (int a = 0; a < 3; ++a) {
    if (tables[a]->inside(cell)) ++votes;
  }
  return {votes >= 2, votes == 0 || votes == 3};
}

}  // namespace detail

// Volume of the region covered by voxels whose centers lie inside both meshes,
// in cm^3. Inside/outside is ray-crossing parity with a 3-axis majority vote;
// the meshes must be closed. Throws open_mesh when more than 1% of the voxels
// in the candidate region get a split vote for either mesh.
inline double voxel_intersection_volume(const TriMesh& mesh_a,
                                        const TriMesh& mesh_b, double voxel) {
  require(voxel > 0.0, errc::invalid_spec, "voxel size must be positive");
  require(!mesh_a.vertices.empty() && !mesh_b.vertices.empty(),
          errc::empty_input, "empty mesh");
  const Eigen::AlignedBox3d box = mesh_a.bounds().intersection(mesh_b.bounds());
  if (box.isEmpty()) return 0.0;

  const Eigen::Vector3d origin = box.min();
  Eigen::Vector3i dims;
  for (int a = 0; a < 3; ++a) {
    dims(a) = std::max(
        1, static_cast<int>(std::ceil((box.max()(a) - origin(a)) / voxel)));
  }
  const std::int64_t cells =
      std::int64_t(dims.x()) * dims.y() * dims.z();
  require(cells <= (std::int64_t(1) << 31), errc::invalid_spec,
          "voxel grid too large; increase voxel size");

  std::array<std::unique_ptr<detail::CrossingTable>, 3> ta, tb;
  for (int a = 0; a < 3; ++a) {
    ta[a] = std::make_unique<detail::CrossingTable>(mesh_a, a, origin, voxel,
                                                    dims);
    tb[a] = std::make_unique<detail::CrossingTable>(mesh_b, a, origin, voxel,
                                                    dims);
  }
  const std::array<const detail::CrossingTable*, 3> ra{ta[0].get(), ta[1].get(),
                                                       ta[2].get()};
  const std::array<const detail::CrossingTable*, 3> rb{tb[0].get(), tb[1].get(),
                                                       tb[2].get()};

  std::int64_t inside_both = 0;
  std::int64_t split_a = 0, split_b = 0;
  Eigen::Vector3i cell;
  for (cell.x() = 0; cell.x() < dims.x(); ++cell.x()) {
    for (cell.y() = 0; cell.y() < dims.y(); ++cell.y()) {
      for (cell.z() = 0; cell.z() < dims.z(); ++cell.z()) {
        const auto va = detail::vote(ra, cell);
        const auto vb = detail::vote(rb, cell);
        if (!va.unanimous) ++split_a;
        if (!vb.unanimous) ++split_b;
        if (va.inside && vb.inside) ++inside_both;
      }
    }
  }
  if (split_a > cells / 100 || split_b > cells / 100) {
    fail(errc::open_mesh, "inconsistent parity votes on " +
                              std::to_string(std::max(split_a, split_b)) +
                              " of " + std::to_string(cells) + " voxels");
  }
  return double(inside_both) * voxel * voxel * voxel * 1e6;  // m^3 -> cm^3
}

}  // namespace hofit
