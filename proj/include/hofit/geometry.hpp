#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "hofit/common.hpp"

namespace hofit {

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Rodrigues' formula.
inline Eigen::Matrix3d axis_angle_to_matrix(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-12) {
    return Eigen::Matrix3d::Identity() + skew(w);
  }
  const Eigen::Vector3d axis = w / angle;
  const Eigen::Matrix3d k = skew(axis);
  return Eigen::Matrix3d::Identity() + std::sin(angle) * k +
         (1.0 - std::cos(angle)) * k * k;
}

inline Eigen::Vector3d matrix_to_axis_angle(const Eigen::Matrix3d& r) {
  const double cos_angle =
      std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double angle = std::acos(cos_angle);
  if (angle < 1e-9) return Eigen::Vector3d::Zero();
  if (angle > std::acos(-1.0) - 1e-6) {
    // Near pi the off-diagonal extraction degenerates; take the axis from the
    // dominant column of R + I.
    const Eigen::Matrix3d m = r + Eigen::Matrix3d::Identity();
    int col = 0;
    m.colwise().norm().maxCoeff(&col);
    Eigen::Vector3d axis = m.col(col).normalized();
    Eigen::Vector3d v(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0),
                      r(1, 0) - r(0, 1));
    if (axis.dot(v) < 0) axis = -axis;
    return angle * axis;
  }
  Eigen::Vector3d axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0),
                       r(1, 0) - r(0, 1));
  return axis * (angle / (2.0 * std::sin(angle)));
}

// dR/dw_i for R = exp([w]x), the Gallego-Yezzi closed form. At w = 0 this
// reduces to [e_i]x.
inline std::array<Eigen::Matrix3d, 3> axis_angle_jacobians(
    const Eigen::Vector3d& w) {
  std::array<Eigen::Matrix3d, 3> out;
  const double n2 = w.squaredNorm();
  const Eigen::Matrix3d r = axis_angle_to_matrix(w);
  if (n2 < 1e-16) {
    for (int i = 0; i < 3; ++i) {
      out[i] = skew(Eigen::Vector3d::Unit(i));
    }
    return out;
  }
  const Eigen::Matrix3d wx = skew(w);
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d ei = Eigen::Vector3d::Unit(i);
    const Eigen::Vector3d v =
        w.cross((Eigen::Matrix3d::Identity() - r) * ei);
    out[i] = ((w(i) * wx + skew(v)) / n2) * r;
  }
  return out;
}

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  static RigidTransform from_axis_angle(const Eigen::Vector3d& w,
                                        const Eigen::Vector3d& t) {
    return {axis_angle_to_matrix(w), t};
  }

  Eigen::Vector3d operator()(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }

  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation,
            rotation * other.translation + translation};
  }

  // R'R = I and det(R) = +1, both within tol.
  bool is_valid(double tol = 1e-9) const {
    const Eigen::Matrix3d err =
        rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

// Geodesic angle between two rotations. atan2 of the skew and trace parts
// stays accurate near 0, where acos of the trace alone bottoms out at ~1e-8.
inline double rotation_angle_between(const Eigen::Matrix3d& a,
                                     const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d r = a.transpose() * b;
  const Eigen::Vector3d s(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0),
                          r(1, 0) - r(0, 1));
  return std::atan2(0.5 * s.norm(), 0.5 * (r.trace() - 1.0));
}

// Pinhole camera with optional k1/k2 radial distortion. The extrinsic maps
// world to camera coordinates.
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  RigidTransform extrinsic;

  Eigen::Vector3d center() const {
    return -(extrinsic.rotation.transpose() * extrinsic.translation);
  }

  bool has_distortion() const { return k1 != 0.0 || k2 != 0.0; }

  // jacobian, when requested, is d(pixel)/d(world point).
  Eigen::Vector2d project(const Eigen::Vector3d& world,
                          Eigen::Matrix<double, 2, 3>* jacobian = nullptr)
      const {
    const Eigen::Vector3d pc = extrinsic(world);
    if (pc.z() <= 1e-9) {
      fail(errc::non_positive_depth,
           "point at depth " + std::to_string(pc.z()));
    }
    const double x = pc.x() / pc.z();
    const double y = pc.y() / pc.z();
    const double r2 = x * x + y * y;
    const double d = 1.0 + k1 * r2 + k2 * r2 * r2;
    const Eigen::Vector2d px(fx * x * d + cx, fy * y * d + cy);
    if (jacobian) {
      const double dd = k1 + 2.0 * k2 * r2;  // d(d)/d(r2)
      Eigen::Matrix2d duv_dxy;
      duv_dxy << fx * (d + 2.0 * x * x * dd), fx * 2.0 * x * y * dd,
          fy * 2.0 * x * y * dd, fy * (d + 2.0 * y * y * dd);
      Eigen::Matrix<double, 2, 3> dxy_dpc;
      const double iz = 1.0 / pc.z();
      dxy_dpc << iz, 0, -x * iz, 0, iz, -y * iz;
      *jacobian = duv_dxy * dxy_dpc * extrinsic.rotation;
    }
    return px;
  }

  // Undistorted normalized image coordinates (x/z, y/z) for a pixel.
  Eigen::Vector2d normalized(const Eigen::Vector2d& px) const {
    double x = (px.x() - cx) / fx;
    double y = (px.y() - cy) / fy;
    if (has_distortion()) {
      // Fixed-point undistortion; converges fast for desk-level k1/k2.
      const double xd = x, yd = y;
      for (int it = 0; it < 10; ++it) {
        const double r2 = x * x + y * y;
        const double d = 1.0 + k1 * r2 + k2 * r2 * r2;
        x = xd / d;
        y = yd / d;
      }
    }
    return {x, y};
  }

  // Unit ray direction in world coordinates through the given pixel.
  Eigen::Vector3d ray_direction(const Eigen::Vector2d& px) const {
    const Eigen::Vector2d n = normalized(px);
    const Eigen::Vector3d dir_cam(n.x(), n.y(), 1.0);
    return (extrinsic.rotation.transpose() * dir_cam).normalized();
  }
};

// Midpoint of the common perpendicular between the two back-projected rays.
inline Eigen::Vector3d triangulate_pair(const CameraModel& cam_a,
                                        const CameraModel& cam_b,
                                        const Eigen::Vector2d& px_a,
                                        const Eigen::Vector2d& px_b) {
  const Eigen::Vector3d oa = cam_a.center();
  const Eigen::Vector3d ob = cam_b.center();
  if ((oa - ob).norm() <= 1e-6) {
    fail(errc::degenerate_baseline, "camera centers coincide");
  }
  const Eigen::Vector3d da = cam_a.ray_direction(px_a);
  const Eigen::Vector3d db = cam_b.ray_direction(px_b);
  const double cos_angle = std::clamp(std::abs(da.dot(db)), 0.0, 1.0);
  constexpr double kMinAngleRad = 0.1 * std::numbers::pi / 180.0;
  if (std::acos(cos_angle) < kMinAngleRad) {
    fail(errc::near_parallel_rays, "ray angle below 0.1 deg");
  }
  const Eigen::Vector3d w = ob - oa;
  const double dab = da.dot(db);
  // [1 -dab; dab -1] [s; t] = [w.da; w.db]
  const double det = -1.0 + dab * dab;
  const double s = (-w.dot(da) + dab * w.dot(db)) / det;
  const double t = (w.dot(db) - dab * w.dot(da)) / det;
  return 0.5 * ((oa + s * da) + (ob + t * db));
}

struct AlignResult {
  RigidTransform transform;
  double scale = 1.0;
  double rms = 0.0;  // residual after alignment, meters
};

// Umeyama alignment: minimizes sum ||s R src_i + t - tgt_i||^2. with_scale
// false fixes s = 1 (Kabsch).
inline AlignResult rigid_align(const std::vector<Eigen::Vector3d>& source,
                               const std::vector<Eigen::Vector3d>& target,
                               bool with_scale = false) {
  require(source.size() == target.size(), errc::shape_mismatch,
          "point sets differ in size");
  const auto n = source.size();
  require(n >= 3, errc::rank_deficient, "need at least 3 correspondences");

  Eigen::Vector3d mu_s = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_t = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_s += source[i];
    mu_t += target[i];
  }
  mu_s /= double(n);
  mu_t /= double(n);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d scatter_s = Eigen::Matrix3d::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d ds = source[i] - mu_s;
    const Eigen::Vector3d dt = target[i] - mu_t;
    cov += dt * ds.transpose();
    scatter_s += ds * ds.transpose();
    var_s += ds.squaredNorm();
  }
  cov /= double(n);
  var_s /= double(n);

  // Collinear sources leave the rotation about the line unconstrained.
  {
    Eigen::JacobiSVD<Eigen::Matrix3d> ssvd(scatter_s);
    const auto& sv = ssvd.singularValues();
    if (sv(1) <= 1e-12 * std::max(sv(0), 1e-300)) {
      fail(errc::rank_deficient, "source points are collinear");
    }
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d_fix = Eigen::Vector3d::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) {
    d_fix(2) = -1.0;
  }
  const Eigen::Matrix3d r =
      svd.matrixU() * d_fix.asDiagonal() * svd.matrixV().transpose();

  double scale = 1.0;
  if (with_scale) {
    require(var_s > 0.0, errc::rank_deficient, "zero-variance source");
    scale = svd.singularValues().dot(d_fix) / var_s;
  }

  AlignResult result;
  result.transform.rotation = r;
  result.transform.translation = mu_t - scale * (r * mu_s);
  result.scale = scale;

  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ss += (scale * (r * source[i]) + result.transform.translation - target[i])
              .squaredNorm();
  }
  result.rms = std::sqrt(ss / double(n));
  return result;
}

}  // namespace hofit
