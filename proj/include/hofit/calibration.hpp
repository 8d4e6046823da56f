#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hofit/common.hpp"
#include "hofit/geometry.hpp"

namespace hofit {

// One 3D marker position with its hand-annotated pixel location.
struct CalibrationObservation {
  Eigen::Vector3d marker_world;
  Eigen::Vector2d pixel;
};

struct ExtrinsicSolution {
  RigidTransform extrinsic;  // world -> camera
  double mean_reprojection_px = 0.0;
};

namespace detail {

// Mean reprojection error in pixels; infinity when any point falls behind
// the camera.
inline double mean_reprojection(
    const CameraModel& cam, const std::vector<CalibrationObservation>& obs) {
  double sum = 0.0;
  for (const auto& o : obs) {
    try {
      sum += (cam.project(o.marker_world) - o.pixel).norm();
    } catch (const error&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return sum / double(obs.size());
}

// Levenberg-damped Gauss-Newton on (rotation, translation) from the given
// start. Minimizes summed squared pixel residuals; returns the final pose
// without judging its quality.
inline RigidTransform refine_pose(const CameraModel& intrinsic,
                                  const std::vector<CalibrationObservation>& obs,
                                  RigidTransform pose) {
  CameraModel cam = intrinsic;
  cam.extrinsic = pose;
  double lambda = 1e-3;

  auto cost = [&](const RigidTransform& p) {
    CameraModel c = intrinsic;
    c.extrinsic = p;
    double sum = 0.0;
    for (const auto& o : obs) {
      sum += (c.project(o.marker_world) - o.pixel).squaredNorm();
    }
    return sum;
  };

  double current;
  try {
    current = cost(pose);
  } catch (const error&) {
    return pose;  // start is invalid; caller scores it as infinity
  }

  for (int iter = 0; iter < 100; ++iter) {
    Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> jtr = Eigen::Matrix<double, 6, 1>::Zero();
    cam.extrinsic = pose;
    for (const auto& o : obs) {
      Eigen::Matrix<double, 2, 3> dpx_dworld;
      const Eigen::Vector2d r = cam.project(o.marker_world, &dpx_dworld) -
                                o.pixel;
      // Left-increment pose update: p_cam = exp([w]) (R x + t) + dt.
      const Eigen::Matrix<double, 2, 3> dpx_dpc =
          dpx_dworld * pose.rotation.transpose();
      const Eigen::Vector3d pc = pose(o.marker_world);
      Eigen::Matrix<double, 2, 6> jac;
      jac.block<2, 3>(0, 0) = -dpx_dpc * skew(pc);
      jac.block<2, 3>(0, 3) = dpx_dpc;
      jtj += jac.transpose() * jac;
      jtr += jac.transpose() * r;
    }
    bool advanced = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::Matrix<double, 6, 6> damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Matrix<double, 6, 1> step = damped.ldlt().solve(-jtr);
      RigidTransform trial;
      trial.rotation = axis_angle_to_matrix(step.head<3>()) * pose.rotation;
      trial.translation = pose.translation + step.tail<3>();
      double trial_cost;
      try {
        trial_cost = cost(trial);
      } catch (const error&) {
        trial_cost = std::numeric_limits<double>::infinity();
      }
      if (trial_cost < current) {
        const double drop = current - trial_cost;
        pose = trial;
        current = trial_cost;
        lambda = std::max(lambda * 0.3, 1e-12);
        advanced = true;
        if (drop < 1e-16 || step.norm() < 1e-14) return pose;
        break;
      }
      lambda *= 10.0;
    }
    if (!advanced) break;
  }
  return pose;
}

// Direct linear transform on >= 6 non-coplanar points. Pixel coordinates are
// undistorted to normalized image coordinates first, so the estimate is exact
// for noiseless inputs regardless of k1/k2.
inline RigidTransform dlt_pose(const CameraModel& intrinsic,
                               const std::vector<CalibrationObservation>& obs) {
  const auto n = obs.size();
  // Hartley-style conditioning of both point sets.
  Eigen::Vector3d cw = Eigen::Vector3d::Zero();
  Eigen::Vector2d cn = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> norm(n);
  for (std::size_t i = 0; i < n; ++i) {
    norm[i] = intrinsic.normalized(obs[i].pixel);
    cw += obs[i].marker_world;
    cn += norm[i];
  }
  cw /= double(n);
  cn /= double(n);
  double sw = 0.0, sn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += (obs[i].marker_world - cw).norm();
    sn += (norm[i] - cn).norm();
  }
  sw = std::sqrt(3.0) * double(n) / std::max(sw, 1e-12);
  sn = std::sqrt(2.0) * double(n) / std::max(sn, 1e-12);

  Eigen::MatrixXd a(2 * n, 12);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d x = sw * (obs[i].marker_world - cw);
    const Eigen::Vector2d m = sn * (norm[i] - cn);
    a.row(2 * i) << x.x(), x.y(), x.z(), 1, 0, 0, 0, 0, -m.x() * x.x(),
        -m.x() * x.y(), -m.x() * x.z(), -m.x();
    a.row(2 * i + 1) << 0, 0, 0, 0, x.x(), x.y(), x.z(), 1, -m.y() * x.x(),
        -m.y() * x.y(), -m.y() * x.z(), -m.y();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 12, 1> p = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> pc;  // conditioned projection matrix
  pc.row(0) = p.segment<4>(0);
  pc.row(1) = p.segment<4>(4);
  pc.row(2) = p.segment<4>(8);

  // Undo the conditioning: m = sn (m0 - cn), x = sw (x0 - cw).
  Eigen::Matrix<double, 3, 3> tn = Eigen::Matrix3d::Identity();
  tn(0, 0) = tn(1, 1) = 1.0 / sn;
  tn.col(2).head<2>() = cn;
  Eigen::Matrix<double, 4, 4> tw = Eigen::Matrix4d::Identity() * sw;
  tw.col(3).head<3>() = -sw * cw;
  tw(3, 3) = 1.0;
  Eigen::Matrix<double, 3, 4> proj = tn * pc * tw;

  // Project [R|t] out of the unscaled solution; retry with the opposite sign
  // if the markers land behind the camera.
  for (int sign = 0; sign < 2; ++sign) {
    const Eigen::Matrix3d m = proj.leftCols<3>();
    const Eigen::JacobiSVD<Eigen::Matrix3d> msvd(
        m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r = msvd.matrixU() * msvd.matrixV().transpose();
    if (r.determinant() < 0) {
      Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
      flip(2, 2) = -1.0;
      r = msvd.matrixU() * flip * msvd.matrixV().transpose();
    }
    const double scale = msvd.singularValues().mean();
    RigidTransform pose;
    pose.rotation = r;
    pose.translation = proj.col(3) / scale;
    int in_front = 0;
    for (const auto& o : obs) {
      if (pose(o.marker_world).z() > 0) ++in_front;
    }
    if (2 * in_front >= int(n)) return pose;
    proj = -proj;
  }
  return RigidTransform::identity();  // unreachable for sane inputs
}

// Deterministic fan of starting poses: cameras on spheres around the marker
// centroid, looking inward, at several distances and rolls. Used when the
// DLT cannot (too few points, or a coplanar marker set).
inline std::vector<RigidTransform> seed_poses(
    const std::vector<CalibrationObservation>& obs) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& o : obs) centroid += o.marker_world;
  centroid /= double(obs.size());
  double radius = 1e-3;
  for (const auto& o : obs) {
    radius = std::max(radius, (o.marker_world - centroid).norm());
  }

  std::vector<Eigen::Vector3d> dirs;
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      for (int sz : {-1, 1}) {
        dirs.push_back(Eigen::Vector3d(sx, sy, sz).normalized());
      }
    }
  }
  dirs.emplace_back(1, 0, 0);
  dirs.emplace_back(-1, 0, 0);
  dirs.emplace_back(0, 1, 0);
  dirs.emplace_back(0, -1, 0);
  dirs.emplace_back(0, 0, 1);
  dirs.emplace_back(0, 0, -1);

  std::vector<RigidTransform> seeds;
  for (const double dist : {1.5 * radius, 3.0 * radius, 6.0 * radius}) {
    for (const auto& dir : dirs) {
      const Eigen::Vector3d eye = centroid + dist * dir;
      const Eigen::Vector3d z = (centroid - eye).normalized();
      Eigen::Vector3d up(0, 0, 1);
      if (std::abs(up.dot(z)) > 0.95) up = Eigen::Vector3d(0, 1, 0);
      const Eigen::Vector3d x0 = up.cross(z).normalized();
      const Eigen::Vector3d y0 = z.cross(x0);
      for (int roll = 0; roll < 4; ++roll) {
        const double a = roll * std::numbers::pi / 2.0;
        const Eigen::Vector3d x = std::cos(a) * x0 + std::sin(a) * y0;
        const Eigen::Vector3d y = z.cross(x);
        RigidTransform pose;
        pose.rotation.row(0) = x;
        pose.rotation.row(1) = y;
        pose.rotation.row(2) = z;
        pose.translation = -(pose.rotation * eye);
        seeds.push_back(pose);
      }
    }
  }
  return seeds;
}

inline bool coplanar_within(const std::vector<CalibrationObservation>& obs,
                            double tol) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& o : obs) centroid += o.marker_world;
  centroid /= double(obs.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& o : obs) {
    const Eigen::Vector3d d = o.marker_world - centroid;
    scatter += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  const Eigen::Vector3d normal = eig.eigenvectors().col(0);
  double max_dist = 0.0;
  for (const auto& o : obs) {
    max_dist = std::max(max_dist,
                        std::abs(normal.dot(o.marker_world - centroid)));
  }
  return max_dist < tol;
}

}  // namespace detail

// Recovers the world-to-camera extrinsic from 3D-2D correspondences: linear
// initialization (DLT when it applies, otherwise a deterministic multi-start
// fan) followed by damped Gauss-Newton refinement of the reprojection error.
inline ExtrinsicSolution solve_extrinsic(
    const CameraModel& intrinsic,
    const std::vector<CalibrationObservation>& observations) {
  require(observations.size() >= 4, errc::insufficient_observations,
          "need at least 4 observations, got " +
              std::to_string(observations.size()));
  const bool coplanar = detail::coplanar_within(observations, 1e-3);
  if (coplanar && observations.size() < 6) {
    fail(errc::degenerate_configuration,
         "markers coplanar within 1 mm; need at least 6");
  }

  std::vector<RigidTransform> starts;
  if (observations.size() >= 6 && !coplanar) {
    starts.push_back(detail::dlt_pose(intrinsic, observations));
  } else {
    starts = detail::seed_poses(observations);
  }

  ExtrinsicSolution best;
  best.mean_reprojection_px = std::numeric_limits<double>::infinity();
  CameraModel cam = intrinsic;
  for (const auto& start : starts) {
    cam.extrinsic = detail::refine_pose(intrinsic, observations, start);
    const double err = detail::mean_reprojection(cam, observations);
    if (err < best.mean_reprojection_px) {
      best.extrinsic = cam.extrinsic;
      best.mean_reprojection_px = err;
    }
  }
  require(std::isfinite(best.mean_reprojection_px),
          errc::degenerate_configuration,
          "no pose places the markers in front of the camera");
  return best;
}

// One sensor's frame clock. Timestamps are UTC milliseconds.
struct TimestampStream {
  std::string sensor_id;
  std::vector<std::int64_t> timestamps;

  void validate() const {
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
      require(timestamps[i] > timestamps[i - 1], errc::invariant_violation,
              "stream " + sensor_id +
                  ": timestamps must be strictly increasing at index " +
                  std::to_string(i));
    }
  }
};

struct TimestampMatch {
  std::size_t ref_index = 0;
  std::size_t other_index = 0;
  std::int64_t delta_ms = 0;  // other - reference
};

// Nearest-neighbor matching of each reference frame into `other`. Pairs
// farther apart than max_gap are dropped; equidistant neighbors resolve to
// the earlier frame.
inline std::vector<TimestampMatch> match_streams(const TimestampStream& reference,
                                                 const TimestampStream& other,
                                                 double max_gap_ms = 17.0) {
  require(!reference.timestamps.empty() && !other.timestamps.empty(),
          errc::empty_input, "empty timestamp stream");
  reference.validate();
  other.validate();

  std::vector<TimestampMatch> matches;
  for (std::size_t i = 0; i < reference.timestamps.size(); ++i) {
    const std::int64_t t = reference.timestamps[i];
    const auto it = std::lower_bound(other.timestamps.begin(),
                                     other.timestamps.end(), t);
    std::size_t j;
    if (it == other.timestamps.begin()) {
      j = 0;
    } else if (it == other.timestamps.end()) {
      j = other.timestamps.size() - 1;
    } else {
      const std::size_t hi = std::size_t(it - other.timestamps.begin());
      const std::int64_t d_lo = t - other.timestamps[hi - 1];
      const std::int64_t d_hi = other.timestamps[hi] - t;
      j = (d_hi < d_lo) ? hi : hi - 1;
    }
    const std::int64_t delta = other.timestamps[j] - t;
    if (double(std::abs(delta)) <= max_gap_ms) {
      matches.push_back({i, j, delta});
    }
  }
  return matches;
}

}  // namespace hofit
