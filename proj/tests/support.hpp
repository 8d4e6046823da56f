#pragma once

#include "hofit/geometry.hpp"
#include "hofit/rng.hpp"

namespace hofit::testing {

inline CameraModel simple_camera(double fx = 1000.0, double cx = 500.0) {
  CameraModel cam;
  cam.fx = cam.fy = fx;
  cam.cx = cam.cy = cx;
  return cam;
}

// Camera on a sphere around the origin, looking inward.
inline CameraModel random_camera(Rng& rng, double min_r = 1.0,
                                 double max_r = 2.0) {
  CameraModel cam;
  cam.fx = rng.uniform(800.0, 1600.0);
  cam.fy = rng.uniform(800.0, 1600.0);
  cam.cx = rng.uniform(400.0, 1200.0);
  cam.cy = rng.uniform(300.0, 900.0);
  const Eigen::Vector3d pos = rng.unit_vector() * rng.uniform(min_r, max_r);
  const Eigen::Vector3d z = (-pos).normalized();
  Eigen::Vector3d up(0, 0, 1);
  if (std::abs(up.dot(z)) > 0.95) up = Eigen::Vector3d(0, 1, 0);
  const Eigen::Vector3d x = up.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r_wc;
  r_wc.col(0) = x;
  r_wc.col(1) = y;
  r_wc.col(2) = z;
  cam.extrinsic.rotation = r_wc.transpose();
  cam.extrinsic.translation = -(r_wc.transpose() * pos);
  return cam;
}

// Random rigid transform with rotation angle up to max_angle_rad.
inline RigidTransform random_rigid(Rng& rng, double max_angle_rad = 3.0,
                                   double max_shift = 0.5) {
  RigidTransform t;
  t.rotation = axis_angle_to_matrix(rng.unit_vector() *
                                    rng.uniform(0.0, max_angle_rad));
  t.translation = rng.gaussian3(max_shift);
  return t;
}

}  // namespace hofit::testing
