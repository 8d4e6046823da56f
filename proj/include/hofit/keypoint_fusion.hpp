#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hofit/common.hpp"
#include "hofit/geometry.hpp"
#include "hofit/rng.hpp"

namespace hofit {

inline constexpr int kHandJointCount = 21;
inline constexpr double kDefaultInlierRadiusPx = 30.0;

// Whether a projected point lands within radius_px of the observation.
inline bool around_2d(const Eigen::Vector2d& projected,
                      const Eigen::Vector2d& observed, double radius_px) {
  return (projected - observed).norm() <= radius_px;
}

// Per-view 2D keypoint observation for one joint.
struct JointObservation {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double confidence = 0.0;
  bool present = false;
};

// One hand's detections across all cameras for one frame.
// joints[c][i] is joint i as seen by camera c.
struct Keypoints2D {
  std::vector<std::array<JointObservation, kHandJointCount>> joints;

  void validate() const {
    for (const auto& cam : joints) {
      for (const auto& j : cam) {
        if (!j.present) continue;
        require(j.confidence >= 0.0 && j.confidence <= 1.0,
                errc::invariant_violation, "confidence outside [0,1]");
        require(j.pixel.allFinite(), errc::invariant_violation,
                "non-finite keypoint position");
      }
    }
  }
};

struct FusedJoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::vector<std::uint8_t> valid;  // per camera, the around_2D predicate
  int inlier_count = 0;
  bool present = false;
  std::string failure;  // reason when absent, e.g. "too_few_views"
};

struct FusedKeypoints3D {
  std::array<FusedJoint, kHandJointCount> joints;
};

namespace detail {

// Inlier count and mask for a 3D candidate against all present observations.
struct CandidateScore {
  int inliers = 0;
  double confidence_sum = 0.0;
};

inline CandidateScore score_candidate(
    const std::vector<CameraModel>& cameras, const Keypoints2D& obs, int joint,
    const Eigen::Vector3d& point, double radius_px) {
  CandidateScore s;
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    const JointObservation& o = obs.joints[c][joint];
    if (!o.present) continue;
    try {
      if (around_2d(cameras[c].project(point), o.pixel, radius_px)) {
        ++s.inliers;
        s.confidence_sum += o.confidence;
      }
    } catch (const error&) {
      // behind this camera: not an inlier
    }
  }
  return s;
}

// Gauss-Newton polish of a 3D point against the views that currently agree
// with it. Keeps the accuracy from being capped by the winning pair alone.
inline Eigen::Vector3d polish_point(const std::vector<CameraModel>& cameras,
                                    const Keypoints2D& obs, int joint,
                                    Eigen::Vector3d point, double radius_px) {
  for (int iter = 0; iter < 10; ++iter) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    int used = 0;
    for (std::size_t c = 0; c < cameras.size(); ++c) {
      const JointObservation& o = obs.joints[c][joint];
      if (!o.present) continue;
      try {
        Eigen::Matrix<double, 2, 3> jac;
        const Eigen::Vector2d r = cameras[c].project(point, &jac) - o.pixel;
        if (r.norm() > radius_px) continue;
        jtj += jac.transpose() * jac;
        jtr += jac.transpose() * r;
        ++used;
      } catch (const error&) {
        continue;
      }
    }
    if (used < 2) break;
    const Eigen::Vector3d step =
        (jtj + 1e-9 * Eigen::Matrix3d::Identity()).ldlt().solve(-jtr);
    point += step;
    if (step.norm() < 1e-12) break;
  }
  return point;
}

}  // namespace detail

// Consensus triangulation of one joint over camera pairs. All distinct pairs
// are enumerated when the rig has at most 12 cameras; larger rigs fall back
// to seeded random sampling with `iterations` draws. The candidate seen by
// the most observations within radius_px wins; ties keep the earlier
// candidate unless a later one has a strictly larger confidence sum.
inline FusedJoint fuse_joint(const std::vector<CameraModel>& cameras,
                             const Keypoints2D& obs, int joint,
                             double radius_px = kDefaultInlierRadiusPx,
                             int iterations = 200,
                             std::uint64_t seed = 0) {
  require(joint >= 0 && joint < kHandJointCount, errc::invalid_spec,
          "joint index out of range");
  require(radius_px > 0.0, errc::invalid_spec, "radius must be positive");
  require(obs.joints.size() == cameras.size(), errc::shape_mismatch,
          "camera count does not match observation rows");

  std::vector<int> present;
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    if (obs.joints[c][joint].present) present.push_back(int(c));
  }
  FusedJoint out;
  out.valid.assign(cameras.size(), 0);
  if (present.size() < 2) {
    fail(errc::too_few_views, "joint " + std::to_string(joint) + " seen by " +
                                  std::to_string(present.size()) + " views");
  }

  std::vector<std::pair<int, int>> pairs;
  if (cameras.size() <= 12) {
    for (std::size_t a = 0; a < present.size(); ++a) {
      for (std::size_t b = a + 1; b < present.size(); ++b) {
        pairs.emplace_back(present[a], present[b]);
      }
    }
  } else {
    Rng rng(Rng::mix(seed, std::uint64_t(joint)));
    for (int it = 0; it < iterations; ++it) {
      const int a = rng.uniform_int(0, int(present.size()) - 1);
      int b = rng.uniform_int(0, int(present.size()) - 2);
      if (b >= a) ++b;
      pairs.emplace_back(present[std::min(a, b)], present[std::max(a, b)]);
    }
  }

  bool found = false;
  detail::CandidateScore best_score;
  Eigen::Vector3d best_point = Eigen::Vector3d::Zero();
  for (const auto& [ca, cb] : pairs) {
    Eigen::Vector3d candidate;
    try {
      candidate = triangulate_pair(cameras[ca], cameras[cb],
                                   obs.joints[ca][joint].pixel,
                                   obs.joints[cb][joint].pixel);
    } catch (const error&) {
      continue;  // degenerate pair
    }
    const auto score =
        detail::score_candidate(cameras, obs, joint, candidate, radius_px);
    if (!found || score.inliers > best_score.inliers ||
        (score.inliers == best_score.inliers &&
         score.confidence_sum > best_score.confidence_sum)) {
      found = true;
      best_score = score;
      best_point = candidate;
    }
  }
  if (!found || best_score.inliers < 2) {
    fail(errc::no_consensus, "joint " + std::to_string(joint) +
                                 ": best consensus has " +
                                 std::to_string(found ? best_score.inliers : 0) +
                                 " inliers");
  }

  // Polish against the consensus set; keep the polish only when it does not
  // lose support.
  const Eigen::Vector3d polished =
      detail::polish_point(cameras, obs, joint, best_point, radius_px);
  const auto polished_score =
      detail::score_candidate(cameras, obs, joint, polished, radius_px);
  if (polished_score.inliers >= best_score.inliers) {
    best_point = polished;
    best_score = polished_score;
  }

  out.position = best_point;
  out.present = true;
  out.inlier_count = best_score.inliers;
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    const JointObservation& o = obs.joints[c][joint];
    if (!o.present) continue;
    try {
      out.valid[c] =
          around_2d(cameras[c].project(best_point), o.pixel, radius_px) ? 1 : 0;
    } catch (const error&) {
      out.valid[c] = 0;
    }
  }
  return out;
}

// Fuses all 21 joints independently. Per-joint failures mark that joint
// absent with a reason; they never abort the rest of the hand.
inline FusedKeypoints3D fuse_hand(const std::vector<CameraModel>& cameras,
                                  const Keypoints2D& obs,
                                  double radius_px = kDefaultInlierRadiusPx,
                                  int iterations = 200,
                                  std::uint64_t seed = 0) {
  obs.validate();
  FusedKeypoints3D out;
  for (int joint = 0; joint < kHandJointCount; ++joint) {
    try {
      out.joints[joint] = fuse_joint(cameras, obs, joint, radius_px,
                                     iterations, seed);
    } catch (const error& e) {
      out.joints[joint].present = false;
      out.joints[joint].valid.assign(cameras.size(), 0);
      out.joints[joint].failure = errc_name(e.code());
    }
  }
  return out;
}

}  // namespace hofit
