#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hofit/calibration.hpp"
#include "hofit/common.hpp"
#include "hofit/geometry.hpp"
#include "hofit/hand_model.hpp"
#include "hofit/keypoint_fusion.hpp"
#include "hofit/mesh.hpp"
#include "hofit/metrics.hpp"
#include "hofit/object_registration.hpp"
#include "hofit/rng.hpp"

namespace hofit {

struct HandKeyframe {
  int frame = 0;
  HandPoseParams pose;
};

struct ObjectKeyframe {
  int frame = 0;
  RigidTransform pose;  // object model frame -> world
};

struct NoiseSpec {
  double keypoint_sigma_px = 0.0;
  double outlier_rate = 0.0;
  double marker_jitter_mm = 0.0;

  void validate() const {
    require(keypoint_sigma_px >= 0.0 && marker_jitter_mm >= 0.0,
            errc::invalid_spec, "noise magnitudes must be non-negative");
    require(outlier_rate >= 0.0 && outlier_rate <= 1.0, errc::invalid_spec,
            "outlier rate must lie in [0, 1]");
  }
};

// Primitive object shapes; a mesh path overrides the primitive.
struct ObjectSpec {
  std::string primitive = "box";  // box | sphere | ellipsoid
  Eigen::Vector3d size = {0.06, 0.05, 0.04};  // half extents or radii
  int resolution = 2;
  std::string mesh_path;

  TriMesh build() const {
    if (!mesh_path.empty()) {
      if (mesh_path.size() >= 4 &&
          mesh_path.substr(mesh_path.size() - 4) == ".ply") {
        return load_ply(mesh_path);
      }
      return load_obj(mesh_path);
    }
    require((size.array() > 0.0).all(), errc::invalid_spec,
            "object size must be positive");
    require(resolution >= 1, errc::invalid_spec, "resolution must be >= 1");
    if (primitive == "box") {
      return make_box(Eigen::Vector3d::Zero(), size, resolution);
    }
    if (primitive == "sphere") {
      return make_uv_sphere(Eigen::Vector3d::Zero(), size.x(),
                            std::max(3, resolution), std::max(3, resolution));
    }
    if (primitive == "ellipsoid") {
      return make_ellipsoid(Eigen::Vector3d::Zero(), size,
                            std::max(3, resolution), std::max(3, resolution));
    }
    fail(errc::invalid_spec, "unknown primitive: " + primitive);
  }
};

struct SceneSpec {
  int frames = 50;
  double fps = 30.0;
  int camera_count = 12;
  double ring_radius = 1.2;
  double ring_height_low = 0.6;
  double ring_height_high = 1.4;
  double fx = 1400.0;
  int image_width = 2048;
  int image_height = 1536;
  int hand_vertex_count = 500;
  int marker_count = 8;
  int calibration_points = 40;
  double registration_shift_mm = 5.0;
  double registration_angle_deg = 5.0;
  ObjectSpec object;
  std::vector<HandKeyframe> left_motion;
  std::vector<HandKeyframe> right_motion;
  std::vector<ObjectKeyframe> object_motion;
  NoiseSpec noise;
  std::uint64_t seed = 0;

  void validate() const {
    require(frames >= 1, errc::invalid_spec, "need at least one frame");
    require(fps > 0.0, errc::invalid_spec, "fps must be positive");
    require(camera_count >= 2, errc::invalid_spec, "need at least 2 cameras");
    require(ring_radius > 0.0 && fx > 0.0 && image_width > 0 &&
                image_height > 0,
            errc::invalid_spec, "bad camera geometry");
    require(marker_count >= 3, errc::invalid_spec, "need >= 3 markers");
    require(calibration_points >= 6, errc::invalid_spec,
            "need >= 6 calibration points");
    require(registration_shift_mm >= 0.0 && registration_angle_deg >= 0.0,
            errc::invalid_spec, "bad registration perturbation");
    require(!left_motion.empty() && !right_motion.empty() &&
                !object_motion.empty(),
            errc::invalid_spec, "motion scripts must not be empty");
    noise.validate();
  }

  // A complete two-hand scene with smooth scripted motion; the object is a
  // coarse box so marker registration from the default perturbation is
  // well-conditioned.
  static SceneSpec canonical(int frame_count = 50, std::uint64_t seed = 7) {
    SceneSpec spec;
    spec.frames = frame_count;
    spec.seed = seed;
    const int keys[3] = {0, std::max(1, frame_count / 2),
                         std::max(2, frame_count - 1)};
    for (int q = 0; q < 3; ++q) {
      const double s =
          frame_count > 1 ? double(keys[q]) / double(frame_count - 1) : 0.0;
      HandKeyframe left;
      left.frame = keys[q];
      for (int i = 3; i < kThetaDim; ++i) {
        left.pose.theta(i) = 0.35 * std::sin(0.13 * i + 2.1 * s);
      }
      left.pose.theta.segment<3>(0) = Eigen::Vector3d(0.1 * s, -0.05, 0.15);
      // Wrist offsets keep every hand vertex well clear of the object so the
      // scripted poses stay consistent with the contact terms.
      left.pose.t =
          Eigen::Vector3d(-0.26 + 0.06 * s, -0.04 + 0.05 * s, 0.02 + 0.06 * s);
      spec.left_motion.push_back(left);

      HandKeyframe right;
      right.frame = keys[q];
      for (int i = 3; i < kThetaDim; ++i) {
        right.pose.theta(i) = 0.30 * std::sin(0.11 * i + 1.7 * s + 1.0);
      }
      right.pose.theta.segment<3>(0) = Eigen::Vector3d(-0.08 * s, 0.1, -0.1);
      right.pose.t =
          Eigen::Vector3d(0.24 - 0.06 * s, 0.03 - 0.04 * s, -0.02 + 0.05 * s);
      spec.right_motion.push_back(right);

      ObjectKeyframe obj;
      obj.frame = keys[q];
      obj.pose = RigidTransform::from_axis_angle(
          0.35 * s * Eigen::Vector3d(0.3, 1.0, 0.2).normalized(),
          Eigen::Vector3d(0.04 * s, 0.03 * s, 0.05 - 0.02 * s));
      spec.object_motion.push_back(obj);
    }
    if (frame_count == 1) {
      spec.left_motion.resize(1);
      spec.right_motion.resize(1);
      spec.object_motion.resize(1);
    }
    return spec;
  }
};

struct FrameTruth {
  HandPoseParams left;
  HandPoseParams right;
  RigidTransform object_pose;
};

struct GroundTruthBundle {
  SceneSpec spec;
  std::vector<CameraModel> cameras;
  HandModel model;
  TriMesh object;
  MarkerRig rig;
  RigidTransform rig_to_model;       // truth
  RigidTransform registration_init;  // perturbed start for registration
  std::vector<FrameTruth> truth;
  std::vector<Keypoints2D> clean_left, noisy_left;
  std::vector<Keypoints2D> clean_right, noisy_right;
  std::vector<MarkerFrame> clean_markers, noisy_markers;
  // Per camera: 3D/2D correspondences for the extrinsic stage.
  std::vector<std::vector<CalibrationObservation>> calibration_clean;
  std::vector<std::vector<CalibrationObservation>> calibration_noisy;
  TimestampStream reference_stream;
  std::vector<TimestampStream> camera_streams;
};

namespace detail {

// Cubic-eased interpolation weight between consecutive keyframes.
inline double ease(double s) { return s * s * (3.0 - 2.0 * s); }

template <typename Key, typename Lerp>
auto sample_script(const std::vector<Key>& keys, int frame, Lerp&& lerp) {
  require(!keys.empty(), errc::invalid_spec, "empty motion script");
  if (frame <= keys.front().frame) return lerp(keys.front(), keys.front(), 0);
  if (frame >= keys.back().frame) return lerp(keys.back(), keys.back(), 0);
  for (std::size_t k = 1; k < keys.size(); ++k) {
    if (frame <= keys[k].frame) {
      const double span = double(keys[k].frame - keys[k - 1].frame);
      const double s =
          span > 0.0 ? double(frame - keys[k - 1].frame) / span : 0.0;
      return lerp(keys[k - 1], keys[k], ease(s));
    }
  }
  return lerp(keys.back(), keys.back(), 0);
}

inline HandPoseParams sample_hand(const std::vector<HandKeyframe>& keys,
                                  int frame) {
  return sample_script(keys, frame,
                       [](const HandKeyframe& a, const HandKeyframe& b,
                          double w) {
                         HandPoseParams p;
                         p.theta = (1.0 - w) * a.pose.theta + w * b.pose.theta;
                         p.beta = (1.0 - w) * a.pose.beta + w * b.pose.beta;
                         p.t = (1.0 - w) * a.pose.t + w * b.pose.t;
                         return p;
                       });
}

inline RigidTransform sample_object(const std::vector<ObjectKeyframe>& keys,
                                    int frame) {
  return sample_script(
      keys, frame,
      [](const ObjectKeyframe& a, const ObjectKeyframe& b, double w) {
        const Eigen::AngleAxisd rel(a.pose.rotation.transpose() *
                                    b.pose.rotation);
        RigidTransform t;
        t.rotation = a.pose.rotation *
                     Eigen::AngleAxisd(w * rel.angle(), rel.axis()).matrix();
        t.translation =
            (1.0 - w) * a.pose.translation + w * b.pose.translation;
        return t;
      });
}

// Greedy farthest-point subset; deterministic marker placement on a mesh.
inline std::vector<int> farthest_points(const std::vector<Eigen::Vector3d>& v,
                                        int count) {
  require(int(v.size()) >= count, errc::invalid_spec,
          "mesh has fewer vertices than requested markers");
  std::vector<int> picked = {0};
  std::vector<double> dist(v.size(),
                           std::numeric_limits<double>::infinity());
  while (int(picked.size()) < count) {
    int best = -1;
    double best_d = -1.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      dist[i] = std::min(dist[i], (v[i] - v[picked.back()]).norm());
      if (dist[i] > best_d) {
        best_d = dist[i];
        best = int(i);
      }
    }
    require(best_d > 1e-12, errc::invalid_spec,
            "mesh too degenerate for distinct markers");
    picked.push_back(best);
  }
  return picked;
}

}  // namespace detail

// Deterministic scene synthesis. Clean observations depend only on the
// motion script; corruption draws from seed-derived substreams, so the same
// seed reproduces the bundle bit for bit and zero noise leaves the clean
// values untouched.
inline GroundTruthBundle generate(const SceneSpec& spec) {
  spec.validate();
  GroundTruthBundle bundle;
  bundle.spec = spec;
  bundle.model = synthetic_model(spec.hand_vertex_count);
  bundle.object = spec.object.build();

  // Ring of inward-looking cameras at two alternating heights.
  for (int c = 0; c < spec.camera_count; ++c) {
    const double a = 2.0 * std::numbers::pi * c / spec.camera_count;
    const double h =
        (c % 2 == 0) ? spec.ring_height_low : spec.ring_height_high;
    CameraModel cam;
    cam.fx = cam.fy = spec.fx;
    cam.cx = spec.image_width / 2.0;
    cam.cy = spec.image_height / 2.0;
    const Eigen::Vector3d eye(spec.ring_radius * std::cos(a),
                              spec.ring_radius * std::sin(a), h);
    const Eigen::Vector3d fwd = (-eye).normalized();
    Eigen::Vector3d up(0, 0, 1);
    if (std::abs(up.dot(fwd)) > 0.95) up = Eigen::Vector3d(0, 1, 0);
    const Eigen::Vector3d right = fwd.cross(up).normalized();
    const Eigen::Vector3d down = fwd.cross(right).normalized();
    Eigen::Matrix3d r;
    r.row(0) = right;
    r.row(1) = down;
    r.row(2) = fwd;
    cam.extrinsic = {r, -r * eye};
    bundle.cameras.push_back(cam);
  }

  // Marker rig: well-spread surface vertices, expressed in an arbitrary
  // mocap frame linked to the mesh by the ground-truth transform.
  Rng rig_rng(Rng::mix(spec.seed, 103));
  const std::vector<int> sites =
      detail::farthest_points(bundle.object.vertices, spec.marker_count);
  bundle.rig_to_model = RigidTransform::from_axis_angle(
      rig_rng.unit_vector() * rig_rng.uniform(0.2, 0.7),
      rig_rng.gaussian3(0.05));
  const RigidTransform model_to_rig = bundle.rig_to_model.inverse();
  for (const int s : sites) {
    bundle.rig.marker_local.push_back(
        model_to_rig(bundle.object.vertices[s]));
  }
  bundle.rig.tracked.resize(spec.marker_count);
  for (int i = 0; i < spec.marker_count; ++i) bundle.rig.tracked[i] = i;
  bundle.rig.validate();

  // Registration starting point: truth rotated about the marker centroid and
  // shifted, by the configured magnitudes.
  {
    Rng pert(Rng::mix(spec.seed, 104));
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : bundle.rig.marker_local) {
      centroid += bundle.rig_to_model(p);
    }
    centroid /= double(bundle.rig.marker_local.size());
    const Eigen::Matrix3d dr = axis_angle_to_matrix(
        pert.unit_vector() * spec.registration_angle_deg * std::numbers::pi /
        180.0);
    bundle.registration_init.rotation = dr * bundle.rig_to_model.rotation;
    bundle.registration_init.translation =
        dr * (bundle.rig_to_model.translation - centroid) + centroid +
        pert.unit_vector() * spec.registration_shift_mm * 1e-3;
  }

  // Scripted truth and clean observations.
  bundle.truth.resize(spec.frames);
  bundle.clean_left.resize(spec.frames);
  bundle.clean_right.resize(spec.frames);
  bundle.clean_markers.resize(spec.frames);
  for (int f = 0; f < spec.frames; ++f) {
    FrameTruth& t = bundle.truth[f];
    t.left = detail::sample_hand(spec.left_motion, f);
    t.right = detail::sample_hand(spec.right_motion, f);
    t.object_pose = detail::sample_object(spec.object_motion, f);

    const auto render = [&](const HandState& state, Keypoints2D& out) {
      out.joints.resize(bundle.cameras.size());
      for (std::size_t c = 0; c < bundle.cameras.size(); ++c) {
        for (int i = 0; i < kHandJointCount; ++i) {
          const Eigen::Vector3d joint = state.joints.row(i);
          JointObservation& o = out.joints[c][i];
          if (bundle.cameras[c].extrinsic(joint).z() <= 1e-6) continue;
          o.pixel = bundle.cameras[c].project(joint);
          o.confidence = 1.0;
          o.present = true;
        }
      }
    };
    render(forward(bundle.model, t.left), bundle.clean_left[f]);
    render(forward(bundle.model, t.right), bundle.clean_right[f]);

    MarkerFrame& mf = bundle.clean_markers[f];
    for (const int s : sites) {
      mf.position.push_back(t.object_pose(bundle.object.vertices[s]));
      mf.visible.push_back(1);
    }
  }

  // Corruption; substreams per category keep the draws independent.
  const auto corrupt_hand = [&](const std::vector<Keypoints2D>& clean,
                                std::uint64_t stream) {
    Rng rng(Rng::mix(spec.seed, stream));
    std::vector<Keypoints2D> noisy = clean;
    for (auto& frame : noisy) {
      for (auto& cam : frame.joints) {
        for (auto& o : cam) {
          if (!o.present) continue;
          if (rng.uniform() < spec.noise.outlier_rate) {
            o.pixel = Eigen::Vector2d(rng.uniform() * spec.image_width,
                                      rng.uniform() * spec.image_height);
          } else {
            o.pixel += rng.gaussian2(spec.noise.keypoint_sigma_px);
          }
        }
      }
    }
    return noisy;
  };
  bundle.noisy_left = corrupt_hand(bundle.clean_left, 201);
  bundle.noisy_right = corrupt_hand(bundle.clean_right, 202);

  {
    Rng rng(Rng::mix(spec.seed, 203));
    bundle.noisy_markers = bundle.clean_markers;
    for (auto& frame : bundle.noisy_markers) {
      for (auto& p : frame.position) {
        p += rng.gaussian3(spec.noise.marker_jitter_mm * 1e-3);
      }
    }
  }

  // Extrinsic calibration targets: fixed world points seen by every camera.
  {
    Rng pts(Rng::mix(spec.seed, 100));
    std::vector<Eigen::Vector3d> world(spec.calibration_points);
    for (auto& p : world) {
      p = Eigen::Vector3d(pts.uniform(-0.35, 0.35), pts.uniform(-0.35, 0.35),
                          pts.uniform(-0.25, 0.45));
    }
    Rng noise(Rng::mix(spec.seed, 204));
    bundle.calibration_clean.resize(bundle.cameras.size());
    bundle.calibration_noisy.resize(bundle.cameras.size());
    for (std::size_t c = 0; c < bundle.cameras.size(); ++c) {
      for (const auto& p : world) {
        CalibrationObservation obs;
        obs.marker_world = p;
        obs.pixel = bundle.cameras[c].project(p);
        bundle.calibration_clean[c].push_back(obs);
        obs.pixel += noise.gaussian2(spec.noise.keypoint_sigma_px);
        bundle.calibration_noisy[c].push_back(obs);
      }
    }
  }

  // Timestamps: a reference clock plus per-camera phase offsets under the
  // sync tolerance.
  bundle.reference_stream.sensor_id = "reference";
  for (int f = 0; f < spec.frames; ++f) {
    bundle.reference_stream.timestamps.push_back(
        std::llround(1000.0 * f / spec.fps));
  }
  for (int c = 0; c < spec.camera_count; ++c) {
    TimestampStream s;
    s.sensor_id = "cam" + std::to_string(c);
    const std::int64_t offset = (c * 7) % 11 - 5;
    for (const std::int64_t t : bundle.reference_stream.timestamps) {
      s.timestamps.push_back(t + offset);
    }
    bundle.camera_streams.push_back(s);
  }
  return bundle;
}

struct PipelineOutputs {
  SkeletonSequence left;
  SkeletonSequence right;
  PoseSequence object;
};

struct MetricReport {
  double mpjpe_left_mm = 0.0;
  double pa_mpjpe_left_mm = 0.0;
  double accel_left_ms2 = 0.0;
  double mpjpe_right_mm = 0.0;
  double pa_mpjpe_right_mm = 0.0;
  double accel_right_ms2 = 0.0;
  double translation_error_mm = 0.0;
  double rotation_error_deg = 0.0;
};

inline SkeletonSequence truth_skeleton(const GroundTruthBundle& bundle,
                                       bool left) {
  SkeletonSequence s;
  for (const FrameTruth& t : bundle.truth) {
    s.frames.push_back(
        forward(bundle.model, left ? t.left : t.right).joints);
  }
  return s;
}

inline PoseSequence truth_object_poses(const GroundTruthBundle& bundle) {
  PoseSequence p;
  for (const FrameTruth& t : bundle.truth) p.poses.push_back(t.object_pose);
  return p;
}

// Every metric of the outputs against the bundle's ground truth.
inline MetricReport score_pipeline(const GroundTruthBundle& bundle,
                                   const PipelineOutputs& outputs) {
  const std::size_t frames = bundle.truth.size();
  require(outputs.left.frames.size() == frames &&
              outputs.right.frames.size() == frames &&
              outputs.object.poses.size() == frames,
          errc::shape_mismatch, "outputs do not cover the scene frames");
  const SkeletonSequence gt_left = truth_skeleton(bundle, true);
  const SkeletonSequence gt_right = truth_skeleton(bundle, false);
  const PoseSequence gt_obj = truth_object_poses(bundle);

  MetricReport report;
  report.mpjpe_left_mm = mpjpe(outputs.left, gt_left);
  report.pa_mpjpe_left_mm = pa_mpjpe(outputs.left, gt_left);
  report.mpjpe_right_mm = mpjpe(outputs.right, gt_right);
  report.pa_mpjpe_right_mm = pa_mpjpe(outputs.right, gt_right);
  if (frames >= 3) {
    report.accel_left_ms2 = acceleration_error(outputs.left, gt_left,
                                               bundle.spec.fps);
    report.accel_right_ms2 = acceleration_error(outputs.right, gt_right,
                                                bundle.spec.fps);
  }
  report.translation_error_mm = translation_error(outputs.object, gt_obj);
  report.rotation_error_deg = rotation_error(outputs.object, gt_obj);
  return report;
}

}  // namespace hofit
