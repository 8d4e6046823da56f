#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hofit/calibration.hpp"
#include "hofit/common.hpp"
#include "hofit/geometry.hpp"
#include "hofit/hand_fitting.hpp"
#include "hofit/hand_model.hpp"
#include "hofit/keypoint_fusion.hpp"
#include "hofit/object_registration.hpp"
#include "hofit/synth.hpp"

// JSON file schemas for every pipeline artifact. All loaders throw
// schema_error with the offending path and field; writers emit keys in
// alphabetical order (the library default), so identical data produces
// identical bytes.

namespace hofit {

using json = nlohmann::json;

namespace detail {

template <typename Fn>
auto with_schema_context(const std::string& context, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    fail(errc::schema_error, context + ": " + e.what());
  }
}

}  // namespace detail

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::missing_input, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(errc::schema_error, path + ": " + e.what());
  }
}

inline void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::missing_input, "cannot open " + path);
  out << j.dump(2) << '\n';
  require(out.good(), errc::missing_input, "write failed: " + path);
}

inline std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::missing_input, "cannot open " + path);
  std::vector<json> lines;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      lines.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      fail(errc::schema_error,
           path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return lines;
}

inline void write_jsonl(const std::vector<json>& lines,
                        const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::missing_input, "cannot open " + path);
  for (const json& j : lines) {
    out << j.dump() << '\n';
  }
  require(out.good(), errc::missing_input, "write failed: " + path);
}

// ---- geometry ----

inline json transform_to_json(const RigidTransform& t) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    rot.push_back({t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2)});
  }
  return {{"rotation", rot},
          {"translation",
           {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

inline RigidTransform transform_from_json(const json& j,
                                          const std::string& context) {
  return detail::with_schema_context(context, [&] {
    RigidTransform t;
    const json& rot = j.at("rotation");
    require(rot.size() == 3, errc::schema_error, context + ": rotation rows");
    for (int r = 0; r < 3; ++r) {
      require(rot.at(r).size() == 3, errc::schema_error,
              context + ": rotation cols");
      for (int c = 0; c < 3; ++c) {
        t.rotation(r, c) = rot.at(r).at(c).get<double>();
      }
    }
    const json& tr = j.at("translation");
    require(tr.size() == 3, errc::schema_error, context + ": translation");
    for (int c = 0; c < 3; ++c) t.translation(c) = tr.at(c).get<double>();
    require(t.is_valid(1e-6), errc::schema_error,
            context + ": rotation is not orthonormal");
    return t;
  });
}

// ---- cameras ----

inline json cameras_to_json(const std::vector<CameraModel>& cameras) {
  json arr = json::array();
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    const CameraModel& cam = cameras[c];
    json j = {{"id", "cam" + std::to_string(c)}, {"fx", cam.fx},
              {"fy", cam.fy},                    {"cx", cam.cx},
              {"cy", cam.cy},                    {"k1", cam.k1},
              {"k2", cam.k2}};
    j["extrinsic"] = transform_to_json(cam.extrinsic);
    arr.push_back(j);
  }
  return {{"cameras", arr}};
}

inline std::vector<CameraModel> cameras_from_json(const json& j,
                                                  const std::string& context) {
  return detail::with_schema_context(context, [&] {
    std::vector<CameraModel> cameras;
    for (const json& cj : j.at("cameras")) {
      CameraModel cam;
      cam.fx = cj.at("fx").get<double>();
      cam.fy = cj.at("fy").get<double>();
      cam.cx = cj.at("cx").get<double>();
      cam.cy = cj.at("cy").get<double>();
      cam.k1 = cj.value("k1", 0.0);
      cam.k2 = cj.value("k2", 0.0);
      if (cj.contains("extrinsic")) {
        cam.extrinsic = transform_from_json(cj.at("extrinsic"),
                                            context + ": extrinsic");
      }
      require(cam.fx > 0.0 && cam.fy > 0.0, errc::schema_error,
              context + ": focal lengths must be positive");
      cameras.push_back(cam);
    }
    require(!cameras.empty(), errc::schema_error, context + ": no cameras");
    return cameras;
  });
}

inline std::vector<CameraModel> load_cameras(const std::string& path) {
  return cameras_from_json(read_json(path), path);
}

inline void save_cameras(const std::vector<CameraModel>& cameras,
                         const std::string& path) {
  write_json(cameras_to_json(cameras), path);
}

// ---- 2D keypoints (JSONL, one frame per line) ----

inline json keypoints_frame_to_json(int frame, const Keypoints2D& kp) {
  json cams = json::array();
  for (const auto& cam : kp.joints) {
    json joints = json::array();
    for (const JointObservation& o : cam) {
      if (!o.present) {
        joints.push_back(nullptr);
      } else {
        joints.push_back({{"u", o.pixel.x()},
                          {"v", o.pixel.y()},
                          {"c", o.confidence}});
      }
    }
    cams.push_back(joints);
  }
  return {{"frame", frame}, {"cameras", cams}};
}

inline Keypoints2D keypoints_frame_from_json(const json& j,
                                             const std::string& context) {
  return detail::with_schema_context(context, [&] {
    Keypoints2D kp;
    for (const json& cj : j.at("cameras")) {
      require(int(cj.size()) == kHandJointCount, errc::schema_error,
              context + ": expected " + std::to_string(kHandJointCount) +
                  " joints per camera");
      std::array<JointObservation, kHandJointCount> cam;
      for (int i = 0; i < kHandJointCount; ++i) {
        const json& oj = cj.at(i);
        if (oj.is_null()) continue;
        cam[i].pixel = {oj.at("u").get<double>(), oj.at("v").get<double>()};
        cam[i].confidence = oj.at("c").get<double>();
        cam[i].present = true;
      }
      kp.joints.push_back(cam);
    }
    kp.validate();
    return kp;
  });
}

inline void save_keypoints(const std::vector<Keypoints2D>& frames,
                           const std::string& path) {
  std::vector<json> lines;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    lines.push_back(keypoints_frame_to_json(int(f), frames[f]));
  }
  write_jsonl(lines, path);
}

inline std::vector<Keypoints2D> load_keypoints(const std::string& path) {
  std::vector<Keypoints2D> frames;
  for (const json& j : read_jsonl(path)) {
    frames.push_back(keypoints_frame_from_json(j, path));
  }
  return frames;
}

// ---- fused 3D keypoints (JSONL) ----

inline json fused_frame_to_json(int frame, const FusedKeypoints3D& fused) {
  json joints = json::array();
  for (const FusedJoint& fj : fused.joints) {
    if (!fj.present) {
      joints.push_back({{"failure", fj.failure}});
      continue;
    }
    joints.push_back({{"p",
                       {fj.position.x(), fj.position.y(), fj.position.z()}},
                      {"valid", fj.valid},
                      {"inliers", fj.inlier_count}});
  }
  return {{"frame", frame}, {"joints", joints}};
}

inline FusedKeypoints3D fused_frame_from_json(const json& j,
                                              const std::string& context) {
  return detail::with_schema_context(context, [&] {
    FusedKeypoints3D fused;
    const json& joints = j.at("joints");
    require(int(joints.size()) == kHandJointCount, errc::schema_error,
            context + ": expected " + std::to_string(kHandJointCount) +
                " joints");
    for (int i = 0; i < kHandJointCount; ++i) {
      const json& fj = joints.at(i);
      if (fj.contains("failure")) {
        fused.joints[i].failure = fj.at("failure").get<std::string>();
        continue;
      }
      const json& p = fj.at("p");
      fused.joints[i].position =
          Eigen::Vector3d(p.at(0).get<double>(), p.at(1).get<double>(),
                          p.at(2).get<double>());
      fused.joints[i].valid =
          fj.at("valid").get<std::vector<std::uint8_t>>();
      fused.joints[i].inlier_count = fj.at("inliers").get<int>();
      fused.joints[i].present = true;
    }
    return fused;
  });
}

inline void save_fused(const std::vector<FusedKeypoints3D>& frames,
                       const std::string& path) {
  std::vector<json> lines;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    lines.push_back(fused_frame_to_json(int(f), frames[f]));
  }
  write_jsonl(lines, path);
}

inline std::vector<FusedKeypoints3D> load_fused(const std::string& path) {
  std::vector<FusedKeypoints3D> frames;
  for (const json& j : read_jsonl(path)) {
    frames.push_back(fused_frame_from_json(j, path));
  }
  return frames;
}

// ---- marker rig and tracks ----

inline json rig_to_json(const MarkerRig& rig) {
  json locals = json::array();
  for (const auto& p : rig.marker_local) {
    locals.push_back({p.x(), p.y(), p.z()});
  }
  return {{"marker_local", locals},
          {"tracked", rig.tracked},
          {"marker_radius", rig.marker_radius}};
}

inline MarkerRig rig_from_json(const json& j, const std::string& context) {
  return detail::with_schema_context(context, [&] {
    MarkerRig rig;
    for (const json& pj : j.at("marker_local")) {
      require(pj.size() == 3, errc::schema_error, context + ": marker point");
      rig.marker_local.emplace_back(pj.at(0).get<double>(),
                                    pj.at(1).get<double>(),
                                    pj.at(2).get<double>());
    }
    rig.tracked = j.at("tracked").get<std::vector<int>>();
    rig.marker_radius = j.value("marker_radius", 0.004);
    rig.validate();
    return rig;
  });
}

inline json marker_frame_to_json(int frame, const MarkerFrame& mf) {
  json positions = json::array();
  for (const auto& p : mf.position) {
    positions.push_back({p.x(), p.y(), p.z()});
  }
  return {{"frame", frame},
          {"positions", positions},
          {"visible", mf.visible}};
}

inline MarkerFrame marker_frame_from_json(const json& j,
                                          const std::string& context) {
  return detail::with_schema_context(context, [&] {
    MarkerFrame mf;
    for (const json& pj : j.at("positions")) {
      require(pj.size() == 3, errc::schema_error,
              context + ": marker position");
      mf.position.emplace_back(pj.at(0).get<double>(), pj.at(1).get<double>(),
                               pj.at(2).get<double>());
    }
    mf.visible = j.at("visible").get<std::vector<std::uint8_t>>();
    require(mf.visible.size() == mf.position.size(), errc::schema_error,
            context + ": visible flags do not match positions");
    return mf;
  });
}

inline void save_markers(const std::vector<MarkerFrame>& frames,
                         const std::string& path) {
  std::vector<json> lines;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    lines.push_back(marker_frame_to_json(int(f), frames[f]));
  }
  write_jsonl(lines, path);
}

inline std::vector<MarkerFrame> load_markers(const std::string& path) {
  std::vector<MarkerFrame> frames;
  for (const json& j : read_jsonl(path)) {
    frames.push_back(marker_frame_from_json(j, path));
  }
  return frames;
}

// ---- timestamps and calibration targets ----

inline json streams_to_json(const TimestampStream& reference,
                            const std::vector<TimestampStream>& streams) {
  json arr = json::array();
  for (const TimestampStream& s : streams) {
    arr.push_back({{"sensor_id", s.sensor_id}, {"timestamps", s.timestamps}});
  }
  return {{"reference",
           {{"sensor_id", reference.sensor_id},
            {"timestamps", reference.timestamps}}},
          {"streams", arr}};
}

inline TimestampStream stream_from_json(const json& j,
                                        const std::string& context) {
  return detail::with_schema_context(context, [&] {
    TimestampStream s;
    s.sensor_id = j.at("sensor_id").get<std::string>();
    s.timestamps = j.at("timestamps").get<std::vector<std::int64_t>>();
    s.validate();
    return s;
  });
}

inline json calibration_to_json(
    const std::vector<std::vector<CalibrationObservation>>& per_camera) {
  json arr = json::array();
  for (std::size_t c = 0; c < per_camera.size(); ++c) {
    json obs = json::array();
    for (const CalibrationObservation& o : per_camera[c]) {
      obs.push_back({{"world",
                      {o.marker_world.x(), o.marker_world.y(),
                       o.marker_world.z()}},
                     {"pixel", {o.pixel.x(), o.pixel.y()}}});
    }
    arr.push_back({{"id", "cam" + std::to_string(c)}, {"observations", obs}});
  }
  return {{"cameras", arr}};
}

inline std::vector<std::vector<CalibrationObservation>> calibration_from_json(
    const json& j, const std::string& context) {
  return detail::with_schema_context(context, [&] {
    std::vector<std::vector<CalibrationObservation>> per_camera;
    for (const json& cj : j.at("cameras")) {
      std::vector<CalibrationObservation> obs;
      for (const json& oj : cj.at("observations")) {
        CalibrationObservation o;
        const json& w = oj.at("world");
        const json& p = oj.at("pixel");
        require(w.size() == 3 && p.size() == 2, errc::schema_error,
                context + ": bad observation shape");
        o.marker_world = Eigen::Vector3d(w.at(0).get<double>(),
                                         w.at(1).get<double>(),
                                         w.at(2).get<double>());
        o.pixel = Eigen::Vector2d(p.at(0).get<double>(),
                                  p.at(1).get<double>());
        obs.push_back(o);
      }
      per_camera.push_back(std::move(obs));
    }
    return per_camera;
  });
}

// ---- hand pose parameters and fits ----

inline json pose_params_to_json(const HandPoseParams& p) {
  return {{"theta", std::vector<double>(p.theta.data(),
                                        p.theta.data() + kThetaDim)},
          {"beta",
           std::vector<double>(p.beta.data(), p.beta.data() + kBetaDim)},
          {"t", {p.t.x(), p.t.y(), p.t.z()}}};
}

inline HandPoseParams pose_params_from_json(const json& j,
                                            const std::string& context) {
  return detail::with_schema_context(context, [&] {
    HandPoseParams p;
    const auto theta = j.at("theta").get<std::vector<double>>();
    const auto beta = j.at("beta").get<std::vector<double>>();
    const auto t = j.at("t").get<std::vector<double>>();
    require(int(theta.size()) == kThetaDim && int(beta.size()) == kBetaDim &&
                t.size() == 3,
            errc::schema_error, context + ": bad pose parameter shape");
    for (int i = 0; i < kThetaDim; ++i) p.theta(i) = theta[i];
    for (int i = 0; i < kBetaDim; ++i) p.beta(i) = beta[i];
    for (int i = 0; i < 3; ++i) p.t(i) = t[i];
    p.validate();
    return p;
  });
}

inline json hand_fit_to_json(const HandSequenceFit& fit) {
  json frames = json::array();
  for (const HandPoseParams& p : fit.params) {
    frames.push_back(pose_params_to_json(p));
  }
  json losses = json::array();
  for (const FrameLosses& fl : fit.losses) {
    losses.push_back({{"l_2d", fl.l_2d},
                      {"l_3d", fl.l_3d},
                      {"l_angle", fl.l_angle},
                      {"l_tc", fl.l_tc},
                      {"l_a", fl.l_a},
                      {"l_p", fl.l_p}});
  }
  json windows = json::array();
  for (const WindowDiagnostics& w : fit.windows) {
    windows.push_back({{"first_frame", w.first_frame},
                       {"frame_count", w.frame_count},
                       {"stage1_initial", w.stage1_initial},
                       {"stage1_final", w.stage1_final},
                       {"stage2_initial", w.stage2_initial},
                       {"stage2_final", w.stage2_final},
                       {"aborted", w.aborted}});
  }
  return {{"params", frames}, {"losses", losses}, {"windows", windows}};
}

inline std::vector<HandPoseParams> hand_fit_params_from_json(
    const json& j, const std::string& context) {
  return detail::with_schema_context(context, [&] {
    std::vector<HandPoseParams> params;
    for (const json& pj : j.at("params")) {
      params.push_back(pose_params_from_json(pj, context));
    }
    return params;
  });
}

// ---- object poses ----

inline json object_poses_to_json(const std::vector<ObjectPose>& poses) {
  json arr = json::array();
  for (std::size_t f = 0; f < poses.size(); ++f) {
    json j = transform_to_json(poses[f].model_to_world);
    j["frame"] = int(f);
    j["rms"] = poses[f].rms;
    j["used_markers"] = poses[f].used_markers;
    arr.push_back(j);
  }
  return {{"poses", arr}};
}

inline std::vector<RigidTransform> object_poses_from_json(
    const json& j, const std::string& context) {
  return detail::with_schema_context(context, [&] {
    std::vector<RigidTransform> poses;
    for (const json& pj : j.at("poses")) {
      poses.push_back(transform_from_json(pj, context));
    }
    return poses;
  });
}

// ---- registration ----

inline json registration_to_json(const RegistrationResult& res) {
  return {{"rig_to_model", transform_to_json(res.rig_to_model)},
          {"contact", res.contact},
          {"penetration", res.penetration},
          {"active", res.active},
          {"objective_initial", res.objective_initial},
          {"objective_final", res.objective_final},
          {"iterations", res.iterations}};
}

// ---- scene spec and ground truth ----

inline json scene_spec_to_json(const SceneSpec& spec) {
  json left = json::array();
  for (const HandKeyframe& k : spec.left_motion) {
    json kj = pose_params_to_json(k.pose);
    kj["frame"] = k.frame;
    left.push_back(kj);
  }
  json right = json::array();
  for (const HandKeyframe& k : spec.right_motion) {
    json kj = pose_params_to_json(k.pose);
    kj["frame"] = k.frame;
    right.push_back(kj);
  }
  json object_motion = json::array();
  for (const ObjectKeyframe& k : spec.object_motion) {
    json kj = transform_to_json(k.pose);
    kj["frame"] = k.frame;
    object_motion.push_back(kj);
  }
  return {{"frames", spec.frames},
          {"fps", spec.fps},
          {"camera_count", spec.camera_count},
          {"ring_radius", spec.ring_radius},
          {"ring_height_low", spec.ring_height_low},
          {"ring_height_high", spec.ring_height_high},
          {"fx", spec.fx},
          {"image_width", spec.image_width},
          {"image_height", spec.image_height},
          {"hand_vertex_count", spec.hand_vertex_count},
          {"marker_count", spec.marker_count},
          {"calibration_points", spec.calibration_points},
          {"registration_shift_mm", spec.registration_shift_mm},
          {"registration_angle_deg", spec.registration_angle_deg},
          {"object",
           {{"primitive", spec.object.primitive},
            {"size",
             {spec.object.size.x(), spec.object.size.y(),
              spec.object.size.z()}},
            {"resolution", spec.object.resolution},
            {"mesh_path", spec.object.mesh_path}}},
          {"noise",
           {{"keypoint_sigma_px", spec.noise.keypoint_sigma_px},
            {"outlier_rate", spec.noise.outlier_rate},
            {"marker_jitter_mm", spec.noise.marker_jitter_mm}}},
          {"motion",
           {{"left", left}, {"right", right}, {"object", object_motion}}},
          {"seed", spec.seed}};
}

inline SceneSpec scene_spec_from_json(const json& j,
                                      const std::string& context) {
  return detail::with_schema_context(context, [&] {
    SceneSpec spec;
    spec.frames = j.value("frames", spec.frames);
    spec.fps = j.value("fps", spec.fps);
    spec.camera_count = j.value("camera_count", spec.camera_count);
    spec.ring_radius = j.value("ring_radius", spec.ring_radius);
    spec.ring_height_low = j.value("ring_height_low", spec.ring_height_low);
    spec.ring_height_high =
        j.value("ring_height_high", spec.ring_height_high);
    spec.fx = j.value("fx", spec.fx);
    spec.image_width = j.value("image_width", spec.image_width);
    spec.image_height = j.value("image_height", spec.image_height);
    spec.hand_vertex_count =
        j.value("hand_vertex_count", spec.hand_vertex_count);
    spec.marker_count = j.value("marker_count", spec.marker_count);
    spec.calibration_points =
        j.value("calibration_points", spec.calibration_points);
    spec.registration_shift_mm =
        j.value("registration_shift_mm", spec.registration_shift_mm);
    spec.registration_angle_deg =
        j.value("registration_angle_deg", spec.registration_angle_deg);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("object")) {
      const json& oj = j.at("object");
      spec.object.primitive = oj.value("primitive", spec.object.primitive);
      if (oj.contains("size")) {
        const json& s = oj.at("size");
        require(s.size() == 3, errc::schema_error, context + ": object size");
        spec.object.size = Eigen::Vector3d(s.at(0).get<double>(),
                                           s.at(1).get<double>(),
                                           s.at(2).get<double>());
      }
      spec.object.resolution = oj.value("resolution", spec.object.resolution);
      spec.object.mesh_path = oj.value("mesh_path", spec.object.mesh_path);
    }
    if (j.contains("noise")) {
      const json& nj = j.at("noise");
      spec.noise.keypoint_sigma_px =
          nj.value("keypoint_sigma_px", spec.noise.keypoint_sigma_px);
      spec.noise.outlier_rate =
          nj.value("outlier_rate", spec.noise.outlier_rate);
      spec.noise.marker_jitter_mm =
          nj.value("marker_jitter_mm", spec.noise.marker_jitter_mm);
    }
    if (j.contains("motion")) {
      const json& mj = j.at("motion");
      for (const json& kj : mj.value("left", json::array())) {
        HandKeyframe k;
        k.frame = kj.at("frame").get<int>();
        k.pose = pose_params_from_json(kj, context + ": left keyframe");
        spec.left_motion.push_back(k);
      }
      for (const json& kj : mj.value("right", json::array())) {
        HandKeyframe k;
        k.frame = kj.at("frame").get<int>();
        k.pose = pose_params_from_json(kj, context + ": right keyframe");
        spec.right_motion.push_back(k);
      }
      for (const json& kj : mj.value("object", json::array())) {
        ObjectKeyframe k;
        k.frame = kj.at("frame").get<int>();
        k.pose = transform_from_json(kj, context + ": object keyframe");
        spec.object_motion.push_back(k);
      }
    }
    spec.validate();
    return spec;
  });
}

inline json truth_to_json(const GroundTruthBundle& bundle) {
  json frames = json::array();
  for (const FrameTruth& t : bundle.truth) {
    frames.push_back({{"left", pose_params_to_json(t.left)},
                      {"right", pose_params_to_json(t.right)},
                      {"object", transform_to_json(t.object_pose)}});
  }
  return {{"fps", bundle.spec.fps},
          {"frames", frames},
          {"rig_to_model", transform_to_json(bundle.rig_to_model)},
          {"registration_init",
           transform_to_json(bundle.registration_init)}};
}

struct TruthFile {
  double fps = 30.0;
  std::vector<FrameTruth> frames;
  RigidTransform rig_to_model;
  RigidTransform registration_init;
};

inline TruthFile truth_from_json(const json& j, const std::string& context) {
  return detail::with_schema_context(context, [&] {
    TruthFile truth;
    truth.fps = j.value("fps", 30.0);
    for (const json& fj : j.at("frames")) {
      FrameTruth t;
      t.left = pose_params_from_json(fj.at("left"), context + ": left");
      t.right = pose_params_from_json(fj.at("right"), context + ": right");
      t.object_pose = transform_from_json(fj.at("object"),
                                          context + ": object");
      truth.frames.push_back(t);
    }
    truth.rig_to_model =
        transform_from_json(j.at("rig_to_model"), context + ": rig_to_model");
    truth.registration_init = transform_from_json(
        j.at("registration_init"), context + ": registration_init");
    return truth;
  });
}

// ---- metric report ----

inline json report_to_json(const MetricReport& r) {
  return {{"mpjpe_left_mm", r.mpjpe_left_mm},
          {"pa_mpjpe_left_mm", r.pa_mpjpe_left_mm},
          {"accel_left_ms2", r.accel_left_ms2},
          {"mpjpe_right_mm", r.mpjpe_right_mm},
          {"pa_mpjpe_right_mm", r.pa_mpjpe_right_mm},
          {"accel_right_ms2", r.accel_right_ms2},
          {"translation_error_mm", r.translation_error_mm},
          {"rotation_error_deg", r.rotation_error_deg}};
}

}  // namespace hofit
