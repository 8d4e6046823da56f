#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hofit/serialization.hpp"

namespace hofit {

inline constexpr const char* kPipelineVersion = "0.1.0";

// Index-addressed parallel loop. Work lands in caller-owned slots keyed by
// index, so results are identical for any worker count; the first worker
// exception is rethrown after all workers stop.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// FNV-1a over a file's bytes; the manifest fingerprint.
inline std::string fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::missing_input, "cannot open " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buffer[i]);
      h *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

struct PipelineConfig {
  // Artifact paths; stages read the subset they need.
  std::string cameras;
  std::string keypoints_left;
  std::string keypoints_right;
  std::string markers;
  std::string rig;
  std::string registration_init;  // optional transform file
  std::string object_mesh;
  std::string hand_model_file;
  std::string timestamps;
  std::string calibration;
  std::string truth;
  std::string scene;  // SceneSpec for the synth stage
  std::string output_dir = ".";

  double fusion_radius_px = kDefaultInlierRadiusPx;
  int fusion_iterations = 200;
  RegistrationOptions registration;
  double sync_max_gap_ms = 17.0;
  FittingWeights fitting;
  std::uint64_t seed = 0;
  int jobs = 1;
};

inline PipelineConfig config_from_json(const json& j,
                                       const std::string& context) {
  return detail::with_schema_context(context, [&] {
    PipelineConfig c;
    const json paths = j.value("paths", json::object());
    c.cameras = paths.value("cameras", c.cameras);
    c.keypoints_left = paths.value("keypoints_left", c.keypoints_left);
    c.keypoints_right = paths.value("keypoints_right", c.keypoints_right);
    c.markers = paths.value("markers", c.markers);
    c.rig = paths.value("rig", c.rig);
    c.registration_init =
        paths.value("registration_init", c.registration_init);
    c.object_mesh = paths.value("object_mesh", c.object_mesh);
    c.hand_model_file = paths.value("hand_model", c.hand_model_file);
    c.timestamps = paths.value("timestamps", c.timestamps);
    c.calibration = paths.value("calibration", c.calibration);
    c.truth = paths.value("truth", c.truth);
    c.scene = paths.value("scene", c.scene);
    c.output_dir = paths.value("output_dir", c.output_dir);

    const json fusion = j.value("fusion", json::object());
    c.fusion_radius_px = fusion.value("radius_px", c.fusion_radius_px);
    c.fusion_iterations = fusion.value("iterations", c.fusion_iterations);

    const json reg = j.value("registration", json::object());
    c.registration.alpha = reg.value("alpha", c.registration.alpha);
    c.registration.lr = reg.value("lr", c.registration.lr);
    c.registration.max_iter = reg.value("max_iter", c.registration.max_iter);
    c.registration.rel_tol = reg.value("rel_tol", c.registration.rel_tol);
    c.registration.patience = reg.value("patience", c.registration.patience);

    const json sync = j.value("sync", json::object());
    c.sync_max_gap_ms = sync.value("max_gap_ms", c.sync_max_gap_ms);

    const json fit = j.value("fitting", json::object());
    FittingWeights& w = c.fitting;
    w.lambda_2d = fit.value("lambda_2d", w.lambda_2d);
    w.lambda_3d = fit.value("lambda_3d", w.lambda_3d);
    w.lambda_angle = fit.value("lambda_angle", w.lambda_angle);
    w.lambda_tc = fit.value("lambda_tc", w.lambda_tc);
    w.lambda_a = fit.value("lambda_a", w.lambda_a);
    w.lambda_p = fit.value("lambda_p", w.lambda_p);
    w.attraction_radius = fit.value("attraction_radius", w.attraction_radius);
    w.lr = fit.value("lr", w.lr);
    w.stage1_iterations = fit.value("stage1_iterations", w.stage1_iterations);
    w.stage2_iterations = fit.value("stage2_iterations", w.stage2_iterations);
    w.window = fit.value("window", w.window);
    w.overlap = fit.value("overlap", w.overlap);

    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    require(c.jobs >= 1, errc::schema_error, context + ": jobs must be >= 1");
    return c;
  });
}

inline PipelineConfig load_config(const std::string& path) {
  return config_from_json(read_json(path), path);
}

namespace detail {

inline std::string join_path(const std::string& dir,
                             const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace detail

// One manifest per stage: seed, version, and an FNV-1a fingerprint of every
// file read and written. Paths under the output directory are recorded
// relative to it and nothing clock- or parallelism-dependent is included,
// so reruns with the same seed produce byte-identical manifests.
struct StageManifest {
  std::string stage;
  std::string base_dir;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;

  std::string key_for(const std::string& path) const {
    const std::string prefix =
        (std::filesystem::path(base_dir) / "").string();
    if (path.size() > prefix.size() &&
        path.compare(0, prefix.size(), prefix) == 0) {
      return path.substr(prefix.size());
    }
    return path;
  }

  void add_input(const std::string& path) {
    inputs[key_for(path)] = fnv1a_file(path);
  }
  void add_output(const std::string& path) {
    outputs[key_for(path)] = fnv1a_file(path);
  }

  void write(const std::string& output_dir) const {
    const json j = {{"stage", stage},
                    {"seed", seed},
                    {"version", kPipelineVersion},
                    {"inputs", inputs},
                    {"outputs", outputs}};
    write_json(j, detail::join_path(output_dir, "manifest_" + stage + ".json"));
  }
};

inline StageManifest make_manifest(const std::string& stage,
                                   const PipelineConfig& config) {
  StageManifest m;
  m.stage = stage;
  m.base_dir = config.output_dir;
  m.seed = config.seed;
  return m;
}

// ---- stages ----

// Scene synthesis: every downstream input plus the ground truth.
inline StageManifest stage_synth(const PipelineConfig& config) {
  SceneSpec spec;
  StageManifest manifest = make_manifest("synth", config);
  if (!config.scene.empty()) {
    spec = scene_spec_from_json(read_json(config.scene), config.scene);
    manifest.add_input(config.scene);
  } else {
    spec = SceneSpec::canonical();
  }
  spec.seed = config.seed;
  const GroundTruthBundle bundle = generate(spec);

  const std::string& dir = config.output_dir;
  std::filesystem::create_directories(dir);
  const auto out = [&](const std::string& name) {
    return detail::join_path(dir, name);
  };
  save_cameras(bundle.cameras, out("cameras.json"));
  save_keypoints(bundle.noisy_left, out("keypoints_left.jsonl"));
  save_keypoints(bundle.noisy_right, out("keypoints_right.jsonl"));
  save_markers(bundle.noisy_markers, out("markers.jsonl"));
  write_json(rig_to_json(bundle.rig), out("rig.json"));
  write_json(transform_to_json(bundle.registration_init),
             out("registration_init.json"));
  save_obj(bundle.object, out("object.obj"));
  save_model(bundle.model, out("hand_model.bin"));
  write_json(streams_to_json(bundle.reference_stream, bundle.camera_streams),
             out("timestamps.json"));
  write_json(calibration_to_json(bundle.calibration_noisy),
             out("calibration.json"));
  write_json(truth_to_json(bundle), out("truth.json"));
  write_json(scene_spec_to_json(spec), out("scene.json"));
  for (const char* name :
       {"cameras.json", "keypoints_left.jsonl", "keypoints_right.jsonl",
        "markers.jsonl", "rig.json", "registration_init.json", "object.obj",
        "hand_model.bin", "timestamps.json", "calibration.json", "truth.json",
        "scene.json"}) {
    manifest.add_output(out(name));
  }
  manifest.write(dir);
  return manifest;
}

// PnP extrinsics from 2D/3D correspondences; intrinsics pass through.
inline StageManifest stage_calibrate(const PipelineConfig& config) {
  StageManifest manifest = make_manifest("calibrate-extrinsic", config);
  const std::vector<CameraModel> base = load_cameras(config.cameras);
  const auto observations = calibration_from_json(
      read_json(config.calibration), config.calibration);
  manifest.add_input(config.cameras);
  manifest.add_input(config.calibration);
  require(observations.size() == base.size(), errc::shape_mismatch,
          "calibration camera count does not match the camera file");

  std::vector<CameraModel> calibrated = base;
  std::vector<double> residuals(base.size(), 0.0);
  parallel_for(int(base.size()), config.jobs, [&](int c) {
    CameraModel intrinsic = base[c];
    intrinsic.extrinsic = RigidTransform::identity();
    const ExtrinsicSolution sol =
        solve_extrinsic(intrinsic, observations[c]);
    calibrated[c].extrinsic = sol.extrinsic;
    residuals[c] = sol.mean_reprojection_px;
  });

  json out = cameras_to_json(calibrated);
  for (std::size_t c = 0; c < base.size(); ++c) {
    out.at("cameras").at(c)["mean_reprojection_px"] = residuals[c];
  }
  std::filesystem::create_directories(config.output_dir);
  const std::string path =
      detail::join_path(config.output_dir, "cameras_calibrated.json");
  write_json(out, path);
  manifest.add_output(path);
  manifest.write(config.output_dir);
  return manifest;
}

// Nearest-neighbor frame matching of every stream onto the reference clock.
inline StageManifest stage_sync(const PipelineConfig& config) {
  StageManifest manifest = make_manifest("sync", config);
  const json j = read_json(config.timestamps);
  manifest.add_input(config.timestamps);
  const TimestampStream reference =
      stream_from_json(j.at("reference"), config.timestamps);
  json pairs = json::array();
  detail::with_schema_context(config.timestamps, [&] {
    for (const json& sj : j.at("streams")) {
      const TimestampStream stream =
          stream_from_json(sj, config.timestamps);
      json matches = json::array();
      for (const TimestampMatch& m :
           match_streams(reference, stream, config.sync_max_gap_ms)) {
        matches.push_back({{"ref", m.ref_index},
                           {"other", m.other_index},
                           {"delta_ms", m.delta_ms}});
      }
      pairs.push_back(
          {{"sensor_id", stream.sensor_id}, {"matches", matches}});
    }
    return 0;
  });
  std::filesystem::create_directories(config.output_dir);
  const std::string path = detail::join_path(config.output_dir, "sync.json");
  write_json({{"reference", reference.sensor_id}, {"pairs", pairs}}, path);
  manifest.add_output(path);
  manifest.write(config.output_dir);
  return manifest;
}

// RANSAC triangulation of both hands, frame-parallel with per-frame seeds.
inline StageManifest stage_fuse(const PipelineConfig& config) {
  StageManifest manifest = make_manifest("fuse-keypoints", config);
  const std::vector<CameraModel> cameras = load_cameras(config.cameras);
  manifest.add_input(config.cameras);
  std::filesystem::create_directories(config.output_dir);

  const auto fuse_file = [&](const std::string& in_path,
                             const std::string& out_name,
                             std::uint64_t stream) {
    const std::vector<Keypoints2D> frames = load_keypoints(in_path);
    manifest.add_input(in_path);
    std::vector<FusedKeypoints3D> fused(frames.size());
    parallel_for(int(frames.size()), config.jobs, [&](int f) {
      fused[f] = fuse_hand(cameras, frames[f], config.fusion_radius_px,
                           config.fusion_iterations,
                           Rng::mix(config.seed, stream * 1000003 + f));
    });
    const std::string out_path =
        detail::join_path(config.output_dir, out_name);
    save_fused(fused, out_path);
    manifest.add_output(out_path);
  };
  fuse_file(config.keypoints_left, "fused_left.jsonl", 1);
  fuse_file(config.keypoints_right, "fused_right.jsonl", 2);
  manifest.write(config.output_dir);
  return manifest;
}

// Marker-rig to mesh registration from a rough initial transform.
inline StageManifest stage_register(const PipelineConfig& config) {
  StageManifest manifest = make_manifest("register-object", config);
  const MarkerRig rig = rig_from_json(read_json(config.rig), config.rig);
  const TriMesh mesh = load_obj(config.object_mesh);
  manifest.add_input(config.rig);
  manifest.add_input(config.object_mesh);
  RigidTransform init;
  if (!config.registration_init.empty()) {
    init = transform_from_json(read_json(config.registration_init),
                               config.registration_init);
    manifest.add_input(config.registration_init);
  }
  const RegistrationResult res =
      register_rig(rig, mesh, init, config.registration);
  std::filesystem::create_directories(config.output_dir);
  const std::string path =
      detail::join_path(config.output_dir, "registration.json");
  write_json(registration_to_json(res), path);
  manifest.add_output(path);
  manifest.write(config.output_dir);
  return manifest;
}

// Closed-form per-frame object poses from marker tracks.
inline StageManifest stage_track(const PipelineConfig& config) {
  StageManifest manifest = make_manifest("track-object", config);
  const MarkerRig rig = rig_from_json(read_json(config.rig), config.rig);
  const std::string reg_path =
      detail::join_path(config.output_dir, "registration.json");
  const RigidTransform rig_to_model = transform_from_json(
      read_json(reg_path).at("rig_to_model"), reg_path);
  const std::vector<MarkerFrame> frames = load_markers(config.markers);
  manifest.add_input(config.rig);
  manifest.add_input(reg_path);
  manifest.add_input(config.markers);

  std::vector<ObjectPose> poses(frames.size());
  parallel_for(int(frames.size()), config.jobs, [&](int f) {
    poses[f] = frame_object_pose(rig, rig_to_model, frames[f]);
  });
  const std::string path =
      detail::join_path(config.output_dir, "object_poses.json");
  write_json(object_poses_to_json(poses), path);
  manifest.add_output(path);
  manifest.write(config.output_dir);
  return manifest;
}

// Two-stage windowed fitting of both hands against the fused keypoints.
inline StageManifest stage_fit(const PipelineConfig& config) {
  StageManifest manifest = make_manifest("fit-hands", config);
  const std::vector<CameraModel> cameras = load_cameras(config.cameras);
  const HandModel model = load_model(config.hand_model_file);
  manifest.add_input(config.cameras);
  manifest.add_input(config.hand_model_file);

  TriMesh object;
  std::vector<RigidTransform> object_poses;
  const bool contact_possible =
      !config.object_mesh.empty() &&
      (config.fitting.lambda_a > 0.0 || config.fitting.lambda_p > 0.0);
  if (contact_possible) {
    object = load_obj(config.object_mesh);
    const std::string poses_path =
        detail::join_path(config.output_dir, "object_poses.json");
    object_poses =
        object_poses_from_json(read_json(poses_path), poses_path);
    manifest.add_input(config.object_mesh);
    manifest.add_input(poses_path);
  }

  const auto fit_file = [&](const std::string& kp_path,
                            const std::string& fused_name,
                            const std::string& out_name) {
    const std::vector<Keypoints2D> kp = load_keypoints(kp_path);
    const std::string fused_path =
        detail::join_path(config.output_dir, fused_name);
    const std::vector<FusedKeypoints3D> fused = load_fused(fused_path);
    manifest.add_input(kp_path);
    manifest.add_input(fused_path);
    require(kp.size() == fused.size(), errc::shape_mismatch,
            "keypoint and fused frame counts differ");
    HandSequence seq;
    for (std::size_t f = 0; f < kp.size(); ++f) {
      seq.frames.push_back({kp[f], fused[f]});
    }
    if (contact_possible) {
      seq.object = &object;
      seq.object_poses = object_poses;
    }
    const HandSequenceFit fit =
        fit_hand_sequence(model, cameras, seq, config.fitting);
    const std::string out_path =
        detail::join_path(config.output_dir, out_name);
    write_json(hand_fit_to_json(fit), out_path);
    manifest.add_output(out_path);
  };
  std::filesystem::create_directories(config.output_dir);
  fit_file(config.keypoints_left, "fused_left.jsonl", "fit_left.json");
  fit_file(config.keypoints_right, "fused_right.jsonl", "fit_right.json");
  manifest.write(config.output_dir);
  return manifest;
}

// Metric report of the fitted sequences against the ground truth file.
inline StageManifest stage_evaluate(const PipelineConfig& config) {
  StageManifest manifest = make_manifest("evaluate", config);
  const HandModel model = load_model(config.hand_model_file);
  const TruthFile truth =
      truth_from_json(read_json(config.truth), config.truth);
  manifest.add_input(config.hand_model_file);
  manifest.add_input(config.truth);

  const auto load_fit = [&](const std::string& name) {
    const std::string path = detail::join_path(config.output_dir, name);
    manifest.add_input(path);
    return hand_fit_params_from_json(read_json(path), path);
  };
  const std::vector<HandPoseParams> left = load_fit("fit_left.json");
  const std::vector<HandPoseParams> right = load_fit("fit_right.json");
  const std::string poses_path =
      detail::join_path(config.output_dir, "object_poses.json");
  const std::vector<RigidTransform> object_poses =
      object_poses_from_json(read_json(poses_path), poses_path);
  manifest.add_input(poses_path);

  const std::size_t frames = truth.frames.size();
  require(left.size() == frames && right.size() == frames &&
              object_poses.size() == frames,
          errc::shape_mismatch, "outputs do not cover the truth frames");

  SkeletonSequence gt_left, gt_right, pred_left, pred_right;
  PoseSequence gt_obj, pred_obj;
  for (std::size_t f = 0; f < frames; ++f) {
    gt_left.frames.push_back(forward(model, truth.frames[f].left).joints);
    gt_right.frames.push_back(forward(model, truth.frames[f].right).joints);
    pred_left.frames.push_back(forward(model, left[f]).joints);
    pred_right.frames.push_back(forward(model, right[f]).joints);
    gt_obj.poses.push_back(truth.frames[f].object_pose);
    pred_obj.poses.push_back(object_poses[f]);
  }
  MetricReport report;
  report.mpjpe_left_mm = mpjpe(pred_left, gt_left);
  report.pa_mpjpe_left_mm = pa_mpjpe(pred_left, gt_left);
  report.mpjpe_right_mm = mpjpe(pred_right, gt_right);
  report.pa_mpjpe_right_mm = pa_mpjpe(pred_right, gt_right);
  if (frames >= 3) {
    report.accel_left_ms2 =
        acceleration_error(pred_left, gt_left, truth.fps);
    report.accel_right_ms2 =
        acceleration_error(pred_right, gt_right, truth.fps);
  }
  report.translation_error_mm = translation_error(pred_obj, gt_obj);
  report.rotation_error_deg = rotation_error(pred_obj, gt_obj);

  std::filesystem::create_directories(config.output_dir);
  const std::string path =
      detail::join_path(config.output_dir, "report.json");
  write_json(report_to_json(report), path);
  manifest.add_output(path);
  manifest.write(config.output_dir);
  return manifest;
}

// The whole pipeline on one scene, wiring each stage's outputs into the
// next stage's inputs under output_dir.
inline void run_all(const PipelineConfig& base) {
  PipelineConfig config = base;
  stage_synth(config);
  const auto out = [&](const std::string& name) {
    return detail::join_path(config.output_dir, name);
  };
  config.cameras = out("cameras.json");
  config.calibration = out("calibration.json");
  stage_calibrate(config);
  config.cameras = out("cameras_calibrated.json");
  config.timestamps = out("timestamps.json");
  stage_sync(config);
  config.keypoints_left = out("keypoints_left.jsonl");
  config.keypoints_right = out("keypoints_right.jsonl");
  stage_fuse(config);
  config.rig = out("rig.json");
  config.object_mesh = out("object.obj");
  config.registration_init = out("registration_init.json");
  stage_register(config);
  config.markers = out("markers.jsonl");
  stage_track(config);
  config.hand_model_file = out("hand_model.bin");
  stage_fit(config);
  config.truth = out("truth.json");
  stage_evaluate(config);
}

}  // namespace hofit
