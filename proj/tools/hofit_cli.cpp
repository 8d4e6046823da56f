// Command-line front end for the hofit pipeline. Each subcommand runs one
// stage; `all` chains every stage on a synthetic scene. Exit codes: 0 on
// success, 2 for missing/malformed inputs, 1 for numeric failures.
//
// Option precedence: built-in defaults < --config file < HOFIT_* environment
// variables < explicit flags.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hofit/pipeline.hpp"

namespace {

int exit_code_for(hofit::errc code) {
  switch (code) {
    case hofit::errc::missing_input:
    case hofit::errc::parse_error:
    case hofit::errc::schema_error:
      return 2;
    default:
      return 1;
  }
}

// Flags bound through this struct stay empty/negative unless the user sets
// them, so config-file values survive when a flag is absent.
struct CliOverrides {
  std::string config_path;
  std::string cameras, keypoints_left, keypoints_right, markers, rig;
  std::string registration_init, object_mesh, hand_model, timestamps;
  std::string calibration, truth, scene, output_dir;
  std::int64_t seed = -1;
  int jobs = -1;
  double fusion_radius_px = -1.0;
  int fusion_iterations = -1;
  double sync_max_gap_ms = -1.0;
};

void apply_env(hofit::PipelineConfig& config) {
  if (const char* v = std::getenv("HOFIT_SEED")) {
    config.seed = std::strtoull(v, nullptr, 10);
  }
  if (const char* v = std::getenv("HOFIT_JOBS")) {
    config.jobs = std::max(1, std::atoi(v));
  }
  if (const char* v = std::getenv("HOFIT_OUTPUT_DIR")) {
    config.output_dir = v;
  }
}

hofit::PipelineConfig resolve(const CliOverrides& o) {
  hofit::PipelineConfig config;
  if (!o.config_path.empty()) config = hofit::load_config(o.config_path);
  apply_env(config);

  const auto take = [](const std::string& value, std::string& into) {
    if (!value.empty()) into = value;
  };
  take(o.cameras, config.cameras);
  take(o.keypoints_left, config.keypoints_left);
  take(o.keypoints_right, config.keypoints_right);
  take(o.markers, config.markers);
  take(o.rig, config.rig);
  take(o.registration_init, config.registration_init);
  take(o.object_mesh, config.object_mesh);
  take(o.hand_model, config.hand_model_file);
  take(o.timestamps, config.timestamps);
  take(o.calibration, config.calibration);
  take(o.truth, config.truth);
  take(o.scene, config.scene);
  take(o.output_dir, config.output_dir);
  if (o.seed >= 0) config.seed = static_cast<std::uint64_t>(o.seed);
  if (o.jobs >= 1) config.jobs = o.jobs;
  if (o.fusion_radius_px > 0.0) config.fusion_radius_px = o.fusion_radius_px;
  if (o.fusion_iterations > 0) config.fusion_iterations = o.fusion_iterations;
  if (o.sync_max_gap_ms > 0.0) config.sync_max_gap_ms = o.sync_max_gap_ms;
  return config;
}

void add_common(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--jobs", o.jobs, "worker thread count");
  cmd->add_option("--out", o.output_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hand-object capture pipeline"};
  app.require_subcommand(1);
  CliOverrides o;

  CLI::App* calibrate = app.add_subcommand(
      "calibrate-extrinsic", "solve camera extrinsics from correspondences");
  add_common(calibrate, o);
  calibrate->add_option("--cameras", o.cameras, "camera definitions");
  calibrate->add_option("--calibration", o.calibration,
                        "2D/3D correspondence file");

  CLI::App* sync = app.add_subcommand(
      "sync", "match sensor streams onto the reference clock");
  add_common(sync, o);
  sync->add_option("--timestamps", o.timestamps, "timestamp streams");
  sync->add_option("--max-gap-ms", o.sync_max_gap_ms,
                   "maximum pairing gap in milliseconds");

  CLI::App* fuse = app.add_subcommand(
      "fuse-keypoints", "triangulate multi-view keypoints for both hands");
  add_common(fuse, o);
  fuse->add_option("--cameras", o.cameras, "camera definitions");
  fuse->add_option("--left", o.keypoints_left, "left-hand 2D keypoints");
  fuse->add_option("--right", o.keypoints_right, "right-hand 2D keypoints");
  fuse->add_option("--radius-px", o.fusion_radius_px, "inlier radius");
  fuse->add_option("--iterations", o.fusion_iterations, "RANSAC iterations");

  CLI::App* reg = app.add_subcommand(
      "register-object", "register the marker rig onto the object mesh");
  add_common(reg, o);
  reg->add_option("--rig", o.rig, "marker rig definition");
  reg->add_option("--mesh", o.object_mesh, "object mesh (OBJ)");
  reg->add_option("--init", o.registration_init, "initial transform file");

  CLI::App* track = app.add_subcommand(
      "track-object", "per-frame object poses from marker tracks");
  add_common(track, o);
  track->add_option("--rig", o.rig, "marker rig definition");
  track->add_option("--markers", o.markers, "marker positions per frame");

  CLI::App* fit =
      app.add_subcommand("fit-hands", "fit hand model to fused keypoints");
  add_common(fit, o);
  fit->add_option("--cameras", o.cameras, "camera definitions");
  fit->add_option("--left", o.keypoints_left, "left-hand 2D keypoints");
  fit->add_option("--right", o.keypoints_right, "right-hand 2D keypoints");
  fit->add_option("--model", o.hand_model, "hand model file");
  fit->add_option("--mesh", o.object_mesh, "object mesh (OBJ)");

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "score outputs against ground truth");
  add_common(evaluate, o);
  evaluate->add_option("--model", o.hand_model, "hand model file");
  evaluate->add_option("--truth", o.truth, "ground truth file");

  CLI::App* synth = app.add_subcommand(
      "synth", "generate a synthetic scene and all pipeline inputs");
  add_common(synth, o);
  synth->add_option("--scene", o.scene, "scene description file");

  CLI::App* all =
      app.add_subcommand("all", "synthesize a scene and run every stage");
  add_common(all, o);
  all->add_option("--scene", o.scene, "scene description file");

  CLI11_PARSE(app, argc, argv);

  try {
    const hofit::PipelineConfig config = resolve(o);
    if (calibrate->parsed()) hofit::stage_calibrate(config);
    if (sync->parsed()) hofit::stage_sync(config);
    if (fuse->parsed()) hofit::stage_fuse(config);
    if (reg->parsed()) hofit::stage_register(config);
    if (track->parsed()) hofit::stage_track(config);
    if (fit->parsed()) hofit::stage_fit(config);
    if (evaluate->parsed()) hofit::stage_evaluate(config);
    if (synth->parsed()) hofit::stage_synth(config);
    if (all->parsed()) hofit::run_all(config);
  } catch (const hofit::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
