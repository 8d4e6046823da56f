#include <catch2/catch_amalgamated.hpp>

#include "hofit/calibration.hpp"
#include "support.hpp"

using namespace hofit;
using testing::random_camera;
using testing::random_rigid;

namespace {

std::vector<CalibrationObservation> synth_observations(
    const CameraModel& cam, Rng& rng, int count, double pixel_noise = 0.0) {
  std::vector<CalibrationObservation> obs;
  while (int(obs.size()) < count) {
    const Eigen::Vector3d p = rng.gaussian3(0.3);
    try {
      CalibrationObservation o{p, cam.project(p)};
      if (pixel_noise > 0.0) o.pixel += rng.gaussian2(pixel_noise);
      obs.push_back(o);
    } catch (const error&) {
      continue;  // behind the camera; draw again
    }
  }
  return obs;
}

double pose_rotation_error(const RigidTransform& a, const RigidTransform& b) {
  return rotation_angle_between(a.rotation, b.rotation);
}

double pose_translation_error(const RigidTransform& a,
                              const RigidTransform& b) {
  return (a.translation - b.translation).norm();
}

}  // namespace

TEST_CASE("solve_extrinsic recovers a noiseless pose exactly") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    CameraModel cam = random_camera(rng);
    if (trial % 3 == 0) {
      cam.k1 = 0.05;
      cam.k2 = -0.01;
    }
    const auto obs = synth_observations(cam, rng, 12);
    const ExtrinsicSolution sol = solve_extrinsic(cam, obs);
    CHECK(pose_rotation_error(sol.extrinsic, cam.extrinsic) < 1e-6);
    CHECK(pose_translation_error(sol.extrinsic, cam.extrinsic) < 1e-6);
    CHECK(sol.mean_reprojection_px < 1e-6);
  }
}

TEST_CASE("solve_extrinsic works from the 6-point minimum for the DLT") {
  Rng rng(32);
  const CameraModel cam = random_camera(rng);
  const auto obs = synth_observations(cam, rng, 6);
  const ExtrinsicSolution sol = solve_extrinsic(cam, obs);
  CHECK(pose_rotation_error(sol.extrinsic, cam.extrinsic) < 1e-6);
  CHECK(pose_translation_error(sol.extrinsic, cam.extrinsic) < 1e-6);
}

TEST_CASE("solve_extrinsic handles 4 and 5 points via multi-start") {
  Rng rng(33);
  for (const int count : {4, 5}) {
    for (int trial = 0; trial < 5; ++trial) {
      const CameraModel cam = random_camera(rng);
      const auto obs = synth_observations(cam, rng, count);
      const ExtrinsicSolution sol = solve_extrinsic(cam, obs);
      // Small point sets can admit distinct zero-residual poses, so judge
      // the solver by its reprojection error, not by pose identity.
      CHECK(sol.mean_reprojection_px < 1e-6);
    }
  }
}

TEST_CASE("solve_extrinsic under half-pixel noise") {
  Rng rng(34);
  for (int trial = 0; trial < 30; ++trial) {
    const CameraModel cam = random_camera(rng, 0.9, 1.1);  // 1 m scene scale
    const auto obs = synth_observations(cam, rng, 12, 0.5);
    const ExtrinsicSolution sol = solve_extrinsic(cam, obs);
    CHECK(pose_rotation_error(sol.extrinsic, cam.extrinsic) <
          0.1 * std::numbers::pi / 180.0);
    CHECK(pose_translation_error(sol.extrinsic, cam.extrinsic) < 0.002);
  }
}

TEST_CASE("solve_extrinsic rejects 3 observations") {
  Rng rng(35);
  const CameraModel cam = random_camera(rng);
  const auto obs = synth_observations(cam, rng, 3);
  try {
    solve_extrinsic(cam, obs);
    FAIL("expected insufficient_observations");
  } catch (const error& e) {
    CHECK(e.code() == errc::insufficient_observations);
  }
}

TEST_CASE("solve_extrinsic rejects small coplanar sets") {
  Rng rng(36);
  const CameraModel cam = random_camera(rng);
  std::vector<CalibrationObservation> obs;
  for (int i = 0; i < 5; ++i) {
    const Eigen::Vector3d p(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                            0.1);
    obs.push_back({p, cam.project(p)});
  }
  try {
    solve_extrinsic(cam, obs);
    FAIL("expected degenerate_configuration");
  } catch (const error& e) {
    CHECK(e.code() == errc::degenerate_configuration);
  }
}

TEST_CASE("solve_extrinsic accepts 8 coplanar points") {
  Rng rng(37);
  const CameraModel cam = random_camera(rng);
  std::vector<CalibrationObservation> obs;
  for (int i = 0; i < 8; ++i) {
    const Eigen::Vector3d p(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                            0.1);
    obs.push_back({p, cam.project(p)});
  }
  const ExtrinsicSolution sol = solve_extrinsic(cam, obs);
  CHECK(sol.mean_reprojection_px < 1e-6);
}

TEST_CASE("solve_extrinsic is equivariant under world transforms") {
  Rng rng(38);
  for (int trial = 0; trial < 10; ++trial) {
    const CameraModel cam = random_camera(rng);
    auto obs = synth_observations(cam, rng, 10);
    const RigidTransform world = random_rigid(rng);
    for (auto& o : obs) o.marker_world = world(o.marker_world);
    const ExtrinsicSolution sol = solve_extrinsic(cam, obs);
    const RigidTransform expected = cam.extrinsic * world.inverse();
    CHECK(pose_rotation_error(sol.extrinsic, expected) < 1e-6);
    CHECK(pose_translation_error(sol.extrinsic, expected) < 1e-6);
  }
}

TEST_CASE("match_streams pairs identical streams with zero delta") {
  TimestampStream a{"cam0", {0, 33, 66, 100}};
  const auto matches = match_streams(a, a);
  REQUIRE(matches.size() == 4);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    CHECK(matches[i].ref_index == i);
    CHECK(matches[i].other_index == i);
    CHECK(matches[i].delta_ms == 0);
  }
}

TEST_CASE("match_streams tolerates a 10 ms shift at the default gap") {
  TimestampStream ref{"cam0", {}};
  TimestampStream other{"mocap", {}};
  for (int i = 0; i < 50; ++i) {
    ref.timestamps.push_back(1000 + 33 * i);
    other.timestamps.push_back(1010 + 33 * i);
  }
  const auto matches = match_streams(ref, other);
  REQUIRE(matches.size() == 50);
  for (const auto& m : matches) {
    CHECK(m.other_index == m.ref_index);
    CHECK(m.delta_ms == 10);
  }
}

TEST_CASE("match_streams drops pairs beyond the gap") {
  // 10 Hz spacing so a +30 ms shift cannot alias onto a neighboring frame.
  TimestampStream ref{"cam0", {}};
  TimestampStream other{"mocap", {}};
  for (int i = 0; i < 50; ++i) {
    ref.timestamps.push_back(1000 + 100 * i);
    other.timestamps.push_back(1030 + 100 * i);
  }
  CHECK(match_streams(ref, other).empty());
}

TEST_CASE("match_streams at 30 Hz aliases a +30 ms shift to the prior frame") {
  // With 33 ms spacing the nearest neighbor of frame i is frame i-1 of the
  // shifted stream, 3 ms early; nearest-neighbor matching keeps those.
  TimestampStream ref{"cam0", {}};
  TimestampStream other{"mocap", {}};
  for (int i = 0; i < 50; ++i) {
    ref.timestamps.push_back(1000 + 33 * i);
    other.timestamps.push_back(1030 + 33 * i);
  }
  const auto matches = match_streams(ref, other);
  REQUIRE(matches.size() == 49);
  for (const auto& m : matches) {
    CHECK(m.other_index + 1 == m.ref_index);
    CHECK(m.delta_ms == -3);
  }
}

TEST_CASE("match_streams respects the gap and uniqueness invariants") {
  Rng rng(39);
  TimestampStream ref{"cam0", {}};
  TimestampStream other{"mocap", {}};
  std::int64_t t = 0;
  for (int i = 0; i < 200; ++i) {
    t += rng.uniform_int(1, 50);
    ref.timestamps.push_back(t);
  }
  t = 5;
  for (int i = 0; i < 150; ++i) {
    t += rng.uniform_int(1, 60);
    other.timestamps.push_back(t);
  }
  const auto matches = match_streams(ref, other, 17.0);
  std::vector<bool> seen(ref.timestamps.size(), false);
  for (const auto& m : matches) {
    CHECK(std::abs(m.delta_ms) <= 17);
    CHECK(!seen[m.ref_index]);
    seen[m.ref_index] = true;
    CHECK(other.timestamps[m.other_index] - ref.timestamps[m.ref_index] ==
          m.delta_ms);
    // Nearest-neighbor: no other timestamp is strictly closer.
    for (const std::int64_t ot : other.timestamps) {
      CHECK(std::abs(ot - ref.timestamps[m.ref_index]) >=
            std::abs(m.delta_ms));
    }
  }
}

TEST_CASE("match_streams rejects non-increasing streams") {
  TimestampStream ref{"cam0", {0, 33, 33}};
  TimestampStream other{"mocap", {0, 33, 66}};
  try {
    match_streams(ref, other);
    FAIL("expected invariant_violation");
  } catch (const error& e) {
    CHECK(e.code() == errc::invariant_violation);
  }
}

TEST_CASE("match_streams rejects empty streams") {
  TimestampStream ref{"cam0", {0}};
  TimestampStream other{"mocap", {}};
  try {
    match_streams(ref, other);
    FAIL("expected empty_input");
  } catch (const error& e) {
    CHECK(e.code() == errc::empty_input);
  }
}
