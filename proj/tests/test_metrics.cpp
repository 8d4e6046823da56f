#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "hofit/metrics.hpp"
#include "hofit/rng.hpp"
#include "support.hpp"

using namespace hofit;

namespace {

SkeletonSequence random_skeleton(Rng& rng, int frames, double spread = 0.2) {
  SkeletonSequence s;
  s.frames.resize(frames);
  for (auto& f : s.frames) {
    for (int i = 0; i < kSkeletonJoints; ++i) {
      f.row(i) = rng.gaussian3(spread).transpose();
    }
  }
  return s;
}

}  // namespace

TEST_CASE("mpjpe closed forms") {
  Rng rng(120);
  const SkeletonSequence gt = random_skeleton(rng, 4);
  CHECK(mpjpe(gt, gt) == 0.0);

  SkeletonSequence pred = gt;
  for (auto& f : pred.frames) {
    f.col(1).array() += 0.010;  // 10 mm on every joint
  }
  CHECK(mpjpe(pred, gt) == Catch::Approx(10.0).margin(1e-9));

  // One joint of one frame off by 21*M mm averages to exactly 1 mm.
  pred = gt;
  pred.frames[2](5, 0) += 21.0 * 4.0 * 1e-3;
  CHECK(mpjpe(pred, gt) == Catch::Approx(1.0).margin(1e-9));

  SkeletonSequence shorter = gt;
  shorter.frames.pop_back();
  CHECK_THROWS_AS(mpjpe(shorter, gt), error);
  SkeletonSequence empty;
  CHECK_THROWS_AS(mpjpe(empty, empty), error);
}

TEST_CASE("pa_mpjpe removes similarity transforms and never exceeds mpjpe") {
  Rng rng(121);
  const SkeletonSequence gt = random_skeleton(rng, 3);
  CHECK(pa_mpjpe(gt, gt) == Catch::Approx(0.0).margin(1e-9));

  SkeletonSequence pred = gt;
  for (auto& f : pred.frames) {
    const RigidTransform t = testing::random_rigid(rng);
    const double s = rng.uniform(0.5, 2.0);
    for (int i = 0; i < kSkeletonJoints; ++i) {
      f.row(i) = (s * (t.rotation * f.row(i).transpose()) + t.translation)
                     .transpose();
    }
  }
  CHECK(pa_mpjpe(pred, gt) == Catch::Approx(0.0).margin(1e-9));

  for (int trial = 0; trial < 100; ++trial) {
    const SkeletonSequence a = random_skeleton(rng, 2);
    SkeletonSequence b = a;
    for (auto& f : b.frames) {
      for (int i = 0; i < kSkeletonJoints; ++i) {
        f.row(i) += rng.gaussian3(0.01).transpose();
      }
    }
    CHECK(pa_mpjpe(a, b) <= mpjpe(a, b) + 1e-9);
  }
}

TEST_CASE("mpjpe variants ignore a rigid transform applied to both sides") {
  Rng rng(122);
  const SkeletonSequence gt = random_skeleton(rng, 3);
  SkeletonSequence pred = gt;
  for (auto& f : pred.frames) {
    for (int i = 0; i < kSkeletonJoints; ++i) {
      f.row(i) += rng.gaussian3(0.005).transpose();
    }
  }
  const double base = mpjpe(pred, gt);
  const double base_pa = pa_mpjpe(pred, gt);

  const RigidTransform t = testing::random_rigid(rng);
  SkeletonSequence gt_moved = gt;
  SkeletonSequence pred_moved = pred;
  for (std::size_t f = 0; f < gt.frames.size(); ++f) {
    for (int i = 0; i < kSkeletonJoints; ++i) {
      gt_moved.frames[f].row(i) =
          t(gt.frames[f].row(i).transpose()).transpose();
      pred_moved.frames[f].row(i) =
          t(pred.frames[f].row(i).transpose()).transpose();
    }
  }
  CHECK(mpjpe(pred_moved, gt_moved) == Catch::Approx(base).margin(1e-9));
  CHECK(pa_mpjpe(pred_moved, gt_moved) == Catch::Approx(base_pa).margin(1e-9));
}

TEST_CASE("pose errors: identity, planted rotation, clamped overshoot") {
  Rng rng(123);
  PoseSequence gt;
  for (int f = 0; f < 5; ++f) {
    gt.poses.push_back(testing::random_rigid(rng));
  }
  CHECK(translation_error(gt, gt) == 0.0);
  CHECK(rotation_error(gt, gt) == Catch::Approx(0.0).margin(1e-5));

  PoseSequence pred = gt;
  const Eigen::Matrix3d rz =
      axis_angle_to_matrix(Eigen::Vector3d(0, 0, std::numbers::pi / 6.0));
  for (auto& p : pred.poses) {
    p.rotation = p.rotation * rz;
    p.translation += Eigen::Vector3d(0.004, 0.0, 0.003);
  }
  CHECK(rotation_error(pred, gt) == Catch::Approx(30.0).margin(1e-9));
  CHECK(translation_error(pred, gt) == Catch::Approx(5.0).margin(1e-9));
  CHECK(rotation_error(pred, gt) ==
        Catch::Approx(rotation_error(gt, pred)).margin(1e-12));

  // Trace overshoot beyond +3 must clamp to zero, not NaN.
  PoseSequence overshoot = gt;
  for (auto& p : overshoot.poses) {
    p.rotation *= 1.0 + 5e-13;
  }
  const double re = rotation_error(overshoot, gt);
  CHECK(std::isfinite(re));
  CHECK(re == 0.0);
}

TEST_CASE("acceleration error kills constant and linear disagreement") {
  Rng rng(124);
  const SkeletonSequence gt = random_skeleton(rng, 8);
  CHECK(acceleration_error(gt, gt) == 0.0);

  SkeletonSequence pred = gt;
  for (auto& f : pred.frames) f.array() += 0.05;
  CHECK(acceleration_error(pred, gt) == Catch::Approx(0.0).margin(1e-7));

  pred = gt;
  for (std::size_t f = 0; f < pred.frames.size(); ++f) {
    pred.frames[f].col(2).array() += 0.01 * double(f);
  }
  CHECK(acceleration_error(pred, gt) == Catch::Approx(0.0).margin(1e-7));

  // A single-frame spike d contributes |d| fps^2 (1 + 2 + 1) in total.
  pred = gt;
  const double d = 0.004;
  pred.frames[3](10, 1) += d;
  const double expected = 4.0 * d * 30.0 * 30.0 / (6.0 * kSkeletonJoints);
  CHECK(acceleration_error(pred, gt) ==
        Catch::Approx(expected).margin(1e-9));

  SkeletonSequence two = gt;
  two.frames.resize(2);
  SkeletonSequence two_gt = gt;
  two_gt.frames.resize(2);
  CHECK_THROWS_AS(acceleration_error(two, two_gt), error);
}

TEST_CASE("interaction field: zeros, sphere gap, brute force") {
  const TriMesh sphere = make_uv_sphere({0, 0, 0}, 1.0, 16, 16);
  const Eigen::VectorXd self_field = interaction_field(sphere, sphere);
  CHECK(self_field.minCoeff() == 0.0);
  CHECK(self_field.maxCoeff() == 0.0);

  const TriMesh far_sphere = make_uv_sphere({0, 0, 3.0}, 1.0, 16, 16);
  CHECK(interaction_field(sphere, far_sphere).minCoeff() ==
        Catch::Approx(1.0).margin(1e-12));

  Rng rng(125);
  for (int trial = 0; trial < 5; ++trial) {
    TriMesh a, b;
    for (int i = 0; i < 60; ++i) a.vertices.push_back(rng.gaussian3(0.5));
    for (int i = 0; i < 45; ++i) b.vertices.push_back(rng.gaussian3(0.5));
    const Eigen::VectorXd field = interaction_field(a, b);
    double min_ab = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.vertices.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : b.vertices) {
        best = std::min(best, (a.vertices[i] - q).norm());
      }
      CHECK(field(i) == Catch::Approx(best).margin(1e-12));
      min_ab = std::min(min_ab, best);
    }
    // Vertex-to-vertex minima are symmetric.
    CHECK(interaction_field(b, a).minCoeff() ==
          Catch::Approx(min_ab).margin(1e-12));
  }

  TriMesh empty;
  CHECK_THROWS_AS(interaction_field(empty, sphere), error);
  CHECK_THROWS_AS(interaction_field(sphere, empty), error);
}

TEST_CASE("contact ratio counts distance or volume hits") {
  // 0.5 mm gap: distance contact. 200 mm gap: none. Overlap: volume contact.
  const TriMesh base = make_uv_sphere({0, 0, 0}, 0.03, 12, 12);
  const TriMesh near_tool = make_uv_sphere({0, 0, 0.0605}, 0.03, 12, 12);
  const TriMesh far_tool = make_uv_sphere({0, 0, 0.2}, 0.03, 12, 12);
  const TriMesh overlap_tool = make_uv_sphere({0, 0, 0.055}, 0.03, 12, 12);

  CHECK(contact_ratio({{&base, &near_tool}}) == 100.0);
  CHECK(contact_ratio({{&base, &far_tool}}) == 0.0);
  CHECK(contact_ratio({{&base, &overlap_tool}}) == 100.0);
  CHECK(contact_ratio({{&base, &near_tool},
                       {&base, &near_tool},
                       {&base, &overlap_tool},
                       {&base, &far_tool}}) == 75.0);
  CHECK_THROWS_AS(contact_ratio({}), error);
}

TEST_CASE("collision ratio over environment lists") {
  const TriMesh hand = make_uv_sphere({0, 0, 0}, 0.03, 12, 12);
  const TriMesh clear = make_uv_sphere({0.2, 0, 0}, 0.03, 12, 12);
  const TriMesh overlapping = make_uv_sphere({0.055, 0, 0}, 0.03, 12, 12);

  CHECK(collision_ratio({{&hand, {&clear}}}) == 0.0);
  CHECK(collision_ratio({{&hand, {}}}) == 0.0);
  CHECK(collision_ratio({{&hand, {&clear, &overlapping}},
                         {&hand, {&clear}}}) == 50.0);
}

TEST_CASE("frechet distance: identity, planted mean shift, symmetry") {
  Rng rng(126);
  FeatureSet a;
  a.samples.resize(40, kFeatureDim);
  for (int r = 0; r < a.samples.rows(); ++r) {
    for (int c = 0; c < kFeatureDim; ++c) {
      a.samples(r, c) = rng.gaussian();
    }
  }
  CHECK(frechet_distance(a, a) == Catch::Approx(0.0).margin(1e-8));

  // Equal covariances: the distance is exactly the squared mean shift.
  FeatureSet b = a;
  Eigen::RowVectorXd shift(kFeatureDim);
  for (int c = 0; c < kFeatureDim; ++c) shift(c) = rng.gaussian(0.0, 0.2);
  b.samples.rowwise() += shift;
  CHECK(frechet_distance(a, b) ==
        Catch::Approx(shift.squaredNorm()).margin(1e-6));
  CHECK(frechet_distance(a, b) ==
        Catch::Approx(frechet_distance(b, a)).margin(1e-8));
  CHECK(frechet_distance(a, b) >= 0.0);

  FeatureSet tiny;
  tiny.samples.resize(1, kFeatureDim);
  tiny.samples.setZero();
  CHECK_THROWS_AS(frechet_distance(tiny, tiny), error);
}

TEST_CASE("frechet distance approximates the Gaussian closed form") {
  Rng rng(127);
  const int n = 40000;  // finite-sample bias decays ~1/n; 20k sits at ~0.11
  FeatureSet a, b;
  a.samples.resize(n, kFeatureDim);
  b.samples.resize(n, kFeatureDim);
  const double mean_shift = 1.0 / std::sqrt(double(kFeatureDim));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < kFeatureDim; ++c) {
      a.samples(r, c) = rng.gaussian();
      b.samples(r, c) = rng.gaussian() + mean_shift;
    }
  }
  CHECK(frechet_distance(a, b) == Catch::Approx(1.0).margin(0.1));
}

TEST_CASE("feature CSV round trip and rejection") {
  Rng rng(128);
  FeatureSet set;
  set.samples.resize(7, kFeatureDim);
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < kFeatureDim; ++c) {
      set.samples(r, c) = rng.gaussian(0.0, 3.0);
    }
  }
  const std::string path =
      (std::filesystem::temp_directory_path() / "hofit_features.csv")
          .string();
  save_feature_csv(set, path);
  const FeatureSet loaded = load_feature_csv(path);
  REQUIRE(loaded.samples.rows() == 7);
  CHECK((loaded.samples - set.samples).cwiseAbs().maxCoeff() == 0.0);

  {
    std::ofstream out(path);
    out << "1,2,3\n";
  }
  CHECK_THROWS_AS(load_feature_csv(path), error);
  {
    std::ofstream out(path);
    for (int c = 0; c < kFeatureDim; ++c) out << (c ? ",x" : "x");
    out << "\n";
  }
  CHECK_THROWS_AS(load_feature_csv(path), error);
  CHECK_THROWS_AS(load_feature_csv("/nonexistent/features.csv"), error);
  std::remove(path.c_str());
}
