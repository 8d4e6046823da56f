#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "hofit/common.hpp"
#include "hofit/geometry.hpp"
#include "hofit/mesh.hpp"
#include "hofit/spatial_index.hpp"
#include "hofit/voxel.hpp"

namespace hofit {

inline constexpr int kSkeletonJoints = 21;
inline constexpr int kFeatureDim = 64;

// Joint positions in meters, one 21 x 3 block per frame.
struct SkeletonSequence {
  std::vector<Eigen::Matrix<double, kSkeletonJoints, 3>> frames;

  void validate() const {
    for (const auto& f : frames) {
      require(f.allFinite(), errc::invariant_violation,
              "non-finite joint position");
    }
  }
};

// Object trajectory, one world pose per frame.
struct PoseSequence {
  std::vector<RigidTransform> poses;

  void validate() const {
    for (const auto& p : poses) {
      require(p.is_valid(1e-6), errc::invariant_violation,
              "pose rotation is not orthonormal");
    }
  }
};

// Row-per-sample feature matrix for distribution comparison.
struct FeatureSet {
  Eigen::MatrixXd samples;

  void validate() const {
    require(samples.cols() == kFeatureDim, errc::shape_mismatch,
            "features must have 64 columns");
    require(samples.rows() >= 2, errc::empty_input,
            "need at least 2 samples to estimate a covariance");
    require(samples.allFinite(), errc::invariant_violation,
            "non-finite feature value");
  }
};

namespace detail {

inline void require_matching(std::size_t pred, std::size_t gt) {
  require(pred == gt, errc::shape_mismatch, "sequence lengths differ");
  require(pred > 0, errc::empty_input, "empty sequence");
}

}  // namespace detail

// Mean per-joint position error in millimeters.
inline double mpjpe(const SkeletonSequence& pred, const SkeletonSequence& gt) {
  detail::require_matching(pred.frames.size(), gt.frames.size());
  double sum = 0.0;
  for (std::size_t f = 0; f < pred.frames.size(); ++f) {
    for (int i = 0; i < kSkeletonJoints; ++i) {
      sum += (pred.frames[f].row(i) - gt.frames[f].row(i)).norm();
    }
  }
  return 1000.0 * sum / (double(pred.frames.size()) * kSkeletonJoints);
}

// MPJPE after per-frame similarity alignment (rotation, translation, and
// scale) of the prediction onto the ground truth.
inline double pa_mpjpe(const SkeletonSequence& pred,
                       const SkeletonSequence& gt) {
  detail::require_matching(pred.frames.size(), gt.frames.size());
  double sum = 0.0;
  for (std::size_t f = 0; f < pred.frames.size(); ++f) {
    std::vector<Eigen::Vector3d> src(kSkeletonJoints), dst(kSkeletonJoints);
    for (int i = 0; i < kSkeletonJoints; ++i) {
      src[i] = pred.frames[f].row(i);
      dst[i] = gt.frames[f].row(i);
    }
    const AlignResult align = rigid_align(src, dst, /*with_scale=*/true);
    for (int i = 0; i < kSkeletonJoints; ++i) {
      const Eigen::Vector3d aligned =
          align.scale * (align.transform.rotation * src[i]) +
          align.transform.translation;
      sum += (aligned - dst[i]).norm();
    }
  }
  return 1000.0 * sum / (double(pred.frames.size()) * kSkeletonJoints);
}

// Mean translation distance in millimeters.
inline double translation_error(const PoseSequence& pred,
                                const PoseSequence& gt) {
  detail::require_matching(pred.poses.size(), gt.poses.size());
  double sum = 0.0;
  for (std::size_t f = 0; f < pred.poses.size(); ++f) {
    sum += (pred.poses[f].translation - gt.poses[f].translation).norm();
  }
  return 1000.0 * sum / double(pred.poses.size());
}

// Mean geodesic rotation angle in degrees. The arccos argument is clamped so
// trace overshoot from orthonormality roundoff cannot produce NaN.
inline double rotation_error(const PoseSequence& pred, const PoseSequence& gt) {
  detail::require_matching(pred.poses.size(), gt.poses.size());
  double sum = 0.0;
  for (std::size_t f = 0; f < pred.poses.size(); ++f) {
    const double tr =
        (pred.poses[f].rotation.transpose() * gt.poses[f].rotation).trace();
    const double c = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
    sum += std::acos(c);
  }
  return (180.0 / std::numbers::pi) * sum / double(pred.poses.size());
}

// Mean norm of the difference of second finite differences, scaled to m/s^2.
// Constant and linear disagreements between pred and gt vanish by design.
inline double acceleration_error(const SkeletonSequence& pred,
                                 const SkeletonSequence& gt,
                                 double fps = 30.0) {
  detail::require_matching(pred.frames.size(), gt.frames.size());
  const int m = int(pred.frames.size());
  require(m >= 3, errc::window_too_short,
          "acceleration needs at least 3 frames");
  require(fps > 0.0, errc::invalid_spec, "fps must be positive");
  double sum = 0.0;
  for (int f = 1; f + 1 < m; ++f) {
    const auto accel = [&](const SkeletonSequence& s) {
      return (s.frames[f + 1] - 2.0 * s.frames[f] + s.frames[f - 1]).eval();
    };
    const Eigen::Matrix<double, kSkeletonJoints, 3> d =
        (accel(pred) - accel(gt)) * fps * fps;
    for (int i = 0; i < kSkeletonJoints; ++i) {
      sum += d.row(i).norm();
    }
  }
  return sum / (double(m - 2) * kSkeletonJoints);
}

// Distance from every vertex of mesh a to its nearest vertex in mesh b.
inline Eigen::VectorXd interaction_field(const TriMesh& a,
                                         const SpatialIndex& b_index) {
  require(!a.vertices.empty(), errc::empty_index, "empty query mesh");
  Eigen::VectorXd field(a.vertices.size());
  for (std::size_t v = 0; v < a.vertices.size(); ++v) {
    field(v) = b_index.nearest(a.vertices[v]).distance;
  }
  return field;
}

inline Eigen::VectorXd interaction_field(const TriMesh& a, const TriMesh& b) {
  require(!b.vertices.empty(), errc::empty_index, "empty target mesh");
  return interaction_field(a, SpatialIndex(b.vertices));
}

struct ContactSample {
  const TriMesh* hand = nullptr;
  const TriMesh* tool = nullptr;
};

// Percentage of samples in contact: nearest-vertex distance below the
// threshold, or overlapping volume. The volume leg needs closed meshes and is
// only consulted when the distance leg fails, so disjoint or touching open
// meshes never reach the parity test.
inline double contact_ratio(const std::vector<ContactSample>& samples,
                            double threshold_mm = 2.0, double voxel = 0.005) {
  require(!samples.empty(), errc::empty_input, "no contact samples");
  int hits = 0;
  for (const ContactSample& s : samples) {
    require(s.hand != nullptr && s.tool != nullptr, errc::empty_input,
            "null mesh in contact sample");
    const Eigen::VectorXd field = interaction_field(*s.hand, *s.tool);
    if (field.minCoeff() < threshold_mm * 1e-3 ||
        voxel_intersection_volume(*s.hand, *s.tool, voxel) > 0.0) {
      ++hits;
    }
  }
  return 100.0 * double(hits) / double(samples.size());
}

struct CollisionSample {
  const TriMesh* hand = nullptr;
  std::vector<const TriMesh*> environment;
};

// Percentage of samples whose hand volume overlaps any environment mesh. An
// empty environment never collides.
inline double collision_ratio(const std::vector<CollisionSample>& samples,
                              double voxel = 0.005) {
  require(!samples.empty(), errc::empty_input, "no collision samples");
  int hits = 0;
  for (const CollisionSample& s : samples) {
    require(s.hand != nullptr, errc::empty_input, "null hand mesh");
    for (const TriMesh* env : s.environment) {
      require(env != nullptr, errc::empty_input, "null environment mesh");
      if (voxel_intersection_volume(*s.hand, *env, voxel) > 0.0) {
        ++hits;
        break;
      }
    }
  }
  return 100.0 * double(hits) / double(samples.size());
}

namespace detail {

// Symmetric PSD square root; eigenvalues below -tol reject the matrix.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double tol) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  require(es.info() == Eigen::Success, errc::degenerate_covariance,
          "eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  require(ev.minCoeff() > -tol, errc::degenerate_covariance,
          "matrix is not positive semi-definite");
  for (int i = 0; i < ev.size(); ++i) {
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& samples) {
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  Eigen::MatrixXd cov =
      centered.transpose() * centered / double(samples.rows() - 1);
  cov += 1e-6 * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
  return cov;
}

}  // namespace detail

// Frechet distance between Gaussians fitted to the two sets:
// |mu_a - mu_b|^2 + Tr(Sa + Sb - 2 sqrt(sqrt(Sa) Sb sqrt(Sa))). The analytic
// value is non-negative; roundoff negatives clamp to zero.
inline double frechet_distance(const FeatureSet& a, const FeatureSet& b) {
  a.validate();
  b.validate();
  const Eigen::VectorXd mu_a = a.samples.colwise().mean().transpose();
  const Eigen::VectorXd mu_b = b.samples.colwise().mean().transpose();
  const Eigen::MatrixXd cov_a = detail::covariance(a.samples);
  const Eigen::MatrixXd cov_b = detail::covariance(b.samples);

  const double scale = std::max(1.0, std::max(cov_a.norm(), cov_b.norm()));
  const Eigen::MatrixXd root_a = detail::psd_sqrt(cov_a, 1e-9 * scale);
  const Eigen::MatrixXd cross =
      detail::psd_sqrt(root_a * cov_b * root_a, 1e-7 * scale * scale);
  const double value = (mu_a - mu_b).squaredNorm() + cov_a.trace() +
                       cov_b.trace() - 2.0 * cross.trace();
  return std::max(value, 0.0);
}

// One 64-value comma-separated row per sample; no header, no blank cells.
inline FeatureSet load_feature_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::missing_input, "cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(cell[used])) ++used;
        require(used == cell.size(), errc::parse_error, "trailing bytes");
        row.push_back(v);
      } catch (const error&) {
        throw;
      } catch (const std::exception&) {
        fail(errc::parse_error, path + ":" + std::to_string(line_no) +
                                    ": not a number: " + cell);
      }
    }
    require(int(row.size()) == kFeatureDim, errc::parse_error,
            path + ":" + std::to_string(line_no) + ": expected " +
                std::to_string(kFeatureDim) + " values, got " +
                std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  FeatureSet set;
  set.samples.resize(rows.size(), kFeatureDim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < kFeatureDim; ++c) {
      set.samples(r, c) = rows[r][c];
    }
  }
  set.validate();
  return set;
}

inline void save_feature_csv(const FeatureSet& set, const std::string& path) {
  set.validate();
  std::ofstream out(path);
  require(out.good(), errc::missing_input, "cannot open " + path);
  out.precision(17);
  for (int r = 0; r < set.samples.rows(); ++r) {
    for (int c = 0; c < kFeatureDim; ++c) {
      if (c > 0) out << ',';
      out << set.samples(r, c);
    }
    out << '\n';
  }
  require(out.good(), errc::missing_input, "write failed: " + path);
}

}  // namespace hofit
