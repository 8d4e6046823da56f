#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hofit/adam.hpp"
#include "hofit/common.hpp"
#include "hofit/geometry.hpp"
#include "hofit/mesh.hpp"
#include "hofit/spatial_index.hpp"

namespace hofit {

// Nearest-vertex distance queries against a fixed mesh.
class MeshProximity {
 public:
  explicit MeshProximity(const TriMesh& mesh)
      : mesh_(&mesh), index_(mesh.vertices) {
    require(!mesh.vertices.empty(), errc::empty_index, "empty mesh");
  }

  const TriMesh& mesh() const { return *mesh_; }

  SpatialIndex::Result nearest(const Eigen::Vector3d& q) const {
    return index_.nearest(q);
  }

  // Distance from q to the nearest mesh vertex.
  double contact(const Eigen::Vector3d& q) const {
    return index_.nearest(q).distance;
  }

  // Depth behind the nearest vertex's tangent plane; 0 outside.
  double penetration(const Eigen::Vector3d& q) const {
    const auto hit = index_.nearest(q);
    const Eigen::Vector3d& n = normal(hit.index);
    return std::max(-n.dot(q - mesh_->vertices[hit.index]), 0.0);
  }

  // d(contact)/dq; zero within 1e-12 of the vertex, where the distance has
  // no unique direction.
  Eigen::Vector3d contact_gradient(const Eigen::Vector3d& q) const {
    const auto hit = index_.nearest(q);
    if (hit.distance < 1e-12) return Eigen::Vector3d::Zero();
    return (q - mesh_->vertices[hit.index]) / hit.distance;
  }

  // d(penetration)/dq with the nearest vertex held fixed.
  Eigen::Vector3d penetration_gradient(const Eigen::Vector3d& q) const {
    const auto hit = index_.nearest(q);
    const Eigen::Vector3d& n = normal(hit.index);
    if (-n.dot(q - mesh_->vertices[hit.index]) > 0.0) return -n;
    return Eigen::Vector3d::Zero();
  }

 private:
  const Eigen::Vector3d& normal(int vertex) const {
    require(mesh_->vertex_normals.size() == mesh_->vertices.size(),
            errc::invalid_spec, "mesh has no vertex normals");
    return mesh_->vertex_normals[vertex];
  }

  const TriMesh* mesh_;
  SpatialIndex index_;
};

inline double contact_loss(const MeshProximity& prox,
                           const Eigen::Vector3d& q) {
  return prox.contact(q);
}

inline double penetration_loss(const MeshProximity& prox,
                               const Eigen::Vector3d& q) {
  return prox.penetration(q);
}

// Marker positions in the rig's own frame, plus which subset the capture
// system tracks per frame.
struct MarkerRig {
  std::vector<Eigen::Vector3d> marker_local;
  std::vector<int> tracked;       // indices into marker_local
  double marker_radius = 0.004;   // meters, metadata only

  void validate() const {
    require(marker_local.size() >= 3, errc::too_few_markers,
            "rig needs at least 3 markers");
    require(tracked.size() >= 3, errc::too_few_markers,
            "rig needs at least 3 tracked markers");
    for (const int i : tracked) {
      require(i >= 0 && i < int(marker_local.size()), errc::invalid_spec,
              "tracked index out of range");
    }
    // Non-collinear: the scatter must have two significant directions.
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : marker_local) centroid += p;
    centroid /= double(marker_local.size());
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto& p : marker_local) {
      const Eigen::Vector3d d = p - centroid;
      scatter += d * d.transpose();
    }
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(scatter);
    require(svd.singularValues()(1) > 1e-12 * svd.singularValues()(0),
            errc::rank_deficient, "rig markers are collinear");
  }
};

struct RegistrationOptions {
  double alpha = 0.01;    // contact gate, meters
  double lr = 1e-4;
  int max_iter = 5000;
  double rel_tol = 1e-8;  // improvement below this fraction is stagnation
  int patience = 200;     // stop after this many iterations without progress
};

struct RegistrationResult {
  RigidTransform rig_to_model;       // maps rig-local into the model frame
  std::vector<double> contact;       // per-marker L_c at the final transform
  std::vector<double> penetration;   // per-marker L_p at the final transform
  std::vector<std::uint8_t> active;  // per-marker contact < alpha
  double objective_initial = 0.0;
  double objective_final = 0.0;
  int iterations = 0;
};

namespace detail {

inline double gated_objective(const MeshProximity& prox, const MarkerRig& rig,
                              const RigidTransform& t, double alpha) {
  double sum = 0.0;
  for (const auto& q : rig.marker_local) {
    const Eigen::Vector3d x = t(q);
    const double lc = prox.contact(x);
    if (lc < alpha) sum += lc + prox.penetration(x);
  }
  return sum;
}

}  // namespace detail

// Aligns the marker rig to the object mesh: Adam on (axis-angle increment,
// translation), minimizing the contact-gated sum of contact + penetration
// losses. The gate freezes between refreshes so the gradient is stable; the
// best transform seen under the live gate is what gets returned.
inline RegistrationResult register_rig(const MarkerRig& rig,
                                       const TriMesh& mesh,
                                       const RigidTransform& t_init,
                                       const RegistrationOptions& opt = {}) {
  rig.validate();
  require(opt.alpha > 0.0, errc::invalid_spec, "alpha must be positive");
  const MeshProximity prox(mesh);
  const int k = int(rig.marker_local.size());

  auto gate_mask = [&](const RigidTransform& t) {
    std::vector<std::uint8_t> mask(k, 0);
    for (int i = 0; i < k; ++i) {
      mask[i] = prox.contact(t(rig.marker_local[i])) < opt.alpha ? 1 : 0;
    }
    return mask;
  };

  RigidTransform cur = t_init;
  std::vector<std::uint8_t> mask = gate_mask(cur);
  if (std::count(mask.begin(), mask.end(), 1) == 0) {
    fail(errc::no_active_markers,
         "no marker within " + std::to_string(opt.alpha) +
             " m of the mesh at the initial transform");
  }

  const double j_init = detail::gated_objective(prox, rig, cur, opt.alpha);
  RigidTransform best = cur;
  double j_best = j_init;
  int last_improvement = 0;

  AdamOptimizer adam(6, opt.lr);
  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    // Adam oscillates around valleys, so a point-to-point objective change
    // is a poor stop signal; stagnation of the best value is reliable.
    if (iter - last_improvement >= opt.patience) break;
    if (iter > 0 && iter % 10 == 0) {
      mask = gate_mask(cur);
      if (std::count(mask.begin(), mask.end(), 1) == 0) break;
    }

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(6);
    for (int i = 0; i < k; ++i) {
      if (!mask[i]) continue;
      const Eigen::Vector3d rq = cur.rotation * rig.marker_local[i];
      const Eigen::Vector3d x = rq + cur.translation;
      const Eigen::Vector3d dx =
          prox.contact_gradient(x) + prox.penetration_gradient(x);
      // x = exp([w]) (R q) + t, so dx/dw = -[R q]x at w = 0.
      grad.head<3>() += rq.cross(dx);  // (-[rq]x)^T dx = rq x dx
      grad.tail<3>() += dx;
    }

    const Eigen::VectorXd step = adam.step(grad);
    cur.rotation = axis_angle_to_matrix(step.head<3>()) * cur.rotation;
    cur.translation += step.tail<3>();

    const double j_now = detail::gated_objective(prox, rig, cur, opt.alpha);
    if (j_now < j_best) {
      if (j_best - j_now > opt.rel_tol * std::max(j_best, 1e-20)) {
        last_improvement = iter;
      }
      j_best = j_now;
      best = cur;
    }
  }

  RegistrationResult out;
  out.rig_to_model = best;
  out.objective_initial = j_init;
  out.objective_final = j_best;
  out.iterations = iter;
  out.contact.resize(k);
  out.penetration.resize(k);
  out.active.resize(k);
  for (int i = 0; i < k; ++i) {
    const Eigen::Vector3d x = best(rig.marker_local[i]);
    out.contact[i] = prox.contact(x);
    out.penetration[i] = prox.penetration(x);
    out.active[i] = out.contact[i] < opt.alpha ? 1 : 0;
  }
  return out;
}

// World positions of the rig's tracked markers for one frame, aligned with
// MarkerRig::tracked.
struct MarkerFrame {
  std::vector<Eigen::Vector3d> position;
  std::vector<std::uint8_t> visible;
};

struct ObjectPose {
  RigidTransform model_to_world;
  double rms = 0.0;  // marker residual after alignment, meters
  int used_markers = 0;
};

// Closed-form per-frame object pose: aligns the tracked markers (carried
// into the model frame by the registration) to their world positions.
inline ObjectPose frame_object_pose(const MarkerRig& rig,
                                    const RigidTransform& rig_to_model,
                                    const MarkerFrame& frame) {
  rig.validate();
  require(frame.position.size() == rig.tracked.size() &&
              frame.visible.size() == rig.tracked.size(),
          errc::shape_mismatch,
          "marker frame does not match the rig's tracked subset");
  std::vector<Eigen::Vector3d> model_pts, world_pts;
  for (std::size_t i = 0; i < rig.tracked.size(); ++i) {
    if (!frame.visible[i]) continue;
    model_pts.push_back(rig_to_model(rig.marker_local[rig.tracked[i]]));
    world_pts.push_back(frame.position[i]);
  }
  if (model_pts.size() < 3) {
    fail(errc::too_few_markers,
         "only " + std::to_string(model_pts.size()) +
             " tracked markers visible; need 3");
  }
  const AlignResult align = rigid_align(model_pts, world_pts);
  if (align.rms > 0.005) {
    fail(errc::high_residual,
         "marker alignment RMS " + std::to_string(align.rms * 1000.0) +
             " mm exceeds 5 mm");
  }
  return {align.transform, align.rms, int(model_pts.size())};
}

}  // namespace hofit
