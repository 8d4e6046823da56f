#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hofit/adam.hpp"
#include "hofit/common.hpp"
#include "hofit/geometry.hpp"
#include "hofit/hand_model.hpp"
#include "hofit/keypoint_fusion.hpp"
#include "hofit/mesh.hpp"
#include "hofit/object_registration.hpp"

namespace hofit {

// Loss weights and optimizer schedule for sequence fitting. Stage 1 uses the
// keypoint, angle-bound, and temporal terms; stage 2 adds attraction and
// penetration against the posed object.
struct FittingWeights {
  double lambda_2d = 1e-4;  // pixels^2 scale
  double lambda_3d = 1.0;
  double lambda_angle = 10.0;
  double lambda_tc = 1.0;
  double lambda_a = 1.0;
  double lambda_p = 10.0;
  double attraction_radius = 0.01;  // meters, strict inequality gate
  double lr = 1e-3;
  int stage1_iterations = 300;
  int stage2_iterations = 200;
  int window = 10;   // frames optimized jointly
  int overlap = 5;   // frames shared with the previous window, blended

  void validate() const {
    require(lambda_2d >= 0.0 && lambda_3d >= 0.0 && lambda_angle >= 0.0 &&
                lambda_tc >= 0.0 && lambda_a >= 0.0 && lambda_p >= 0.0,
            errc::invalid_spec, "loss weights must be non-negative");
    require(attraction_radius > 0.0, errc::invalid_spec,
            "attraction radius must be positive");
    require(lr > 0.0 && stage1_iterations >= 0 && stage2_iterations >= 0,
            errc::invalid_spec, "bad optimizer settings");
    require(window >= 3 && overlap >= 0 && overlap < window,
            errc::invalid_spec, "window must exceed overlap, window >= 3");
  }
};

// Valid-gated squared pixel reprojection error; gates come from the fusion
// stage's per-camera inlier flags. Joints behind a camera contribute zero.
// d_joints, when given, accumulates d(loss)/d(joint) rows.
inline double loss_2d(const HandState& state,
                      const std::vector<CameraModel>& cameras,
                      const Keypoints2D& obs, const FusedKeypoints3D& fused,
                      Eigen::MatrixXd* d_joints = nullptr) {
  require(obs.joints.size() == cameras.size(), errc::shape_mismatch,
          "one observation set per camera expected");
  if (d_joints != nullptr) {
    d_joints->setZero(kHandOutputJoints, 3);
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    for (int i = 0; i < kHandOutputJoints; ++i) {
      const JointObservation& o = obs.joints[c][i];
      const FusedJoint& fj = fused.joints[i];
      if (!o.present || c >= fj.valid.size() || fj.valid[c] == 0) continue;
      const Eigen::Vector3d joint = state.joints.row(i);
      if (cameras[c].extrinsic(joint).z() <= 1e-9) continue;
      Eigen::Matrix<double, 2, 3> jac;
      const Eigen::Vector2d r =
          cameras[c].project(joint, d_joints ? &jac : nullptr) - o.pixel;
      sum += r.squaredNorm();
      if (d_joints != nullptr) {
        d_joints->row(i) += 2.0 * r.transpose() * jac;
      }
    }
  }
  return sum;
}

// Squared distance to the fused 3D keypoints; absent joints are skipped.
inline double loss_3d(const HandState& state, const FusedKeypoints3D& fused,
                      Eigen::MatrixXd* d_joints = nullptr) {
  if (d_joints != nullptr) {
    d_joints->setZero(kHandOutputJoints, 3);
  }
  double sum = 0.0;
  for (int i = 0; i < kHandOutputJoints; ++i) {
    if (!fused.joints[i].present) continue;
    const Eigen::Vector3d d =
        state.joints.row(i).transpose() - fused.joints[i].position;
    sum += d.squaredNorm();
    if (d_joints != nullptr) {
      d_joints->row(i) += 2.0 * d.transpose();
    }
  }
  return sum;
}

// One-sided bound violations over the 45 articulation components; the global
// rotation is exempt. Linear hinge, so the gradient is a sign per violation.
inline double loss_angle(const HandPoseParams& params,
                         const Eigen::Matrix<double, kAngleDim, 1>& lower,
                         const Eigen::Matrix<double, kAngleDim, 1>& upper,
                         Eigen::Matrix<double, kThetaDim, 1>* d_theta =
                             nullptr) {
  if (d_theta != nullptr) {
    d_theta->setZero();
  }
  double sum = 0.0;
  for (int i = 0; i < kAngleDim; ++i) {
    const double v = params.theta(3 + i);
    if (v < lower(i)) {
      sum += lower(i) - v;
      if (d_theta != nullptr) (*d_theta)(3 + i) -= 1.0;
    } else if (v > upper(i)) {
      sum += v - upper(i);
      if (d_theta != nullptr) (*d_theta)(3 + i) += 1.0;
    }
  }
  return sum;
}

struct PoseTangent {
  Eigen::Matrix<double, kThetaDim, 1> theta =
      Eigen::Matrix<double, kThetaDim, 1>::Zero();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

// Translation velocity plus pose acceleration over a window. The first frame
// is anchor only: velocity needs i >= 1, acceleration i >= 2.
inline double loss_temporal(const std::vector<HandPoseParams>& window,
                            std::vector<PoseTangent>* d_params = nullptr) {
  const int w = int(window.size());
  require(w >= 3, errc::window_too_short,
          "temporal loss needs at least 3 frames");
  if (d_params != nullptr) {
    d_params->assign(window.size(), PoseTangent{});
  }
  double sum = 0.0;
  for (int i = 1; i < w; ++i) {
    const Eigen::Vector3d dt = window[i].t - window[i - 1].t;
    sum += dt.squaredNorm();
    if (d_params != nullptr) {
      (*d_params)[i].t += 2.0 * dt;
      (*d_params)[i - 1].t -= 2.0 * dt;
    }
  }
  for (int i = 2; i < w; ++i) {
    const Eigen::Matrix<double, kThetaDim, 1> accel =
        window[i].theta - 2.0 * window[i - 1].theta + window[i - 2].theta;
    sum += accel.squaredNorm();
    if (d_params != nullptr) {
      (*d_params)[i].theta += 2.0 * accel;
      (*d_params)[i - 1].theta -= 4.0 * accel;
      (*d_params)[i - 2].theta += 2.0 * accel;
    }
  }
  return sum;
}

// Gated squared distance pulling near-surface hand vertices onto the object.
// The gate is strict: a vertex exactly at the radius contributes zero.
inline double loss_attraction(const HandState& state,
                              const MeshProximity& prox, double radius = 0.01,
                              Eigen::MatrixXd* d_vertices = nullptr) {
  require(radius > 0.0, errc::invalid_spec, "radius must be positive");
  if (d_vertices != nullptr) {
    d_vertices->setZero(state.vertices.rows(), 3);
  }
  double sum = 0.0;
  for (int v = 0; v < state.vertices.rows(); ++v) {
    const Eigen::Vector3d x = state.vertices.row(v);
    const double d = prox.contact(x);
    if (d >= radius) continue;
    sum += d * d;
    if (d_vertices != nullptr && d > 0.0) {
      d_vertices->row(v) += (2.0 * d * prox.contact_gradient(x)).transpose();
    }
  }
  return sum;
}

// Summed depths of hand vertices behind the nearest object vertex's tangent
// plane.
inline double loss_penetration(const HandState& state,
                               const MeshProximity& prox,
                               Eigen::MatrixXd* d_vertices = nullptr) {
  if (d_vertices != nullptr) {
    d_vertices->setZero(state.vertices.rows(), 3);
  }
  double sum = 0.0;
  for (int v = 0; v < state.vertices.rows(); ++v) {
    const Eigen::Vector3d x = state.vertices.row(v);
    sum += prox.penetration(x);
    if (d_vertices != nullptr) {
      d_vertices->row(v) += prox.penetration_gradient(x).transpose();
    }
  }
  return sum;
}

// Per-frame inputs for one hand.
struct HandFrameData {
  Keypoints2D keypoints;
  FusedKeypoints3D fused;
};

// One hand's whole-sequence input: observations, fixed shape, optional warm
// start, and the object this hand interacts with (posed per frame).
struct HandSequence {
  std::vector<HandFrameData> frames;
  Eigen::Matrix<double, kBetaDim, 1> beta =
      Eigen::Matrix<double, kBetaDim, 1>::Zero();
  std::vector<HandPoseParams> init;          // empty: rest pose, wrist seeded
  const TriMesh* object = nullptr;
  std::vector<RigidTransform> object_poses;  // model -> world, one per frame
};

struct FrameLosses {
  double l_2d = 0.0;
  double l_3d = 0.0;
  double l_angle = 0.0;
  double l_tc = 0.0;
  double l_a = 0.0;
  double l_p = 0.0;
};

struct WindowDiagnostics {
  int first_frame = 0;
  int frame_count = 0;
  double stage1_initial = 0.0;
  double stage1_final = 0.0;
  double stage2_initial = 0.0;
  double stage2_final = 0.0;
  bool aborted = false;  // a non-finite objective stopped this window early
};

struct HandSequenceFit {
  std::vector<HandPoseParams> params;
  std::vector<FrameLosses> losses;
  std::vector<WindowDiagnostics> windows;
};

struct SequenceFit {
  HandSequenceFit left;
  HandSequenceFit right;
};

namespace detail {

struct WindowProblem {
  const HandModel* model;
  const std::vector<CameraModel>* cameras;
  const HandSequence* seq;
  const FittingWeights* weights;
  const MeshProximity* prox;  // null when contact terms are off
  int first_frame = 0;
  int frame_count = 0;
  bool temporal = true;
  bool contact = false;  // stage 2 terms active
};

inline HandPoseParams unpack_frame(const WindowProblem& wp,
                                   const Eigen::VectorXd& x, int local) {
  HandPoseParams p;
  p.theta = x.segment<kThetaDim>(kPoseDim * local);
  p.t = x.segment<3>(kPoseDim * local + kThetaDim);
  p.beta = wp.seq->beta;
  return p;
}

// Full window objective; the gradient is optional. Returns infinity as-is so
// the optimizer can detect and abort on non-finite losses.
inline double window_objective(const WindowProblem& wp,
                               const Eigen::VectorXd& x,
                               Eigen::VectorXd* grad) {
  const FittingWeights& fw = *wp.weights;
  if (grad != nullptr) {
    grad->setZero(kPoseDim * wp.frame_count);
  }
  double total = 0.0;
  Eigen::MatrixXd d_joints, d_vertices, term;
  for (int local = 0; local < wp.frame_count; ++local) {
    const int f = wp.first_frame + local;
    const HandPoseParams p = unpack_frame(wp, x, local);
    if (!p.theta.allFinite() || !p.t.allFinite()) {
      return std::numeric_limits<double>::infinity();
    }
    const HandFrameData& frame = wp.seq->frames[f];
    const HandState state = forward(*wp.model, p);

    d_joints.setZero(kHandOutputJoints, 3);
    d_vertices.setZero(wp.model->vertex_count(), 3);
    bool use_joints = false;
    bool use_vertices = false;

    if (fw.lambda_2d > 0.0) {
      const double l = loss_2d(state, *wp.cameras, frame.keypoints,
                               frame.fused, grad ? &term : nullptr);
      total += fw.lambda_2d * l;
      if (grad != nullptr) {
        d_joints += fw.lambda_2d * term;
        use_joints = true;
      }
    }
    if (fw.lambda_3d > 0.0) {
      const double l = loss_3d(state, frame.fused, grad ? &term : nullptr);
      total += fw.lambda_3d * l;
      if (grad != nullptr) {
        d_joints += fw.lambda_3d * term;
        use_joints = true;
      }
    }
    if (fw.lambda_angle > 0.0) {
      Eigen::Matrix<double, kThetaDim, 1> d_theta;
      const double l = loss_angle(p, wp.model->lower_bounds,
                                  wp.model->upper_bounds,
                                  grad ? &d_theta : nullptr);
      total += fw.lambda_angle * l;
      if (grad != nullptr) {
        grad->segment<kThetaDim>(kPoseDim * local) +=
            fw.lambda_angle * d_theta;
      }
    }
    if (wp.contact) {
      // Contact terms evaluate in the object-model frame; mapping the hand
      // through the inverse pose is the same as posing the mesh.
      const RigidTransform inv = wp.seq->object_poses[f].inverse();
      HandState local_state;
      local_state.vertices.resize(state.vertices.rows(), 3);
      for (int v = 0; v < state.vertices.rows(); ++v) {
        local_state.vertices.row(v) =
            inv(Eigen::Vector3d(state.vertices.row(v))).transpose();
      }
      if (fw.lambda_a > 0.0) {
        const double l = loss_attraction(local_state, *wp.prox,
                                         fw.attraction_radius,
                                         grad ? &term : nullptr);
        total += fw.lambda_a * l;
        if (grad != nullptr) {
          d_vertices += fw.lambda_a * term * inv.rotation;
          use_vertices = true;
        }
      }
      if (fw.lambda_p > 0.0) {
        const double l = loss_penetration(local_state, *wp.prox,
                                          grad ? &term : nullptr);
        total += fw.lambda_p * l;
        if (grad != nullptr) {
          d_vertices += fw.lambda_p * term * inv.rotation;
          use_vertices = true;
        }
      }
    }

    if (grad != nullptr && (use_joints || use_vertices)) {
      const HandJacobian jac = forward_jacobian(*wp.model, p);
      Eigen::VectorXd gblock = Eigen::VectorXd::Zero(kPoseDim);
      if (use_joints) {
        const Eigen::MatrixXd cot = d_joints.transpose();  // rows 3j+coord
        gblock += jac.joints.transpose() *
                  Eigen::Map<const Eigen::VectorXd>(cot.data(),
                                                    3 * kHandOutputJoints);
      }
      if (use_vertices) {
        const Eigen::MatrixXd cot = d_vertices.transpose();
        gblock += jac.vertices.transpose() *
                  Eigen::Map<const Eigen::VectorXd>(
                      cot.data(), 3 * wp.model->vertex_count());
      }
      grad->segment<kPoseDim>(kPoseDim * local) += gblock;
    }
  }

  if (wp.temporal && fw.lambda_tc > 0.0) {
    std::vector<HandPoseParams> window_params(wp.frame_count);
    for (int local = 0; local < wp.frame_count; ++local) {
      window_params[local] = unpack_frame(wp, x, local);
    }
    std::vector<PoseTangent> tangents;
    const double l =
        loss_temporal(window_params, grad ? &tangents : nullptr);
    total += fw.lambda_tc * l;
    if (grad != nullptr) {
      for (int local = 0; local < wp.frame_count; ++local) {
        grad->segment<kThetaDim>(kPoseDim * local) +=
            fw.lambda_tc * tangents[local].theta;
        grad->segment<3>(kPoseDim * local + kThetaDim) +=
            fw.lambda_tc * tangents[local].t;
      }
    }
  }
  return total;
}

// Adam over the window variables, keeping the best iterate seen. Returns the
// best objective; flags abort if the objective ever went non-finite.
inline double optimize_stage(const WindowProblem& wp, Eigen::VectorXd& x,
                             int iterations, double* initial_out,
                             bool* aborted) {
  const int dim = int(x.size());
  AdamOptimizer adam(dim, wp.weights->lr);
  Eigen::VectorXd grad(dim);
  double value = window_objective(wp, x, &grad);
  require(std::isfinite(value), errc::non_finite_loss,
          "objective not finite at the window start");
  if (initial_out != nullptr) *initial_out = value;
  Eigen::VectorXd best_x = x;
  double best_value = value;
  for (int iter = 0; iter < iterations; ++iter) {
    x += adam.step(grad);
    value = window_objective(wp, x, &grad);
    if (!std::isfinite(value)) {
      if (aborted != nullptr) *aborted = true;
      break;
    }
    if (value < best_value) {
      best_value = value;
      best_x = x;
    }
  }
  x = best_x;
  return best_value;
}

}  // namespace detail

// Two-stage windowed fit for one hand. Stage 1 fits keypoints with bound and
// temporal priors over sliding windows; stage 2 continues from the stage-1
// output with attraction and penetration against the posed object. Overlap
// frames blend linearly between the previous window's result and the new one.
// Sequences shorter than 3 frames fall back to per-frame fits without the
// temporal term. With both contact weights zero the object is never touched.
inline HandSequenceFit fit_hand_sequence(const HandModel& model,
                                         const std::vector<CameraModel>& cameras,
                                         const HandSequence& seq,
                                         const FittingWeights& weights) {
  weights.validate();
  const int frames = int(seq.frames.size());
  HandSequenceFit fit;
  if (frames == 0) return fit;
  const bool contact =
      seq.object != nullptr && (weights.lambda_a > 0.0 || weights.lambda_p > 0.0);
  if (contact) {
    require(int(seq.object_poses.size()) == frames, errc::shape_mismatch,
            "one object pose per frame required");
  }
  if (!seq.init.empty()) {
    require(int(seq.init.size()) == frames, errc::shape_mismatch,
            "warm start must cover every frame");
  }

  // Shape is fixed per sequence; the wrist translation seeds from the fused
  // wrist when no warm start is given (a rest-pose hand sits at the origin,
  // which can be arbitrarily far from the subject).
  fit.params.resize(frames);
  for (int f = 0; f < frames; ++f) {
    if (!seq.init.empty()) {
      fit.params[f] = seq.init[f];
    } else if (f > 0) {
      fit.params[f] = fit.params[f - 1];
    } else if (seq.frames[0].fused.joints[0].present) {
      fit.params[f].t = seq.frames[0].fused.joints[0].position -
                        (model.output_regressor.row(0) *
                         model.template_vertices)
                            .transpose();
    }
    fit.params[f].beta = seq.beta;
  }

  std::optional<MeshProximity> prox_storage;
  if (contact) {
    require(!seq.object->vertex_normals.empty(), errc::invalid_spec,
            "object mesh needs vertex normals");
    prox_storage.emplace(*seq.object);
  }
  const MeshProximity* prox = contact ? &*prox_storage : nullptr;

  // Window start offsets; the tail window shifts back to full size so every
  // window has >= 3 frames for the temporal term.
  std::vector<int> starts;
  const bool temporal = frames >= 3;
  if (!temporal) {
    for (int f = 0; f < frames; ++f) starts.push_back(f);
  } else if (frames <= weights.window) {
    starts.push_back(0);
  } else {
    const int stride = weights.window - weights.overlap;
    for (int s = 0;; s += stride) {
      if (s + weights.window >= frames) {
        starts.push_back(frames - weights.window);
        break;
      }
      starts.push_back(s);
    }
  }

  int covered = 0;  // frames finalized by previous windows
  for (const int s : starts) {
    detail::WindowProblem wp;
    wp.model = &model;
    wp.cameras = &cameras;
    wp.seq = &seq;
    wp.weights = &weights;
    wp.prox = prox;
    wp.first_frame = s;
    wp.frame_count = temporal ? std::min(weights.window, frames - s) : 1;
    wp.temporal = temporal;
    wp.contact = false;

    Eigen::VectorXd x(kPoseDim * wp.frame_count);
    for (int local = 0; local < wp.frame_count; ++local) {
      const HandPoseParams& p = fit.params[s + local];
      x.segment<kThetaDim>(kPoseDim * local) = p.theta;
      x.segment<3>(kPoseDim * local + kThetaDim) = p.t;
    }

    WindowDiagnostics diag;
    diag.first_frame = s;
    diag.frame_count = wp.frame_count;
    diag.stage1_final = detail::optimize_stage(
        wp, x, weights.stage1_iterations, &diag.stage1_initial,
        &diag.aborted);
    if (contact && !diag.aborted) {
      wp.contact = true;
      diag.stage2_final = detail::optimize_stage(
          wp, x, weights.stage2_iterations, &diag.stage2_initial,
          &diag.aborted);
    } else {
      diag.stage2_initial = diag.stage1_final;
      diag.stage2_final = diag.stage1_final;
    }

    // Frames already covered by the previous window blend linearly from the
    // old result to this window's; fresh frames are taken as-is.
    const int overlap_count = std::max(0, std::min(covered - s,
                                                   wp.frame_count));
    for (int local = 0; local < wp.frame_count; ++local) {
      const HandPoseParams p = detail::unpack_frame(wp, x, local);
      const int f = s + local;
      if (local < overlap_count) {
        const double a =
            double(local + 1) / double(overlap_count + 1);
        fit.params[f].theta = (1.0 - a) * fit.params[f].theta + a * p.theta;
        fit.params[f].t = (1.0 - a) * fit.params[f].t + a * p.t;
      } else {
        fit.params[f].theta = p.theta;
        fit.params[f].t = p.t;
      }
    }
    covered = std::max(covered, s + wp.frame_count);
    fit.windows.push_back(diag);
  }

  // Final per-frame loss breakdown at the fitted params. Terms with zero
  // weight are reported as zero and never evaluated.
  fit.losses.assign(frames, FrameLosses{});
  for (int f = 0; f < frames; ++f) {
    const HandState state = forward(model, fit.params[f]);
    FrameLosses& fl = fit.losses[f];
    if (weights.lambda_2d > 0.0) {
      fl.l_2d = loss_2d(state, cameras, seq.frames[f].keypoints,
                        seq.frames[f].fused);
    }
    if (weights.lambda_3d > 0.0) {
      fl.l_3d = loss_3d(state, seq.frames[f].fused);
    }
    if (weights.lambda_angle > 0.0) {
      fl.l_angle = loss_angle(fit.params[f], model.lower_bounds,
                              model.upper_bounds);
    }
    if (contact) {
      const RigidTransform inv = seq.object_poses[f].inverse();
      HandState local_state;
      local_state.vertices.resize(state.vertices.rows(), 3);
      for (int v = 0; v < state.vertices.rows(); ++v) {
        local_state.vertices.row(v) =
            inv(Eigen::Vector3d(state.vertices.row(v))).transpose();
      }
      if (weights.lambda_a > 0.0) {
        fl.l_a = loss_attraction(local_state, *prox,
                                 weights.attraction_radius);
      }
      if (weights.lambda_p > 0.0) {
        fl.l_p = loss_penetration(local_state, *prox);
      }
    }
  }
  if (temporal && weights.lambda_tc > 0.0) {
    // Attribute each velocity/acceleration term to its latest frame.
    for (int f = 1; f < frames; ++f) {
      fit.losses[f].l_tc +=
          (fit.params[f].t - fit.params[f - 1].t).squaredNorm();
    }
    for (int f = 2; f < frames; ++f) {
      fit.losses[f].l_tc += (fit.params[f].theta -
                             2.0 * fit.params[f - 1].theta +
                             fit.params[f - 2].theta)
                                .squaredNorm();
    }
  }
  return fit;
}

// Both hands of a capture: attraction/penetration pair each hand with its own
// object (right vs tool, left vs target).
inline SequenceFit fit_sequence(const HandModel& model,
                                const std::vector<CameraModel>& cameras,
                                const HandSequence& left,
                                const HandSequence& right,
                                const FittingWeights& weights) {
  SequenceFit out;
  out.left = fit_hand_sequence(model, cameras, left, weights);
  out.right = fit_hand_sequence(model, cameras, right, weights);
  return out;
}

}  // namespace hofit
