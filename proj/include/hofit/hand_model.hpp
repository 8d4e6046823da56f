#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hofit/common.hpp"
#include "hofit/geometry.hpp"

namespace hofit {

inline constexpr int kHandJoints = 16;        // kinematic tree
inline constexpr int kHandOutputJoints = 21;  // reported joints (adds 5 tips)
inline constexpr int kThetaDim = 3 * kHandJoints;
inline constexpr int kBetaDim = 10;
inline constexpr int kAngleDim = kThetaDim - 3;  // articulation, global exempt
inline constexpr int kPoseDim = kThetaDim + 3;   // theta plus wrist translation

// Pose parameters: 16 axis-angle triples (joint 0 is the global rotation,
// pivoting at the wrist), shape coefficients, and the wrist translation.
struct HandPoseParams {
  Eigen::Matrix<double, kThetaDim, 1> theta =
      Eigen::Matrix<double, kThetaDim, 1>::Zero();
  Eigen::Matrix<double, kBetaDim, 1> beta =
      Eigen::Matrix<double, kBetaDim, 1>::Zero();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  void validate() const {
    require(theta.allFinite() && beta.allFinite() && t.allFinite(),
            errc::invariant_violation, "hand pose params must be finite");
  }
};

// Articulated hand: shaped template, kinematic tree, skinning weights, and
// the regressors that tie joints to the vertex set.
struct HandModel {
  Eigen::MatrixXd template_vertices;  // n_v x 3
  Eigen::MatrixXd shape_basis;        // (3 n_v) x 10, rows ordered 3v+coord
  std::array<int, kHandJoints> parents{};
  Eigen::MatrixXd skinning_weights;    // n_v x 16, rows sum to 1
  Eigen::MatrixXd skeleton_regressor;  // 16 x n_v, joint centers from vertices
  Eigen::MatrixXd output_regressor;    // 21 x n_v, applied to posed vertices
  Eigen::Matrix<double, kAngleDim, 1> lower_bounds;
  Eigen::Matrix<double, kAngleDim, 1> upper_bounds;

  int vertex_count() const { return int(template_vertices.rows()); }

  void validate() const {
    const int n = vertex_count();
    require(n >= 4, errc::invariant_violation, "too few template vertices");
    require(template_vertices.cols() == 3 &&
                shape_basis.rows() == 3 * n && shape_basis.cols() == kBetaDim &&
                skinning_weights.rows() == n &&
                skinning_weights.cols() == kHandJoints &&
                skeleton_regressor.rows() == kHandJoints &&
                skeleton_regressor.cols() == n &&
                output_regressor.rows() == kHandOutputJoints &&
                output_regressor.cols() == n,
            errc::invariant_violation, "hand model array shapes disagree");
    require(template_vertices.allFinite() && shape_basis.allFinite() &&
                skinning_weights.allFinite() &&
                skeleton_regressor.allFinite() && output_regressor.allFinite(),
            errc::invariant_violation, "hand model arrays must be finite");
    require(parents[0] == -1, errc::invariant_violation,
            "joint 0 must be the root");
    for (int k = 1; k < kHandJoints; ++k) {
      // Parents precede children, so chains compose in index order.
      require(parents[k] >= 0 && parents[k] < k, errc::invariant_violation,
              "kinematic tree must list parents before children");
    }
    for (int v = 0; v < n; ++v) {
      require(std::abs(skinning_weights.row(v).sum() - 1.0) < 1e-6,
              errc::invariant_violation, "skinning weight rows must sum to 1");
    }
    // Rows summing to 1 make the regressors translation-equivariant.
    for (int j = 0; j < kHandJoints; ++j) {
      require(std::abs(skeleton_regressor.row(j).sum() - 1.0) < 1e-6,
              errc::invariant_violation, "skeleton regressor rows must sum to 1");
    }
    for (int j = 0; j < kHandOutputJoints; ++j) {
      require(std::abs(output_regressor.row(j).sum() - 1.0) < 1e-6,
              errc::invariant_violation, "output regressor rows must sum to 1");
    }
    for (int i = 0; i < kAngleDim; ++i) {
      require(lower_bounds(i) <= upper_bounds(i), errc::invariant_violation,
              "angle bounds out of order");
    }
  }
};

struct HandState {
  Eigen::MatrixXd joints;    // 21 x 3
  Eigen::MatrixXd vertices;  // n_v x 3
};

// d(joints, vertices) / d(theta, t) with beta held fixed. Columns are the 48
// theta components followed by the 3 translation components; rows are 3v+coord.
struct HandJacobian {
  Eigen::MatrixXd joints;    // 63 x 51
  Eigen::MatrixXd vertices;  // (3 n_v) x 51
};

namespace detail {

struct JointFrame {
  Eigen::Matrix3d r;
  Eigen::Vector3d p;
};

inline JointFrame compose(const JointFrame& a, const JointFrame& b) {
  return {a.r * b.r, a.r * b.p + a.p};
}

// Shaped template, rest joints, local bone offsets, and world joint frames
// for one pose; shared by forward and the Jacobian.
struct PosedChain {
  Eigen::MatrixXd shaped;                             // n_v x 3
  Eigen::Matrix<double, kHandJoints, 3> rest_joints;  // from skeleton regressor
  std::array<Eigen::Vector3d, kHandJoints> offsets;   // bone vector to parent
  std::array<Eigen::Matrix3d, kHandJoints> local_rot;
  std::array<JointFrame, kHandJoints> world;  // A_k, root carries global rot
};

inline PosedChain pose_chain(const HandModel& model,
                             const HandPoseParams& params) {
  PosedChain c;
  const int n = model.vertex_count();
  Eigen::VectorXd shaped_flat =
      Eigen::Map<const Eigen::VectorXd>(
          Eigen::MatrixXd(model.template_vertices.transpose()).data(), 3 * n) +
      model.shape_basis * params.beta;
  c.shaped = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 3,
                                            Eigen::RowMajor>>(
      shaped_flat.data(), n, 3);
  c.rest_joints = model.skeleton_regressor * c.shaped;
  for (int k = 0; k < kHandJoints; ++k) {
    c.local_rot[k] = axis_angle_to_matrix(params.theta.segment<3>(3 * k));
    const Eigen::Vector3d jk = c.rest_joints.row(k);
    if (k == 0) {
      c.offsets[k] = jk;
      c.world[k] = {c.local_rot[k], jk};
    } else {
      const Eigen::Vector3d jp = c.rest_joints.row(model.parents[k]);
      c.offsets[k] = jk - jp;
      c.world[k] = compose(c.world[model.parents[k]],
                           {c.local_rot[k], c.offsets[k]});
    }
  }
  return c;
}

// Skinning transform: world frame with the rest joint position removed.
inline JointFrame skinning_frame(const PosedChain& c, int k) {
  const Eigen::Vector3d jk = c.rest_joints.row(k);
  return {c.world[k].r, c.world[k].p - c.world[k].r * jk};
}

}  // namespace detail

// Maps pose parameters to the 21 reported joints and the skinned surface.
// Shape blend, regressed rest joints, rotation chain, linear blend skinning,
// then the wrist translation; reported joints regress from posed vertices.
inline HandState forward(const HandModel& model, const HandPoseParams& params) {
  params.validate();
  const detail::PosedChain c = detail::pose_chain(model, params);
  const int n = model.vertex_count();

  HandState state;
  state.vertices.resize(n, 3);
  std::array<detail::JointFrame, kHandJoints> skin;
  for (int k = 0; k < kHandJoints; ++k) skin[k] = detail::skinning_frame(c, k);
  for (int v = 0; v < n; ++v) {
    const Eigen::Vector3d sv = c.shaped.row(v);
    Eigen::Vector3d out = params.t;
    for (int k = 0; k < kHandJoints; ++k) {
      const double w = model.skinning_weights(v, k);
      if (w == 0.0) continue;
      out += w * (skin[k].r * sv + skin[k].p);
    }
    state.vertices.row(v) = out;
  }
  state.joints = model.output_regressor * state.vertices;
  return state;
}

// Analytic Jacobian through the rotation chain and skinning; beta fixed.
inline HandJacobian forward_jacobian(const HandModel& model,
                                     const HandPoseParams& params) {
  params.validate();
  const detail::PosedChain c = detail::pose_chain(model, params);
  const int n = model.vertex_count();

  HandJacobian jac;
  jac.vertices = Eigen::MatrixXd::Zero(3 * n, kPoseDim);
  jac.joints.resize(3 * kHandOutputJoints, kPoseDim);

  // Translation columns: every vertex shifts with t.
  for (int v = 0; v < n; ++v) {
    jac.vertices.block<3, 3>(3 * v, kThetaDim).setIdentity();
  }

  for (int m = 0; m < kHandJoints; ++m) {
    // A_k = P_m * Rot(R_m) * C_{m->k} for k in the subtree of m, where P_m
    // ends just before joint m's rotation and C is the tail of the chain.
    detail::JointFrame pm;
    if (m == 0) {
      pm = {Eigen::Matrix3d::Identity(), c.offsets[0]};
    } else {
      pm = {c.world[model.parents[m]].r,
            c.world[model.parents[m]].r * c.offsets[m] +
                c.world[model.parents[m]].p};
    }
    const std::array<Eigen::Matrix3d, 3> dr =
        axis_angle_jacobians(params.theta.segment<3>(3 * m));

    std::array<bool, kHandJoints> in_subtree{};
    std::array<detail::JointFrame, kHandJoints> tail;
    in_subtree[m] = true;
    tail[m] = {Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero()};
    for (int k = m + 1; k < kHandJoints; ++k) {
      if (!in_subtree[model.parents[k]]) continue;
      in_subtree[k] = true;
      tail[k] = detail::compose(tail[model.parents[k]],
                                {c.local_rot[k], c.offsets[k]});
    }

    for (int a = 0; a < 3; ++a) {
      const int col = 3 * m + a;
      const Eigen::Matrix3d lead = pm.r * dr[a];
      std::array<Eigen::Matrix3d, kHandJoints> d_rot;
      std::array<Eigen::Vector3d, kHandJoints> d_p;
      for (int k = m; k < kHandJoints; ++k) {
        if (!in_subtree[k]) continue;
        d_rot[k] = lead * tail[k].r;
        const Eigen::Vector3d jk = c.rest_joints.row(k);
        // Skinning frame derivative: dA.p - dA.r * j_k.
        d_p[k] = lead * tail[k].p - d_rot[k] * jk;
      }
      for (int v = 0; v < n; ++v) {
        const Eigen::Vector3d sv = c.shaped.row(v);
        Eigen::Vector3d acc = Eigen::Vector3d::Zero();
        bool touched = false;
        for (int k = m; k < kHandJoints; ++k) {
          if (!in_subtree[k]) continue;
          const double w = model.skinning_weights(v, k);
          if (w == 0.0) continue;
          acc += w * (d_rot[k] * sv + d_p[k]);
          touched = true;
        }
        if (touched) jac.vertices.block<3, 1>(3 * v, col) = acc;
      }
    }
  }

  // Reported joints are a fixed linear map of the vertices.
  for (int p = 0; p < kPoseDim; ++p) {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 3,
                                         Eigen::RowMajor>>
        dv(jac.vertices.col(p).data(), n, 3);
    const Eigen::Matrix<double, kHandOutputJoints, 3> dj =
        model.output_regressor * dv;
    Eigen::Map<Eigen::Matrix<double, kHandOutputJoints, 3, Eigen::RowMajor>>(
        jac.joints.col(p).data(), kHandOutputJoints, 3) = dj;
  }
  return jac;
}

namespace detail {

// Casting through float32 keeps the binary model format lossless.
inline void round_f32(Eigen::MatrixXd& m) {
  for (int i = 0; i < m.size(); ++i) {
    m.data()[i] = double(float(m.data()[i]));
  }
}

}  // namespace detail

// Procedural capsule-limb hand: 5 planar finger chains off a wrist, a ring of
// vertices at every joint and tip (which the regressors average), and filler
// rings along the bones up to exactly `vertex_count` vertices. Ring sizes and
// blend fractions are dyadic so weight and regressor rows sum to exactly 1
// even after the float32 cast.
inline HandModel synthetic_model(int vertex_count) {
  require(vertex_count >= 100, errc::invalid_spec,
          "synthetic hand needs at least 100 vertices");
  const int ring_size = vertex_count < 21 * 8 + 8 ? 4 : 8;
  HandModel model;

  // Finger spread angles (radians from +x, thumb first) and bone lengths.
  const std::array<double, 5> spread = {0.9, 0.26, 0.0, -0.26, -0.55};
  const std::array<double, 5> palm_len = {0.050, 0.085, 0.092, 0.086, 0.074};
  const std::array<double, 5> seg_len = {0.030, 0.038, 0.042, 0.038, 0.030};

  std::array<Eigen::Vector3d, kHandJoints> joints;
  std::array<Eigen::Vector3d, 5> tips;
  std::array<Eigen::Vector3d, 5> dirs;
  joints[0] = Eigen::Vector3d::Zero();
  model.parents[0] = -1;
  for (int f = 0; f < 5; ++f) {
    dirs[f] = {std::cos(spread[f]), std::sin(spread[f]), 0.0};
    const int base = 1 + 3 * f;
    joints[base] = palm_len[f] * dirs[f];
    joints[base + 1] = joints[base] + seg_len[f] * dirs[f];
    joints[base + 2] = joints[base + 1] + 0.7 * seg_len[f] * dirs[f];
    tips[f] = joints[base + 2] + 0.6 * seg_len[f] * dirs[f];
    model.parents[base] = 0;
    model.parents[base + 1] = base;
    model.parents[base + 2] = base + 1;
  }

  struct PendingVertex {
    Eigen::Vector3d position;
    int bone_child;    // skinning joint at the child end
    double u;          // weight on bone_child; 1-u goes to its parent
  };
  std::vector<PendingVertex> verts;
  std::array<std::vector<int>, kHandJoints> joint_rings;
  std::array<std::vector<int>, 5> tip_rings;

  const auto add_ring = [&](const Eigen::Vector3d& center,
                            const Eigen::Vector3d& axis, double radius,
                            int child, double u, std::vector<int>* ring) {
    const Eigen::Vector3d n1 = Eigen::Vector3d::UnitZ().cross(axis).normalized();
    const Eigen::Vector3d n2 = Eigen::Vector3d::UnitZ();
    for (int i = 0; i < ring_size; ++i) {
      const double ang = 2.0 * std::numbers::pi * i / ring_size;
      if (ring != nullptr) ring->push_back(int(verts.size()));
      verts.push_back({center + radius * (std::cos(ang) * n1 +
                                          std::sin(ang) * n2),
                       child, u});
    }
  };

  add_ring(joints[0], Eigen::Vector3d::UnitX(), 0.018, 0, 1.0,
           &joint_rings[0]);
  for (int f = 0; f < 5; ++f) {
    const int base = 1 + 3 * f;
    add_ring(joints[base], dirs[f], 0.011, base, 1.0, &joint_rings[base]);
    add_ring(joints[base + 1], dirs[f], 0.009, base + 1, 1.0,
             &joint_rings[base + 1]);
    add_ring(joints[base + 2], dirs[f], 0.008, base + 2, 1.0,
             &joint_rings[base + 2]);
    // Tips carry no joint of their own; they skin to the distal bone.
    add_ring(tips[f], dirs[f], 0.006, base + 2, 1.0, &tip_rings[f]);
  }

  // Filler rings along the 20 bone segments, round-robin, until the count
  // lands exactly on vertex_count (the last ring may be partial).
  struct Segment {
    Eigen::Vector3d from, to, axis;
    int child;
    double radius;
  };
  std::vector<Segment> segments;
  for (int f = 0; f < 5; ++f) {
    const int base = 1 + 3 * f;
    segments.push_back({joints[0], joints[base], dirs[f], base, 0.013});
    segments.push_back({joints[base], joints[base + 1], dirs[f], base + 1,
                        0.009});
    segments.push_back({joints[base + 1], joints[base + 2], dirs[f], base + 2,
                        0.008});
    segments.push_back({joints[base + 2], tips[f], dirs[f], base + 2, 0.007});
  }
  // Van der Corput fractions are dyadic: u and 1-u stay exact through the
  // float32 cast, so each weight row sums to exactly 1.
  const auto dyadic = [](int k) {
    double u = 0.0;
    for (double base = 0.5; k > 0; k >>= 1, base *= 0.5) {
      if (k & 1) u += base;
    }
    return u;
  };
  std::array<int, 20> placed{};
  while (int(verts.size()) < vertex_count) {
    for (std::size_t s = 0;
         s < segments.size() && int(verts.size()) < vertex_count; ++s) {
      const double u = dyadic(placed[s] + 1);
      const Segment& seg = segments[s];
      const Eigen::Vector3d center = seg.from + u * (seg.to - seg.from);
      const Eigen::Vector3d n1 =
          Eigen::Vector3d::UnitZ().cross(seg.axis).normalized();
      const int remaining = vertex_count - int(verts.size());
      for (int i = 0; i < std::min(ring_size, remaining); ++i) {
        const double ang =
            2.0 * std::numbers::pi * i / ring_size + 0.4 * (placed[s] + 1);
        verts.push_back({center + seg.radius * (std::cos(ang) * n1 +
                                                std::sin(ang) *
                                                    Eigen::Vector3d::UnitZ()),
                         seg.child, u});
      }
      ++placed[s];
    }
  }

  const int n = int(verts.size());
  model.template_vertices.resize(n, 3);
  model.skinning_weights = Eigen::MatrixXd::Zero(n, kHandJoints);
  for (int v = 0; v < n; ++v) {
    model.template_vertices.row(v) = verts[v].position;
    const int child = verts[v].bone_child;
    const int parent = model.parents[child];
    if (parent < 0 || verts[v].u >= 1.0) {
      model.skinning_weights(v, child) = 1.0;
    } else {
      model.skinning_weights(v, child) = verts[v].u;
      model.skinning_weights(v, parent) = 1.0 - verts[v].u;
    }
  }

  model.skeleton_regressor = Eigen::MatrixXd::Zero(kHandJoints, n);
  model.output_regressor = Eigen::MatrixXd::Zero(kHandOutputJoints, n);
  for (int k = 0; k < kHandJoints; ++k) {
    for (const int v : joint_rings[k]) {
      model.skeleton_regressor(k, v) = 1.0 / double(joint_rings[k].size());
    }
    model.output_regressor.row(k) = model.skeleton_regressor.row(k);
  }
  for (int f = 0; f < 5; ++f) {
    for (const int v : tip_rings[f]) {
      model.output_regressor(kHandJoints + f, v) =
          1.0 / double(tip_rings[f].size());
    }
  }

  // Smooth shape fields: overall scale, finger elongation, thickening, and
  // low-frequency bends. Magnitudes keep |beta|~1 within a few millimetres.
  model.shape_basis.resize(3 * n, kBetaDim);
  for (int v = 0; v < n; ++v) {
    const Eigen::Vector3d p = verts[v].position;
    const auto set = [&](int b, const Eigen::Vector3d& d) {
      model.shape_basis.block<3, 1>(3 * v, b) = d;
    };
    set(0, 0.05 * p);
    set(1, 0.03 * p.x() * Eigen::Vector3d::UnitX());
    set(2, 0.004 * Eigen::Vector3d(0.0, p.y(), p.z()).normalized());
    for (int b = 3; b < kBetaDim; ++b) {
      const double phase = 0.7 * b;
      set(b, 0.003 * Eigen::Vector3d(std::sin(40.0 * p.x() + phase),
                                     std::cos(35.0 * p.y() + 2.0 * phase),
                                     std::sin(30.0 * p.z() + 3.0 * phase)));
    }
  }

  model.lower_bounds.setConstant(double(float(-std::numbers::pi / 2.0)));
  model.upper_bounds.setConstant(double(float(std::numbers::pi / 2.0)));

  detail::round_f32(model.template_vertices);
  detail::round_f32(model.shape_basis);
  detail::round_f32(model.skinning_weights);
  detail::round_f32(model.skeleton_regressor);
  detail::round_f32(model.output_regressor);
  model.validate();
  return model;
}

namespace detail {

inline constexpr char kHandMagic[] = "HOFIT-HAND-V1\n";

inline void write_f32(std::ostream& os, const Eigen::MatrixXd& m) {
  // Row-major element order, little-endian float32.
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      const float f = float(m(r, c));
      os.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
  }
}

inline void read_f32(std::istream& is, Eigen::MatrixXd& m, int rows,
                     int cols) {
  m.resize(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      float f = 0.0f;
      is.read(reinterpret_cast<char*>(&f), sizeof(f));
      m(r, c) = double(f);
    }
  }
  require(bool(is), errc::parse_error, "hand model file truncated");
}

}  // namespace detail

// Versioned magic, a JSON size header, then row-major little-endian float32
// blobs. Model arrays are float32-valued, so save/load round-trips exactly.
inline void save_model(const HandModel& model, const std::string& path) {
  model.validate();
  std::ofstream os(path, std::ios::binary);
  require(os.good(), errc::missing_input, "cannot open " + path);
  os.write(detail::kHandMagic, sizeof(detail::kHandMagic) - 1);
  nlohmann::json header;
  header["vertex_count"] = model.vertex_count();
  header["joints"] = kHandJoints;
  header["output_joints"] = kHandOutputJoints;
  header["shape_dim"] = kBetaDim;
  header["parents"] = model.parents;
  const std::string header_str = header.dump();
  const std::uint32_t len = std::uint32_t(header_str.size());
  os.write(reinterpret_cast<const char*>(&len), sizeof(len));
  os.write(header_str.data(), std::streamsize(header_str.size()));
  detail::write_f32(os, model.template_vertices);
  detail::write_f32(os, model.shape_basis);
  detail::write_f32(os, model.skinning_weights);
  detail::write_f32(os, model.skeleton_regressor);
  detail::write_f32(os, model.output_regressor);
  detail::write_f32(os, model.lower_bounds);
  detail::write_f32(os, model.upper_bounds);
  require(os.good(), errc::missing_input, "failed writing " + path);
}

inline HandModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), errc::missing_input, "cannot open " + path);
  char magic[sizeof(detail::kHandMagic) - 1];
  is.read(magic, sizeof(magic));
  require(bool(is) && std::memcmp(magic, detail::kHandMagic, sizeof(magic)) == 0,
          errc::parse_error, "not a hand model file: " + path);
  std::uint32_t len = 0;
  is.read(reinterpret_cast<char*>(&len), sizeof(len));
  require(bool(is) && len < (1u << 20), errc::parse_error,
          "bad hand model header length");
  std::string header_str(len, '\0');
  is.read(header_str.data(), std::streamsize(len));
  require(bool(is), errc::parse_error, "hand model header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse_error, std::string("hand model header: ") + e.what());
  }
  require(header.value("joints", 0) == kHandJoints &&
              header.value("output_joints", 0) == kHandOutputJoints &&
              header.value("shape_dim", 0) == kBetaDim,
          errc::parse_error, "hand model dimensions unsupported");
  const int n = header.value("vertex_count", 0);
  require(n >= 4, errc::parse_error, "bad vertex count");
  HandModel model;
  const auto parents = header.value("parents", std::vector<int>{});
  require(int(parents.size()) == kHandJoints, errc::parse_error,
          "bad parents array");
  std::copy(parents.begin(), parents.end(), model.parents.begin());
  detail::read_f32(is, model.template_vertices, n, 3);
  detail::read_f32(is, model.shape_basis, 3 * n, kBetaDim);
  detail::read_f32(is, model.skinning_weights, n, kHandJoints);
  detail::read_f32(is, model.skeleton_regressor, kHandJoints, n);
  detail::read_f32(is, model.output_regressor, kHandOutputJoints, n);
  Eigen::MatrixXd lower, upper;
  detail::read_f32(is, lower, kAngleDim, 1);
  detail::read_f32(is, upper, kAngleDim, 1);
  model.lower_bounds = lower;
  model.upper_bounds = upper;
  model.validate();
  return model;
}

}  // namespace hofit
