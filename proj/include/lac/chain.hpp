#pragma once

// Closed-chain kinematics of the dual-arm system and the object-level
// dynamic balance with shared-force wrench decomposition.

#include <array>
#include <stdexcept>
#include <utility>

#include "lac/math.hpp"

namespace lac {

// Fixed grasp geometry: object-to-end-effector transforms and the lever
// arms from the contact points to the object centroid, in the object frame.
struct GraspGeometry {
  std::array<Transform, 2> t_obj_to_ee;
  std::array<Vec3, 2> r_arm;
  Vec3 r_env;

  static GraspGeometry from_transforms(const Transform& t0, const Transform& t1,
                                       const Vec3& r_env = {}) {
    GraspGeometry g;
    g.t_obj_to_ee = {t0, t1};
    g.r_arm = {-t0.translation, -t1.translation};
    g.r_env = r_env;
    return g;
  }

  bool consistent(double tol = 1e-9) const {
    for (int i = 0; i < 2; ++i)
      if ((r_arm[i] + t_obj_to_ee[i].translation).norm() > tol) return false;
    return true;
  }
};

struct ObjectInertia {
  double mass = 1.0;             // kg
  Mat3 inertia = Mat3::Identity();  // kg*m^2, about the centroid
  Vec3 gravity{0.0, 0.0, -9.81};    // m/s^2

  bool valid() const {
    if (!(mass > 0.0)) return false;
    if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
    Eigen::SelfAdjointEigenSolver<Mat3> es(inertia);
    return es.eigenvalues().minCoeff() > 0.0;
  }
};

// 6x6 map from a contact wrench to the equivalent wrench at the centroid:
// [[I, 0], [skew(r), I]].
using GraspMatrix = Eigen::Matrix<double, 6, 6>;

inline GraspMatrix grasp_matrix(const Vec3& r) {
  GraspMatrix g = GraspMatrix::Identity();
  g.block<3, 3>(3, 0) = skew(r);
  return g;
}

// Per-arm end-effector targets in the respective base frames for a desired
// object pose: T_be = inv(T_wb) * T_wo * T_oe.
inline std::array<Transform, 2> ee_targets_from_object(
    const Transform& t_world_obj, const std::array<Transform, 2>& t_world_base,
    const GraspGeometry& grasp) {
  std::array<Transform, 2> out;
  for (int i = 0; i < 2; ++i)
    out[i] = inverse(t_world_base[i]) * t_world_obj * grasp.t_obj_to_ee[i];
  return out;
}

// Inertial wrench of the object: [m*vdot; I*wdot + w x (I w)].
inline Wrench object_inertial_wrench(const Vec3& vdot, const Vec3& wdot,
                                     const Vec3& v, const Vec3& w,
                                     const ObjectInertia& inertia) {
  (void)v;  // linear part of the twist does not enter the body wrench
  const Eigen::Vector3d iw = inertia.inertia * w.eigen();
  Wrench out;
  out.force = vdot * inertia.mass;
  out.moment = Vec3(inertia.inertia * wdot.eigen()) + w.cross(Vec3(iw));
  return out;
}

inline Wrench gravity_wrench(const ObjectInertia& inertia) {
  return {inertia.gravity * inertia.mass, Vec3{}};
}

// Minimum-norm split of the object-level balance across the two arms:
//   G1*F1 + G2*F2 = F_IL - Gbar - GL*F_env
// All wrenches and lever arms must be expressed in one common frame.
inline std::pair<Wrench, Wrench> decompose_wrench(const Wrench& f_il,
                                                  const Wrench& f_env,
                                                  const Wrench& gravity,
                                                  const GraspGeometry& grasp) {
  Mat a(6, 12);
  a.block<6, 6>(0, 0) = grasp_matrix(grasp.r_arm[0]);
  a.block<6, 6>(0, 6) = grasp_matrix(grasp.r_arm[1]);
  const Vec6 rhs =
      f_il.vec6() - gravity.vec6() - grasp_matrix(grasp.r_env) * f_env.vec6();
  const Eigen::VectorXd x = pinv(a) * rhs;
  return {Wrench(Vec6(x.head<6>())), Wrench(Vec6(x.tail<6>()))};
}

// Adds an internal squeeze force along the grasp normal. The pair lies in
// the nullspace of the balance when the lever arms are parallel to the
// normal, so the net object wrench is unchanged.
inline void add_squeeze(Wrench& f0, Wrench& f1, const Vec3& grasp_normal,
                        double magnitude) {
  const Vec3 n = grasp_normal.normalized();
  f0.force += n * -magnitude;
  f1.force += n * magnitude;
}

}  // namespace lac
