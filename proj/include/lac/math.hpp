#pragma once

// Spatial math kernel: 3-vectors, SE(3) transforms, wrenches and a small
// dense matrix type with an SVD pseudo-inverse. Everything here is a value
// type; matrices stay at most 12x12.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace lac {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}
  explicit Vec3(const Eigen::Vector3d& v) : x(v.x()), y(v.y()), z(v.z()) {}

  Eigen::Vector3d eigen() const { return {x, y, z}; }

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    const double n = norm();
    return n > 0.0 ? *this / n : Vec3{};
  }
  Vec3 cwise_mul(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Cross-product matrix: skew(v) * w == v x w.
inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z, v.y,
       v.z, 0.0, -v.x,
      -v.y, v.x, 0.0;
  return m;
}

inline Mat3 rot_x(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix();
}
inline Mat3 rot_y(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix();
}
inline Mat3 rot_z(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

// Rodrigues exponential of a rotation vector.
inline Mat3 rotvec_exp(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Mat3::Identity() + skew(w);
  return Eigen::AngleAxisd(theta, w.eigen() / theta).toRotationMatrix();
}

// Rotation vector (axis * angle) of a rotation matrix.
inline Vec3 rotvec_log(const Mat3& r) {
  Eigen::AngleAxisd aa(r);
  return Vec3(aa.axis() * aa.angle());
}

// Nearest orthonormal matrix (polar factor via SVD).
inline Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 q = svd.matrixU() * svd.matrixV().transpose();
  if (q.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    q = u * svd.matrixV().transpose();
  }
  return q;
}

inline double orthonormality_drift(const Mat3& r) {
  return (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
}

// Rigid transform: rotation (orthonormal, det +1) plus translation.
struct Transform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation;

  Transform() = default;
  Transform(const Mat3& r, const Vec3& t) : rotation(r), translation(t) {}

  static Transform identity() { return {}; }
  static Transform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

  Vec3 apply(const Vec3& p) const {
    return Vec3(rotation * p.eigen()) + translation;
  }
  Vec3 rotate(const Vec3& v) const { return Vec3(rotation * v.eigen()); }
};

// Applies b then a: (a*b).apply(p) == a.apply(b.apply(p)).
inline Transform compose(const Transform& a, const Transform& b) {
  Transform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.apply(b.translation);
  if (orthonormality_drift(out.rotation) > 1e-9)
    out.rotation = orthonormalize(out.rotation);
  return out;
}

inline Transform inverse(const Transform& t) {
  Transform out;
  out.rotation = t.rotation.transpose();
  out.translation = Vec3(-(out.rotation * t.translation.eigen()));
  return out;
}

inline Transform operator*(const Transform& a, const Transform& b) {
  return compose(a, b);
}

// Force + moment pair (N, N*m).
struct Wrench {
  Vec3 force;
  Vec3 moment;

  Wrench() = default;
  Wrench(const Vec3& f, const Vec3& m) : force(f), moment(m) {}
  explicit Wrench(const Vec6& v)
      : force(v[0], v[1], v[2]), moment(v[3], v[4], v[5]) {}

  Vec6 vec6() const {
    Vec6 v;
    v << force.x, force.y, force.z, moment.x, moment.y, moment.z;
    return v;
  }

  Wrench operator+(const Wrench& o) const { return {force + o.force, moment + o.moment}; }
  Wrench operator-(const Wrench& o) const { return {force - o.force, moment - o.moment}; }
  Wrench operator-() const { return {-force, -moment}; }
  Wrench operator*(double s) const { return {force * s, moment * s}; }
  Wrench& operator+=(const Wrench& o) { force += o.force; moment += o.moment; return *this; }

  double norm() const { return vec6().norm(); }
  bool finite() const { return force.finite() && moment.finite(); }
};

// Moore-Penrose pseudo-inverse. Singular values below 1e-10 * sigma_max are
// truncated, which only matters for degenerate grasp geometry.
inline Mat pinv(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;
  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv_sv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace lac
