#pragma once

#include <Eigen/Dense>
#include <vector>

namespace calib {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rotation matrix in SO(3). Stored as a plain 3x3 matrix; construction from
/// arbitrary matrices is the caller's responsibility (use so3_exp or the
/// factory helpers for guaranteed-orthonormal values).
struct Rotation3 {
  Mat3 m = Mat3::Identity();

  static Rotation3 identity() { return {}; }
  Vec3 operator*(const Vec3& x) const { return m * x; }
  Rotation3 operator*(const Rotation3& o) const { return {m * o.m}; }
  Rotation3 transpose() const { return {m.transpose()}; }
};

/// Element of SE(3): x -> R x + t.
struct RigidTransform3 {
  Rotation3 rotation;
  Vec3 translation = Vec3::Zero();

  static RigidTransform3 identity() { return {}; }

  Vec3 operator*(const Vec3& x) const { return rotation * x + translation; }

  RigidTransform3 compose(const RigidTransform3& o) const {
    return {rotation * o.rotation, rotation * o.translation + translation};
  }

  RigidTransform3 inverse() const {
    Rotation3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }
};

/// Element of Sim(3): x -> s R x + t, s > 0.
struct Sim3Transform {
  double scale = 1.0;
  Rotation3 rotation;
  Vec3 translation = Vec3::Zero();

  static Sim3Transform identity() { return {}; }
  Vec3 operator*(const Vec3& x) const { return scale * (rotation * x) + translation; }
};

/// Planar pose (theta, t_x, t_y) acting on R^2.
struct Pose2 {
  double theta = 0.0;
  Vec2 translation = Vec2::Zero();

  Vec2 operator*(const Vec2& p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * p.x() - s * p.y() + translation.x(),
            s * p.x() + c * p.y() + translation.y()};
  }
};

/// Unit direction (omega, u, v) in se(2); omega^2 + u^2 + v^2 = 1.
struct TwistSE2 {
  double omega = 0.0;
  double u = 0.0;
  double v = 0.0;

  static TwistSE2 normalized(double omega, double u, double v);
};

/// Nonsingular 3x3 matrix acting on the projective plane.
struct ProjectiveMap2 {
  Mat3 m = Mat3::Identity();
};

Rotation3 so3_exp(const Vec3& axis_angle);
// Inverse of so3_exp for angles in [0, pi]; the angle-pi case falls back to
// eigen-axis extraction (the Rodrigues inversion is singular there).
Vec3 so3_log(const Rotation3& r);

// Single-axis rotations.
Rotation3 rot_x(double rad);
Rotation3 rot_y(double rad);
Rotation3 rot_z(double rad);

// R = R_x(roll) * R_y(pitch) * R_z(yaw), angles in degrees (XYZ convention).
Rotation3 euler_xyz_to_rotation(double roll_deg, double pitch_deg, double yaw_deg);

// Exponential map se(2) -> SE(2) with kappa scaling the unit twist.
// The omega -> 0 limit (pure translation) is handled by a series branch.
Pose2 se2_exp(double kappa, const TwistSE2& twist);

// P = H_shear(k) * H_scale(lambda) * H_elation(v, upsilon); the similarity
// factor is pinned to the identity so the family has five degrees of freedom.
ProjectiveMap2 projective_from_params(double k, double lambda, const Vec2& v, double upsilon);

// Applies P to Cartesian points; throws if a point maps to the line at
// infinity (|third homogeneous coordinate| < 1e-12).
std::vector<Vec2> projective_apply(const ProjectiveMap2& p, const std::vector<Vec2>& pts);

constexpr double kDegToRad = 0.017453292519943295;
constexpr double kRadToDeg = 57.29577951308232;

}  // namespace calib
