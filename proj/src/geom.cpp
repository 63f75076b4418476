#include "calib/geom.hpp"

#include <cmath>
#include <stdexcept>

namespace calib {

TwistSE2 TwistSE2::normalized(double omega, double u, double v) {
  const double n = std::sqrt(omega * omega + u * u + v * v);
  if (n < 1e-300) throw std::invalid_argument("TwistSE2: zero direction");
  return {omega / n, u / n, v / n};
}

Rotation3 so3_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-12) {
    Mat3 wx;
    wx << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
    return {Mat3::Identity() + wx};
  }
  const Vec3 axis = w / angle;
  Mat3 k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  // Rodrigues formula.
  Mat3 r = Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
  return {r};
}

Vec3 so3_log(const Rotation3& r) {
  const Mat3& m = r.m;
  const double tr = m.trace();
  const double cos_angle = std::min(1.0, std::max(-1.0, (tr - 1.0) * 0.5));
  const double angle = std::acos(cos_angle);

  if (angle < 1e-10) {
    // First-order: R ~ I + [w]_x.
    return {0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)), 0.5 * (m(1, 0) - m(0, 1))};
  }
  if (angle > M_PI - 1e-6) {
    // Near pi the antisymmetric part vanishes; recover the axis as the
    // eigenvector of R for eigenvalue +1 via the largest diagonal of R + I.
    Mat3 a = m + Mat3::Identity();
    int col = 0;
    a.diagonal().maxCoeff(&col);
    Vec3 axis = a.col(col).normalized();
    // Fix the sign so that so3_exp(angle*axis) reproduces R's off-diagonals.
    Vec3 w = angle * axis;
    if ((so3_exp({w}).m - m).norm() > (so3_exp({-w}).m - m).norm()) w = -w;
    return w;
  }
  const double f = angle / (2.0 * std::sin(angle));
  return {f * (m(2, 1) - m(1, 2)), f * (m(0, 2) - m(2, 0)), f * (m(1, 0) - m(0, 1))};
}

Rotation3 rot_x(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return {m};
}

Rotation3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return {m};
}

Rotation3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return {m};
}

Rotation3 euler_xyz_to_rotation(double roll_deg, double pitch_deg, double yaw_deg) {
  return rot_x(roll_deg * kDegToRad) * rot_y(pitch_deg * kDegToRad) * rot_z(yaw_deg * kDegToRad);
}

Pose2 se2_exp(double kappa, const TwistSE2& t) {
  Pose2 out;
  out.theta = t.omega * kappa;
  if (std::abs(t.omega) < 1e-7) {
    // Second-order series in omega; avoids cancellation in the 1/omega terms.
    out.translation.x() = t.u * kappa - 0.5 * t.v * t.omega * kappa * kappa;
    out.translation.y() = t.v * kappa + 0.5 * t.u * t.omega * kappa * kappa;
    return out;
  }
  const double c = std::cos(out.theta), s = std::sin(out.theta);
  out.translation.x() = (t.v * c + t.u * s - t.v) / t.omega;
  out.translation.y() = (t.v * s - t.u * c + t.u) / t.omega;
  return out;
}

ProjectiveMap2 projective_from_params(double k, double lambda, const Vec2& v, double upsilon) {
  if (std::abs(lambda) < 1e-12) throw std::invalid_argument("projective_from_params: lambda = 0");
  if (std::abs(upsilon) < 1e-12) throw std::invalid_argument("projective_from_params: upsilon = 0");
  Mat3 shear = Mat3::Identity();
  shear(0, 1) = k;
  Mat3 scale = Mat3::Identity();
  scale(0, 0) = lambda;
  scale(1, 1) = 1.0 / lambda;
  Mat3 elation = Mat3::Identity();
  elation(2, 0) = v.x();
  elation(2, 1) = v.y();
  elation(2, 2) = upsilon;
  ProjectiveMap2 p{shear * scale * elation};
  if (std::abs(p.m.determinant()) < 1e-12)
    throw std::invalid_argument("projective_from_params: singular map");
  return p;
}

std::vector<Vec2> projective_apply(const ProjectiveMap2& p, const std::vector<Vec2>& pts) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const Vec2& q : pts) {
    const Vec3 h = p.m * Vec3(q.x(), q.y(), 1.0);
    if (std::abs(h.z()) < 1e-12)
      throw std::domain_error("projective_apply: point maps to the line at infinity");
    out.emplace_back(h.x() / h.z(), h.y() / h.z());
  }
  return out;
}

}  // namespace calib
