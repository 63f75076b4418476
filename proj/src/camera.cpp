#include "calib/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace calib {

PixelPoint project_point(const Vec3& x, const RigidTransform3& extrinsic,
                         const CameraIntrinsics& k) {
  const Vec3 cam = extrinsic * x;
  const Vec3 h = k.matrix() * cam;
  if (h.z() <= 1e-9) throw std::domain_error("project_point: point behind camera");
  return {h.x() / h.z(), h.y() / h.z()};
}

namespace {

// Role order: top, bottom, left, right (image v grows downward; "top" is
// the smallest v). Throws when the extremes are ambiguous.
std::array<int, 4> roles_of(const std::array<PixelPoint, 4>& q) {
  auto argmin = [&](auto key, int skip1, int skip2) {
    int best = -1;
    for (int i = 0; i < 4; ++i) {
      if (i == skip1 || i == skip2) continue;
      if (best < 0 || key(q[i]) < key(q[best])) best = i;
    }
    return best;
  };
  auto near = [](const PixelPoint& a, const PixelPoint& b) {
    return std::abs(a.u - b.u) < 1.0 && std::abs(a.v - b.v) < 1.0;
  };

  const int top = argmin([](const PixelPoint& p) { return p.v; }, -1, -1);
  const int bottom = argmin([](const PixelPoint& p) { return -p.v; }, top, -1);
  const int left = argmin([](const PixelPoint& p) { return p.u; }, top, bottom);
  int right = -1;
  for (int i = 0; i < 4; ++i)
    if (i != top && i != bottom && i != left) right = i;

  const std::array<int, 4> roles = {top, bottom, left, right};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (near(q[roles[i]], q[roles[j]]))
        throw std::runtime_error("sort_correspondences: degenerate corner layout");
  return roles;
}

}  // namespace

std::array<int, 4> sort_correspondences(const std::vector<Vec3>& lidar_vertices,
                                        const std::vector<PixelPoint>& image_corners,
                                        const CameraIntrinsics& k,
                                        const RigidTransform3& guess) {
  if (lidar_vertices.size() != 4 || image_corners.size() != 4)
    throw std::invalid_argument("sort_correspondences: need exactly 4 of each");

  std::array<PixelPoint, 4> projected;
  for (int i = 0; i < 4; ++i) projected[i] = project_point(lidar_vertices[i], guess, k);
  std::array<PixelPoint, 4> corners;
  for (int i = 0; i < 4; ++i) corners[i] = image_corners[i];

  const std::array<int, 4> vr = roles_of(projected);
  const std::array<int, 4> cr = roles_of(corners);

  std::array<int, 4> perm{};
  for (int role = 0; role < 4; ++role) perm[vr[role]] = cr[role];
  return perm;
}

}  // namespace calib
