#pragma once

#include <array>
#include <vector>

#include "calib/geom.hpp"

namespace calib {

struct CameraIntrinsics {
  double fx = 1.0, fy = 1.0;
  double s = 0.0;        // skew
  double cx = 0.0, cy = 0.0;

  Mat3 matrix() const {
    Mat3 k;
    k << fx, s, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }
};

struct PixelPoint {
  double u = 0.0, v = 0.0;
};

// Pinhole projection of a LiDAR-frame point through the extrinsic
// transform. Throws if the transformed depth is <= 1e-9 (behind camera).
PixelPoint project_point(const Vec3& x, const RigidTransform3& extrinsic,
                         const CameraIntrinsics& k);

// Pairs the four LiDAR vertices with the four image corners by their
// top / bottom / left / right roles; the vertices are projected with the
// guess extrinsic first. Returns perm with vertices[i] <-> corners[perm[i]].
// Throws on a degenerate tie (two points sharing both extremes within 1 px).
std::array<int, 4> sort_correspondences(const std::vector<Vec3>& lidar_vertices,
                                        const std::vector<PixelPoint>& image_corners,
                                        const CameraIntrinsics& k,
                                        const RigidTransform3& guess);

}  // namespace calib
