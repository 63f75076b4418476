#pragma once

#include <cstdint>
#include <vector>

#include "calib/geom.hpp"
#include "calib/simlidar.hpp"
#include "calib/vertexfit.hpp"

namespace calib {

struct RansacParams {
  int iterations = 200;
  double inlier_threshold = 0.01;  // meters
  int min_inliers = 2;
  std::uint64_t seed = 0;
};

enum class EdgeSide { kLeft, kRight };

struct RingEdgePoint {
  Vec3 p;
  int ring = 0;
  EdgeSide side = EdgeSide::kLeft;
};

struct Line2 {
  // a*x + b*y + c = 0 with (a, b) unit.
  double a = 0.0, b = 0.0, c = 0.0;
  double distance(const Vec2& p) const { return std::abs(a * p.x() + b * p.y() + c); }
};

// Least-squares plane through the cloud: normal is the least singular
// vector of the centered points, oriented toward the sensor (origin).
// Throws for < 3 points or a rank-deficient (collinear) cloud.
std::pair<Vec3, Vec3> fit_plane_svd(const std::vector<Vec3>& cloud);

// Per ring with >= 2 points: the extreme returns along the in-plane
// horizontal axis. Rings with a single return contribute nothing.
std::vector<RingEdgePoint> extract_ring_edges(const Scan& cloud);

// RANSAC 2-point line hypotheses, best consensus refined by total least
// squares over the inliers. Throws if all points coincide.
std::pair<Line2, std::vector<int>> ransac_line(const std::vector<Vec2>& points,
                                               const RansacParams& params);

// The RN pipeline: SVD plane, planar projection, ring-edge extraction,
// quadrant edge association, four RANSAC lines, vertices by intersection
// lifted back to 3D. Throws when any edge collects fewer than 2 points
// (the sparse-scan failure mode).
FitResult baseline_vertices(const Scan& cloud, const RansacParams& params);

}  // namespace calib
