#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "calib/geom.hpp"
#include "calib/simlidar.hpp"
#include "calib/targets.hpp"

namespace calib {

/// Result of fitting the reference target to a point cloud. transform is
/// the pullback H (LiDAR frame -> template frame); the estimated vertices
/// are inverse(transform) applied to the reference vertices.
struct FitResult {
  RigidTransform3 transform;
  std::vector<Vec3> vertices;
  double cost = 0.0;
  int iterations = 0;
  int restarts_used = 0;
};

struct L1Params {
  double epsilon = 0.0;      // slab half-thickness override; <= 0 keeps the target's
  double d = 0.0;            // square side for the box-cost variant (0 = unused)
  int restarts = 8;
  double cost_tol = 1e-8;
  double param_tol = 1e-6;
  std::uint64_t seed = 0;    // drives the random restart rotations
};

// 0 if |lambda| <= a, otherwise distance to the nearer slab face.
double l1_scalar_cost(double lambda, double a);

// Sum of per-axis slab costs over the pulled-back cloud: the target treated
// as the box [-eps, eps] x [-d/2, d/2]^2. Throws on an empty cloud.
double cloud_cost_box(const std::vector<Vec3>& pullback, double epsilon, double d);

// Polygonal volume cost: x-slab penalty plus, for each violated edge, the
// perpendicular distance to that edge line. Zero iff every point is in the
// RoI. Throws on an empty cloud.
double cloud_cost_polygon(const std::vector<Vec3>& pullback, const PolygonTarget& target,
                          const EdgeLineSet& lines);

// Fits the target volume to the cloud by minimizing the polygonal cost over
// SE(3) (derivative-free, multi-start). Requires >= 8 points. When init is
// given it seeds the first restart; otherwise the first restart aligns the
// template normal with the viewing ray and the template centroid with the
// cloud centroid.
FitResult fit_target_l1(const Scan& cloud, const PolygonTarget& target, const L1Params& params,
                        std::optional<RigidTransform3> init = std::nullopt);

// Per ring with >= 2 returns, the two angular extreme points (the first and
// last return of the ring on the target).
std::vector<LidarPoint> extract_edge_points(const Scan& scan);

// Template fitting on edge points: alternate nearest-edge-line association
// with SE(3) minimization of the summed squared point-to-line distances.
// Stops when the SE(3) step norm drops below 1e-5 or after 100 alternations;
// multi-starts over 8 in-plane template spins. Requires >= 4 edge points
// spanning >= 2 rings, not all collinear.
FitResult fit_template_p2l(const std::vector<LidarPoint>& edge_points, const PolygonTarget& target,
                           std::optional<RigidTransform3> init = std::nullopt);

}  // namespace calib
