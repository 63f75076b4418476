#pragma once

#include <utility>
#include <vector>

#include "calib/camera.hpp"
#include "calib/geom.hpp"

namespace calib {

/// Convex polygon in pixel coordinates, counterclockwise.
using Polygon2 = std::vector<Vec2>;

// Shoelace formula; throws for fewer than 3 vertices.
double shoelace_area(const Polygon2& poly);

// Convex hull in counterclockwise order, collinear points dropped.
// Throws when all points are collinear.
Polygon2 convex_hull_ccw(const std::vector<Vec2>& points);

// Convex clip of a against the half planes of b; empty when disjoint or
// when the overlap has zero area.
Polygon2 polygon_intersection(const Polygon2& a, const Polygon2& b);

// Intersection area over union area; throws when both areas are zero.
double iou(const Polygon2& a, const Polygon2& b);

// One 3D LiDAR vertex with its matched image corner.
using Correspondence = std::pair<Vec3, PixelPoint>;

// Minimizes the summed squared reprojection error over SE(3) starting from
// init (a rough CAD-style guess). Requires >= 4 correspondences.
RigidTransform3 calibrate_pnp(const std::vector<Correspondence>& correspondences,
                              const CameraIntrinsics& k, const RigidTransform3& init);

// Root-mean-square reprojection error in pixels per corner.
double pnp_residual_rms(const std::vector<Correspondence>& correspondences,
                        const CameraIntrinsics& k, const RigidTransform3& extrinsic);

// One target's LiDAR vertex polygon (3D) with its image corner polygon.
struct PolygonPair {
  std::vector<Vec3> lidar_vertices;
  Polygon2 image_polygon;
};

// Maximizes the summed IoU of the projected target polygons over SE(3).
// Throws if no target overlaps at the initial guess.
RigidTransform3 calibrate_iou(const std::vector<PolygonPair>& pairs, const CameraIntrinsics& k,
                              const RigidTransform3& init);

double mean_iou(const std::vector<PolygonPair>& pairs, const CameraIntrinsics& k,
                const RigidTransform3& extrinsic);

}  // namespace calib
