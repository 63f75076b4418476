#pragma once

#include <string>
#include <vector>

#include "calib/geom.hpp"

namespace calib {

/// Planar convex polygon in the reference (template) frame: vertices are
/// (y, z) coordinates in meters, counterclockwise, vertex centroid at the
/// origin. The target occupies the slab |x| <= epsilon.
class PolygonTarget {
 public:
  // Vertices may be given in either orientation and off-center; they are
  // re-centered and reordered counterclockwise. Throws if non-convex,
  // fewer than three vertices, or epsilon < 0.
  PolygonTarget(std::vector<Vec2> vertices_yz, double epsilon);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  double epsilon() const { return epsilon_; }
  std::size_t size() const { return vertices_.size(); }

  // Reference vertices as 3D points in the template frame (x = 0).
  std::vector<Vec3> vertices3() const;

 private:
  std::vector<Vec2> vertices_;
  double epsilon_;
};

/// Edge i connects vertex i to vertex i+1 (wraparound); a*y + b*z + c = 0,
/// with interior_sign chosen so interior points give a positive signed value.
struct EdgeLine {
  double a = 0.0, b = 0.0, c = 0.0;
  double interior_sign = 1.0;

  double signed_value(double y, double z) const { return interior_sign * (a * y + b * z + c); }
  double distance(double y, double z) const {
    return std::abs(a * y + b * z + c) / std::sqrt(a * a + b * b);
  }
};

using EdgeLineSet = std::vector<EdgeLine>;

// Line equations for the edges of the target; throws on duplicate
// consecutive vertices.
EdgeLineSet edge_lines(const PolygonTarget& target);

// True iff |p_x| <= epsilon and (p_y, p_z) lies on the interior side of
// every edge (boundary counts as inside).
bool roi_contains(const PolygonTarget& target, const EdgeLineSet& lines, const Vec3& p);

// Square of side d rotated 45 degrees: vertices at (+-d/sqrt2, 0), (0, +-d/sqrt2).
PolygonTarget make_diamond(double d, double epsilon);

// Axis-aligned square of side d: vertices at (+-d/2, +-d/2).
PolygonTarget make_square(double d, double epsilon);

// Shape file I/O: JSON object {"vertices": [[y, z], ...], "epsilon": e}.
PolygonTarget load_shape(const std::string& path);
void save_shape(const PolygonTarget& target, const std::string& path);

}  // namespace calib
