#pragma once

#include <cstdint>
#include <vector>

#include "calib/geom.hpp"

namespace calib {

/// Candidate target generated from a nominal unit square by the five-DoF
/// projective family (shear k, scale lambda, elation v and upsilon). The
/// derived quadrilateral is centered at the origin and normalized to unit
/// width, since candidates are considered up to translation and scale.
struct CandidateShape {
  double k = 0.0;
  double lambda = 1.0;
  Vec2 v = Vec2::Zero();
  double upsilon = 1.0;
  std::vector<Vec2> vertices;  // 4 points, counterclockwise
  double width = 1.0;          // horizontal extent (1 after normalization)
  double height = 1.0;         // vertical extent
};

struct ShapeScoreConfig {
  int n_rotations = 6;
  int m_strips = 5;
  int rings_per_strip = 4;
  int sphere_grid = 25;  // sphere discretized into grid x grid directions
  double mu = 1.0;       // weight of the edge-point separation term
};

// Throws if the elation denominator is non-positive at a nominal vertex
// (the convexity condition) or the map is singular.
CandidateShape shape_from_params(double k, double lambda, const Vec2& v, double upsilon);

// Wraps an explicit quadrilateral (already convex) for scoring.
CandidateShape shape_from_vertices(std::vector<Vec2> vertices);

struct RingEdgePoint2 {
  double x = 0.0;
  double y = 0.0;   // the ring height
  int edge = 0;     // edge index i, connecting vertex i to i+1
};

// Closed-form intersections of horizontal rings with the polygon boundary;
// horizontal edges are skipped.
std::vector<RingEdgePoint2> ring_edge_points(const std::vector<Vec2>& vertices,
                                             const std::vector<double>& ring_heights);

// Horizontal velocity of the edge point on ring y_r when the shape moves
// along the unit twist (omega, u, v). Throws on a horizontal edge.
double edge_gradient(const Vec2& p_i, const Vec2& p_next, double y_r, const TwistSE2& twist);

// Sensitivity M = (1/h) * sum of squared edge-point gradients; 0 when no
// ring illuminates the shape.
double sensitivity(const CandidateShape& shape, const std::vector<double>& rings,
                   const TwistSE2& twist);

// Score Psi = w * M + mu * sum of per-ring edge-point separations.
double shape_score(const CandidateShape& shape, const std::vector<double>& rings,
                   const TwistSE2& twist, double mu);

// Worst case of Psi over n rotations of the shape, m illumination strips
// (rings placed only inside one strip at a time), and the discretized unit
// sphere of twists.
double robust_score(const CandidateShape& shape, const ShapeScoreConfig& config);

// Smallest RMS vertex distance over all nontrivial dihedral relabelings
// (cyclic shifts and reversals) after optimal orthogonal alignment. Zero
// for a shape with a rotational or mirror self-symmetry; such shapes carry
// a pose ambiguity.
double symmetry_margin(const std::vector<Vec2>& vertices);

// Maximizes robust_score over the five projective parameters by random
// multi-start simplex descent. Candidates violating convexity, with a
// shortest side below 10% of the width, outside the buildable aspect band,
// or within the symmetry margin are rejected. Deterministic per seed.
CandidateShape optimize_shape(const ShapeScoreConfig& config, std::uint64_t seed, int restarts);

}  // namespace calib
