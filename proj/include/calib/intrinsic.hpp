#pragma once

#include <map>
#include <string>
#include <vector>

#include "calib/geom.hpp"
#include "calib/simlidar.hpp"
#include "calib/targets.hpp"
#include "calib/vertexfit.hpp"

namespace calib {

struct SphericalPoint {
  double rho = 0.0;    // range, meters
  double theta = 0.0;  // elevation, radians
  double phi = 0.0;    // azimuth, radians (atan2(x, y): zero along +y)
};

SphericalPoint cartesian_to_spherical(const Vec3& p);  // throws at the origin
Vec3 spherical_to_cartesian(const SphericalPoint& s);

/// Additive offsets of the 3-parameter spherical model.
struct BL1Params {
  double d_rho = 0.0;
  double d_theta = 0.0;
  double d_phi = 0.0;
};

/// 6-parameter spherical model: offsets plus range scale and origin shifts.
struct BL2Params {
  double d_rho = 0.0;
  double d_theta = 0.0;
  double d_phi = 0.0;
  double s = 1.0;
  double h = 0.0;
  double v = 0.0;
};

// Corrected Cartesian point; the nominal per-ring elevation is zero, so the
// measured theta is replaced by the correction angle.
Vec3 bl1_correct(const SphericalPoint& raw, const BL1Params& a);
Vec3 bl2_correct(const SphericalPoint& raw, const BL2Params& a);
// Same result as bl2_correct via the cascaded rotation/translation
// decomposition; kept separate as an algebraic cross-check.
Vec3 bl2_correct_decomposed(const SphericalPoint& raw, const BL2Params& a);

enum class IntrinsicModel { kSim3, kBL1, kBL2 };

/// Per-ring correction: exactly one of the three models is active.
struct RingCorrection {
  IntrinsicModel model = IntrinsicModel::kSim3;
  Sim3Transform sim3;
  BL1Params bl1;
  BL2Params bl2;

  Vec3 apply(const Vec3& p) const;
};

/// Points from one ring on one target, with that target's plane.
struct TargetRingCloud {
  std::vector<Vec3> points;
  Vec3 normal = Vec3::UnitX();  // unit
  Vec3 anchor = Vec3::Zero();   // a point on the target plane
};

// Summed absolute point-to-plane residual after correction. Throws on a
// non-unit normal.
double p2p_cost(const std::vector<TargetRingCloud>& collections, const RingCorrection& corr);

struct RingCalibration {
  int ring = 0;
  RingCorrection correction;
  double residual_before = 0.0;
  double residual_after = 0.0;
  bool calibrated = false;  // false when the ring saw fewer than 2 targets
};

struct IntrinsicResult {
  std::vector<RingCalibration> rings;
  std::vector<double> vertex_change_history;  // outer-loop max vertex change
  int outer_iterations = 0;
  bool placement_warning = false;  // sim3 with placement rank < 15
  std::string warning;
};

struct IntrinsicScene {
  std::vector<Scan> target_scans;       // one scan per target
  std::vector<PolygonTarget> targets;   // matching templates
  // Known target poses (simulation mode). When filled, plane normals and
  // anchors come from these and no vertex/parameter alternation is needed;
  // when empty, they are re-estimated by the volume fit each outer pass.
  std::vector<RigidTransform3> gt_poses;
};

// Per-ring parameter estimation. Without known poses, alternates target
// vertex re-estimation (volume fit) with parameter fitting until the
// largest vertex change drops below 1e-5 m, the change stops shrinking, or
// 20 outer iterations. Requires >= 4 targets for the sim3 model's
// uniqueness; rings observed on fewer than 2 targets keep the identity
// correction.
IntrinsicResult calibrate_rings(const IntrinsicScene& scene, IntrinsicModel model,
                                const L1Params& fit_params = {});

struct PlacementMatrix {
  Eigen::Matrix<double, 18, 15> a;
  int rank = 0;
  double condition = 0.0;  // sigma_1 / sigma_15
  // The affine-relaxed system always carries one null direction (the six
  // intersection points are the pairwise meets of four lines in the ring
  // plane, whose incidences make 18 - 14 of the equations dependent), so
  // the generic rank is 14, not 15. Whether uniqueness actually fails is
  // read off that null: if its linear part extends to a similarity
  // (s R - I), a real gauge freedom exists.
  double similarity_residual = 0.0;  // 0 when the null is a similarity direction
  bool likely_unique = false;        // rank 14 and a non-similarity null
};

// Condition matrix of the affine-relaxed uniqueness system for four targets:
// rows M p_ij + t = alpha_ij (n_i x n_j) per coordinate, with the ring plane
// z = 0 (so p_ij has two free components).
PlacementMatrix placement_matrix(const std::vector<Vec3>& normals,
                                 const std::vector<Vec3>& intersection_points);

// Intersections p_ij of target plane pairs with the ring plane z = 0, in
// the pair order (12, 13, 14, 23, 24, 34). Throws when a pair is parallel
// or never meets the ring plane.
std::vector<Vec3> plane_pair_intersections(const std::vector<Vec3>& normals,
                                           const std::vector<Vec3>& anchors);

}  // namespace calib
