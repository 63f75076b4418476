#include "calib/intrinsic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "calib/optim.hpp"

namespace calib {

SphericalPoint cartesian_to_spherical(const Vec3& p) {
  const double rho = p.norm();
  if (rho < 1e-300) throw std::invalid_argument("cartesian_to_spherical: origin");
  return {rho, std::asin(p.z() / rho), std::atan2(p.x(), p.y())};
}

Vec3 spherical_to_cartesian(const SphericalPoint& s) {
  return {s.rho * std::cos(s.theta) * std::sin(s.phi),
          s.rho * std::cos(s.theta) * std::cos(s.phi), s.rho * std::sin(s.theta)};
}

Vec3 bl1_correct(const SphericalPoint& raw, const BL1Params& a) {
  const double r = raw.rho + a.d_rho;
  const double az = raw.phi - a.d_phi;
  return {r * std::cos(a.d_theta) * std::sin(az), r * std::cos(a.d_theta) * std::cos(az),
          r * std::sin(a.d_theta)};
}

Vec3 bl2_correct(const SphericalPoint& raw, const BL2Params& a) {
  const double r = a.s * raw.rho + a.d_rho;
  const double az = raw.phi - a.d_phi;
  return {r * std::cos(a.d_theta) * std::sin(az) - a.h * std::cos(az),
          r * std::cos(a.d_theta) * std::cos(az) + a.h * std::sin(az),
          r * std::sin(a.d_theta) + a.v};
}

Vec3 bl2_correct_decomposed(const SphericalPoint& raw, const BL2Params& a) {
  const double az = raw.phi - a.d_phi;
  Mat3 r1;
  r1 << std::sin(az), -std::cos(az), 0, std::cos(az), std::sin(az), 0, 0, 0, 1;
  Mat3 r2;
  r2 << std::cos(a.d_theta), 0, -std::sin(a.d_theta), 0, 1, 0, std::sin(a.d_theta), 0,
      std::cos(a.d_theta);
  const Vec3 t1(a.s * raw.rho + a.d_rho, 0.0, 0.0);
  const Vec3 t2(0.0, a.h, a.v);
  return r1 * (r2 * t1 + t2);
}

Vec3 RingCorrection::apply(const Vec3& p) const {
  switch (model) {
    case IntrinsicModel::kSim3:
      return sim3 * p;
    case IntrinsicModel::kBL1:
      return bl1_correct(cartesian_to_spherical(p), bl1);
    case IntrinsicModel::kBL2:
      return bl2_correct(cartesian_to_spherical(p), bl2);
  }
  return p;
}

double p2p_cost(const std::vector<TargetRingCloud>& collections, const RingCorrection& corr) {
  double total = 0.0;
  for (const TargetRingCloud& c : collections) {
    if (std::abs(c.normal.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("p2p_cost: non-unit normal");
    for (const Vec3& p : c.points) total += std::abs(c.normal.dot(corr.apply(p) - c.anchor));
  }
  return total;
}

namespace {

RingCorrection params_to_correction(IntrinsicModel model, const Eigen::VectorXd& x) {
  RingCorrection c;
  c.model = model;
  switch (model) {
    case IntrinsicModel::kSim3:
      c.sim3.rotation = so3_exp({x(0), x(1), x(2)});
      c.sim3.translation = {x(3), x(4), x(5)};
      c.sim3.scale = std::exp(x(6));
      break;
    case IntrinsicModel::kBL1:
      c.bl1 = {x(0), x(1), x(2)};
      break;
    case IntrinsicModel::kBL2:
      c.bl2 = {x(0), x(1), x(2), std::exp(x(3)), x(4), x(5)};
      break;
  }
  return c;
}

int model_dim(IntrinsicModel model) {
  switch (model) {
    case IntrinsicModel::kSim3:
      return 7;
    case IntrinsicModel::kBL1:
      return 3;
    case IntrinsicModel::kBL2:
      return 6;
  }
  return 0;
}

RingCorrection fit_ring(const std::vector<TargetRingCloud>& collections, IntrinsicModel model) {
  const int dim = model_dim(model);
  auto f = [&](const Eigen::VectorXd& x) {
    return p2p_cost(collections, params_to_correction(model, x));
  };
  SimplexOptions opts;
  opts.cost_tol = 1e-10;
  opts.param_tol = 1e-8;
  opts.max_evals = 8000;
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd step = Eigen::VectorXd::Constant(dim, 0.01);
  SimplexResult r = nelder_mead(f, x0, step, opts);
  SimplexResult r2 = nelder_mead(f, r.x, Eigen::VectorXd::Constant(dim, 0.002), opts);
  return params_to_correction(model, r2.cost <= r.cost ? r2.x : r.x);
}

}  // namespace

IntrinsicResult calibrate_rings(const IntrinsicScene& scene, IntrinsicModel model,
                                const L1Params& fit_params) {
  const std::size_t n_targets = scene.targets.size();
  if (n_targets != scene.target_scans.size())
    throw std::invalid_argument("calibrate_rings: scans/targets mismatch");
  if (n_targets < 2) throw std::invalid_argument("calibrate_rings: need >= 2 targets");
  const bool known_poses = !scene.gt_poses.empty();
  if (known_poses && scene.gt_poses.size() != n_targets)
    throw std::invalid_argument("calibrate_rings: gt_poses/targets mismatch");

  std::set<int> ring_ids;
  for (const Scan& s : scene.target_scans)
    for (const LidarPoint& p : s.points) ring_ids.insert(p.ring);

  IntrinsicResult result;
  std::map<int, RingCorrection> corrections;
  for (int r : ring_ids) {
    RingCorrection c;
    c.model = model;
    corrections[r] = c;
  }

  // Plane estimates the ring corrections are fitted (and reported) against.
  std::vector<Vec3> normals(n_targets), anchors(n_targets);

  auto collections_for = [&](int ring) {
    std::vector<TargetRingCloud> out;
    for (std::size_t t = 0; t < n_targets; ++t) {
      TargetRingCloud c;
      for (const LidarPoint& p : scene.target_scans[t].points)
        if (p.ring == ring) c.points.push_back(p.p);
      if (c.points.empty()) continue;
      c.normal = normals[t];
      c.anchor = anchors[t];
      out.push_back(std::move(c));
    }
    return out;
  };

  auto fit_all_rings = [&]() {
    for (int ring : ring_ids) {
      const auto collections = collections_for(ring);
      if (collections.size() < 2) continue;  // under-constrained ring
      corrections[ring] = fit_ring(collections, model);
    }
  };

  if (known_poses) {
    // Simulation path: plane data is exact, one parameter pass suffices.
    for (std::size_t t = 0; t < n_targets; ++t) {
      normals[t] = (scene.gt_poses[t].rotation * Vec3::UnitX()).normalized();
      anchors[t] = scene.gt_poses[t].translation;
    }
    result.outer_iterations = 1;
    fit_all_rings();
  } else {
    std::vector<std::vector<Vec3>> prev_vertices(n_targets);
    double prev_change = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < 20; ++outer) {
      result.outer_iterations = outer + 1;

      // Step 1: re-estimate the target vertices on the corrected clouds;
      // the fitted pose supplies each plane normal and anchor.
      double max_change = 0.0;
      for (std::size_t t = 0; t < n_targets; ++t) {
        Scan corrected = scene.target_scans[t];
        for (LidarPoint& p : corrected.points) p.p = corrections[p.ring].apply(p.p);
        const FitResult fit = fit_target_l1(corrected, scene.targets[t], fit_params);
        const RigidTransform3 pose = fit.transform.inverse();
        normals[t] = (pose.rotation * Vec3::UnitX()).normalized();
        anchors[t] = pose.translation;
        if (!prev_vertices[t].empty())
          for (std::size_t i = 0; i < fit.vertices.size(); ++i)
            max_change = std::max(max_change, (fit.vertices[i] - prev_vertices[t][i]).norm());
        else
          max_change = std::numeric_limits<double>::infinity();
        prev_vertices[t] = fit.vertices;
      }
      if (outer > 0) result.vertex_change_history.push_back(max_change);
      if (outer > 0 && max_change < 1e-5) break;
      // A non-decreasing change means the alternation stopped contracting.
      if (outer > 1 && max_change >= prev_change) break;
      prev_change = max_change;

      // Step 2: per-ring parameter estimation against the current planes.
      fit_all_rings();
    }
  }

  for (int ring : ring_ids) {
    RingCalibration rc;
    rc.ring = ring;
    rc.correction = corrections[ring];
    const auto collections = collections_for(ring);
    // Raw-data residual: a default correction is the true identity map
    // (the zero-parameter spherical models are not, since they rebuild
    // the point at the corrected elevation).
    rc.residual_before = p2p_cost(collections, RingCorrection{});
    rc.residual_after = p2p_cost(collections, rc.correction);
    rc.calibrated = collections.size() >= 2;
    result.rings.push_back(rc);
  }

  if (model == IntrinsicModel::kSim3) {
    if (n_targets < 4) {
      result.placement_warning = true;
      result.warning = "sim3 model with fewer than 4 targets: solution may be non-unique";
    } else {
      try {
        std::vector<Vec3> n4(normals.begin(), normals.begin() + 4);
        std::vector<Vec3> a4(anchors.begin(), anchors.begin() + 4);
        const PlacementMatrix pm = placement_matrix(n4, plane_pair_intersections(n4, a4));
        if (!pm.likely_unique) {
          result.placement_warning = true;
          result.warning = "placement matrix rank " + std::to_string(pm.rank) +
                           " with similarity-compatible null: solution may be non-unique";
        }
      } catch (const std::exception& e) {
        result.placement_warning = true;
        result.warning = std::string("placement check failed: ") + e.what();
      }
    }
  }
  return result;
}

std::vector<Vec3> plane_pair_intersections(const std::vector<Vec3>& normals,
                                           const std::vector<Vec3>& anchors) {
  if (normals.size() != 4 || anchors.size() != 4)
    throw std::invalid_argument("plane_pair_intersections: need 4 targets");
  std::vector<Vec3> out;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      Mat3 a;
      a.row(0) = normals[i].transpose();
      a.row(1) = normals[j].transpose();
      a.row(2) = Vec3::UnitZ().transpose();
      const Vec3 b(normals[i].dot(anchors[i]), normals[j].dot(anchors[j]), 0.0);
      if (std::abs(a.determinant()) < 1e-12)
        throw std::runtime_error("plane_pair_intersections: degenerate plane pair");
      out.push_back(a.fullPivLu().solve(b));
    }
  }
  return out;
}

PlacementMatrix placement_matrix(const std::vector<Vec3>& normals,
                                 const std::vector<Vec3>& intersection_points) {
  if (normals.size() != 4) throw std::invalid_argument("placement_matrix: need 4 normals");
  if (intersection_points.size() != 6)
    throw std::invalid_argument("placement_matrix: need 6 intersection points");

  std::vector<Vec3> v;  // cross products in pair order 12,13,14,23,24,34
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) v.push_back(normals[i].cross(normals[j]));

  PlacementMatrix pm;
  pm.a.setZero();
  for (int k = 0; k < 3; ++k) {      // coordinate of the row equation
    for (int r = 0; r < 6; ++r) {    // plane pair
      const int row = 6 * k + r;
      pm.a(row, 2 * k + 0) = intersection_points[r].x();
      pm.a(row, 2 * k + 1) = intersection_points[r].y();
      pm.a(row, 6 + k) = 1.0;
      pm.a(row, 9 + r) = -v[r](k);
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(pm.a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  pm.rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-9 * sv(0)) ++pm.rank;
  pm.condition = sv(0) / sv(sv.size() - 1);

  // Null-direction analysis: the linear part [m1 m2] of a similarity
  // direction s R - I restricted to the ring plane satisfies
  // m1 = (ds, w3, -w2), m2 = (-w3, ds, w1), so ds and w3 must agree
  // between the two columns. The residual measures that agreement.
  const Eigen::VectorXd null_dir = svd.matrixV().col(14);
  const double m11 = null_dir(0), m12 = null_dir(1);
  const double m21 = null_dir(2), m22 = null_dir(3);
  const double scale = null_dir.head(6).norm();
  if (scale > 1e-12) {
    pm.similarity_residual =
        std::hypot(m11 - m22, m12 + m21) / std::max(scale, 1e-12);
  }
  pm.likely_unique = pm.rank == 14 && pm.similarity_residual > 1e-6;
  return pm;
}

}  // namespace calib
