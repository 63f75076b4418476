#include "calib/extrinsic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "calib/optim.hpp"

namespace calib {

double shoelace_area(const Polygon2& poly) {
  if (poly.size() < 3) throw std::invalid_argument("shoelace_area: need >= 3 vertices");
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(s);
}

Polygon2 convex_hull_ccw(const std::vector<Vec2>& points) {
  if (points.size() < 3) throw std::invalid_argument("convex_hull_ccw: need >= 3 points");
  std::vector<Vec2> pts = points;
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) { return (a - b).norm() < 1e-12; }),
            pts.end());

  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  // Andrew's monotone chain; <= drops collinear points from the hull.
  const std::size_t n = pts.size();
  std::vector<Vec2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) throw std::invalid_argument("convex_hull_ccw: points are collinear");
  return hull;  // lower-then-upper chain is already counterclockwise
}

Polygon2 polygon_intersection(const Polygon2& a, const Polygon2& b) {
  Polygon2 out = a;
  const std::size_t nb = b.size();
  for (std::size_t i = 0; i < nb && !out.empty(); ++i) {
    const Vec2& p = b[i];
    const Vec2& q = b[(i + 1) % nb];
    // Interior of a CCW polygon is to the left of each edge.
    auto side = [&](const Vec2& x) {
      return (q.x() - p.x()) * (x.y() - p.y()) - (q.y() - p.y()) * (x.x() - p.x());
    };
    Polygon2 next;
    const std::size_t n = out.size();
    for (std::size_t j = 0; j < n; ++j) {
      const Vec2& cur = out[j];
      const Vec2& nxt = out[(j + 1) % n];
      const double sc = side(cur), sn = side(nxt);
      if (sc >= 0.0) next.push_back(cur);
      if ((sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0)) {
        const double t = sc / (sc - sn);
        next.push_back(cur + t * (nxt - cur));
      }
    }
    out = std::move(next);
  }
  if (out.size() < 3 || shoelace_area(out) < 1e-12) return {};
  return out;
}

double iou(const Polygon2& a, const Polygon2& b) {
  const double area_a = shoelace_area(a);
  const double area_b = shoelace_area(b);
  if (area_a <= 0.0 && area_b <= 0.0) throw std::invalid_argument("iou: both polygons degenerate");
  const Polygon2 inter = polygon_intersection(a, b);
  const double ai = inter.empty() ? 0.0 : shoelace_area(inter);
  return ai / (area_a + area_b - ai);
}

namespace {

RigidTransform3 params_to_transform(const Eigen::VectorXd& x, const RigidTransform3& ref) {
  return {so3_exp({x(0), x(1), x(2)}) * ref.rotation, ref.translation + Vec3(x(3), x(4), x(5))};
}

double pnp_cost(const std::vector<Correspondence>& cs, const CameraIntrinsics& k,
                const RigidTransform3& h) {
  double total = 0.0;
  for (const auto& [x, y] : cs) {
    PixelPoint p;
    try {
      p = project_point(x, h, k);
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::infinity();
    }
    const double du = p.u - y.u, dv = p.v - y.v;
    total += du * du + dv * dv;
  }
  return total;
}

}  // namespace

RigidTransform3 calibrate_pnp(const std::vector<Correspondence>& correspondences,
                              const CameraIntrinsics& k, const RigidTransform3& init) {
  if (correspondences.size() < 4)
    throw std::invalid_argument("calibrate_pnp: need >= 4 correspondences");

  auto f = [&](const Eigen::VectorXd& x) {
    const double c = pnp_cost(correspondences, k, params_to_transform(x, init));
    return std::isfinite(c) ? c : 1e30;
  };
  SimplexOptions opts;
  opts.cost_tol = 1e-12;
  opts.param_tol = 1e-10;
  opts.max_evals = 40000;
  Eigen::VectorXd step(6);
  step << 0.05, 0.05, 0.05, 0.05, 0.05, 0.05;
  SimplexResult r = nelder_mead(f, Eigen::VectorXd::Zero(6), step, opts);
  Eigen::VectorXd step2 = 0.01 * step;
  SimplexResult r2 = nelder_mead(f, r.x, step2, opts);
  const SimplexResult& fin = (r2.cost <= r.cost) ? r2 : r;
  if (!std::isfinite(fin.cost) || fin.cost >= 1e30)
    throw std::runtime_error("calibrate_pnp: optimizer diverged");
  return params_to_transform(fin.x, init);
}

double pnp_residual_rms(const std::vector<Correspondence>& correspondences,
                        const CameraIntrinsics& k, const RigidTransform3& extrinsic) {
  if (correspondences.empty()) throw std::invalid_argument("pnp_residual_rms: no correspondences");
  return std::sqrt(pnp_cost(correspondences, k, extrinsic) /
                   static_cast<double>(correspondences.size()));
}

namespace {

double summed_iou(const std::vector<PolygonPair>& pairs, const CameraIntrinsics& k,
                  const RigidTransform3& h) {
  double total = 0.0;
  for (const PolygonPair& pair : pairs) {
    std::vector<Vec2> proj;
    try {
      for (const Vec3& v : pair.lidar_vertices) {
        const PixelPoint p = project_point(v, h, k);
        proj.emplace_back(p.u, p.v);
      }
      total += iou(convex_hull_ccw(proj), pair.image_polygon);
    } catch (const std::exception&) {
      // Behind-camera or degenerate projection contributes no overlap.
    }
  }
  return total;
}

}  // namespace

RigidTransform3 calibrate_iou(const std::vector<PolygonPair>& pairs, const CameraIntrinsics& k,
                              const RigidTransform3& init) {
  if (pairs.empty()) throw std::invalid_argument("calibrate_iou: no targets");
  for (const PolygonPair& p : pairs)
    if (p.image_polygon.size() < 3 || p.lidar_vertices.size() < 3)
      throw std::invalid_argument("calibrate_iou: degenerate polygon pair");
  if (summed_iou(pairs, k, init) <= 0.0)
    throw std::runtime_error(
        "calibrate_iou: no overlap at the initial guess; provide a closer init");

  auto f = [&](const Eigen::VectorXd& x) {
    return -summed_iou(pairs, k, params_to_transform(x, init));
  };
  SimplexOptions opts;
  opts.cost_tol = 1e-10;
  opts.param_tol = 1e-8;
  opts.max_evals = 20000;
  Eigen::VectorXd step(6);
  step << 0.03, 0.03, 0.03, 0.03, 0.03, 0.03;
  SimplexResult r = nelder_mead(f, Eigen::VectorXd::Zero(6), step, opts);
  Eigen::VectorXd step2 = 0.01 * step;
  SimplexResult r2 = nelder_mead(f, r.x, step2, opts);
  const SimplexResult& fin = (r2.cost <= r.cost) ? r2 : r;
  return params_to_transform(fin.x, init);
}

double mean_iou(const std::vector<PolygonPair>& pairs, const CameraIntrinsics& k,
                const RigidTransform3& extrinsic) {
  if (pairs.empty()) throw std::invalid_argument("mean_iou: no targets");
  return summed_iou(pairs, k, extrinsic) / static_cast<double>(pairs.size());
}

}  // namespace calib
