#include "calib/vertexfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "calib/optim.hpp"
#include "calib/rng.hpp"

namespace calib {

double l1_scalar_cost(double lambda, double a) {
  if (std::abs(lambda) <= a) return 0.0;
  return std::min(std::abs(lambda - a), std::abs(lambda + a));
}

double cloud_cost_box(const std::vector<Vec3>& pullback, double epsilon, double d) {
  if (pullback.empty()) throw std::invalid_argument("cloud_cost_box: empty cloud");
  double total = 0.0;
  for (const Vec3& p : pullback)
    total += l1_scalar_cost(p.x(), epsilon) + l1_scalar_cost(p.y(), d / 2.0) +
             l1_scalar_cost(p.z(), d / 2.0);
  return total;
}

double cloud_cost_polygon(const std::vector<Vec3>& pullback, const PolygonTarget& target,
                          const EdgeLineSet& lines) {
  if (pullback.empty()) throw std::invalid_argument("cloud_cost_polygon: empty cloud");
  const double eps = target.epsilon();
  double total = 0.0;
  for (const Vec3& p : pullback) {
    if (std::abs(p.x()) > eps) total += std::abs(p.x()) - eps;
    for (const EdgeLine& l : lines)
      if (l.signed_value(p.y(), p.z()) < 0.0) total += l.distance(p.y(), p.z());
  }
  return total;
}

namespace {

// Rotation taking unit vector a onto unit vector b.
Rotation3 align_vectors(const Vec3& a, const Vec3& b) {
  const double c = a.dot(b);
  Vec3 axis = a.cross(b);
  const double s = axis.norm();
  if (s < 1e-12) {
    if (c > 0.0) return Rotation3::identity();
    // Opposite directions: rotate by pi about any perpendicular axis.
    Vec3 perp = std::abs(a.x()) < 0.9 ? a.cross(Vec3::UnitX()) : a.cross(Vec3::UnitY());
    return so3_exp(M_PI * perp.normalized());
  }
  axis /= s;
  return so3_exp(std::atan2(s, c) * axis);
}

Vec3 cloud_centroid(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

// Pullback that maps the cloud centroid to the template origin with the
// viewing ray aligned to the template normal.
RigidTransform3 centroid_init(const Vec3& centroid, const Rotation3& r_extra) {
  const Rotation3 base = align_vectors(centroid.normalized(), Vec3::UnitX());
  const Rotation3 r = r_extra * base;
  return {r, -(r * centroid)};
}

RigidTransform3 params_to_transform(const Eigen::VectorXd& x, const RigidTransform3& ref) {
  const Rotation3 r = so3_exp({x(0), x(1), x(2)}) * ref.rotation;
  return {r, ref.translation + Vec3(x(3), x(4), x(5))};
}

}  // namespace

FitResult fit_target_l1(const Scan& cloud, const PolygonTarget& target_in, const L1Params& params,
                        std::optional<RigidTransform3> init) {
  if (cloud.points.size() < 8)
    throw std::invalid_argument("fit_target_l1: fewer than 8 points on target");
  const PolygonTarget target =
      params.epsilon > 0.0 ? PolygonTarget(target_in.vertices(), params.epsilon) : target_in;

  std::vector<Vec3> pts;
  pts.reserve(cloud.points.size());
  for (const LidarPoint& p : cloud.points) pts.push_back(p.p);
  const Vec3 centroid = cloud_centroid(pts);
  const EdgeLineSet lines = edge_lines(target);

  std::vector<Vec3> work(pts.size());
  auto cost_of = [&](const RigidTransform3& h) {
    for (std::size_t i = 0; i < pts.size(); ++i) work[i] = h * pts[i];
    return cloud_cost_polygon(work, target, lines);
  };

  Rng rng(params.seed);
  FitResult best;
  best.cost = std::numeric_limits<double>::infinity();
  SimplexOptions opts;
  opts.cost_tol = params.cost_tol;
  opts.param_tol = params.param_tol;

  const int restarts = std::max(1, params.restarts);
  for (int k = 0; k < restarts; ++k) {
    RigidTransform3 ref;
    if (k == 0 && init) {
      ref = *init;
    } else if (init) {
      const Vec3 axis = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()).normalized();
      ref.rotation = so3_exp(rng.uniform(0.0, 30.0 * kDegToRad) * axis) * init->rotation;
      ref.translation = init->translation;
    } else if (k == 0) {
      ref = centroid_init(centroid, Rotation3::identity());
    } else {
      const Vec3 axis = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()).normalized();
      const Rotation3 extra = so3_exp(rng.uniform(0.0, 30.0 * kDegToRad) * axis);
      ref = centroid_init(centroid, extra);
    }

    auto f = [&](const Eigen::VectorXd& x) {
      const double c = cost_of(params_to_transform(x, ref));
      return std::isfinite(c) ? c : 1e30;
    };
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(6);
    Eigen::VectorXd step(6);
    step << 0.1, 0.1, 0.1, 0.05, 0.05, 0.05;
    SimplexResult r = nelder_mead(f, x0, step, opts);
    // A second, tighter pass from the solution sharpens non-smooth minima.
    Eigen::VectorXd step2 = 0.02 * step;
    SimplexResult r2 = nelder_mead(f, r.x, step2, opts);
    const SimplexResult& fin = (r2.cost <= r.cost) ? r2 : r;

    if (!std::isfinite(fin.cost))
      throw std::runtime_error("fit_target_l1: non-finite cost");
    if (fin.cost < best.cost) {
      best.transform = params_to_transform(fin.x, ref);
      best.cost = fin.cost;
      best.iterations = r.iterations + r2.iterations;
      best.restarts_used = k + 1;
    }
  }

  const RigidTransform3 inv = best.transform.inverse();
  for (const Vec3& v : target.vertices3()) best.vertices.push_back(inv * v);
  best.restarts_used = restarts;
  return best;
}

std::vector<LidarPoint> extract_edge_points(const Scan& scan) {
  std::map<int, std::vector<const LidarPoint*>> rings;
  for (const LidarPoint& p : scan.points) rings[p.ring].push_back(&p);

  std::vector<LidarPoint> edges;
  for (auto& [ring, pts] : rings) {
    if (pts.size() < 2) continue;
    // Angular extremes about the ring's mean azimuth (robust to point order).
    Vec2 mean = Vec2::Zero();
    for (const LidarPoint* p : pts) mean += Vec2(p->p.x(), p->p.y()).normalized();
    const double mid = std::atan2(mean.x(), mean.y());
    auto offset = [&](const LidarPoint* p) {
      double a = std::atan2(p->p.x(), p->p.y()) - mid;
      while (a > M_PI) a -= 2.0 * M_PI;
      while (a < -M_PI) a += 2.0 * M_PI;
      return a;
    };
    const LidarPoint* lo = pts[0];
    const LidarPoint* hi = pts[0];
    for (const LidarPoint* p : pts) {
      if (offset(p) < offset(lo)) lo = p;
      if (offset(p) > offset(hi)) hi = p;
    }
    edges.push_back(*lo);
    edges.push_back(*hi);
  }
  return edges;
}

namespace {

struct TemplateLine {
  Vec3 origin;
  Vec3 dir;     // unit
  double length = 0.0;
};

// Distance to the physical edge: the segment between adjacent vertices.
// Beyond the endpoints the infinite-line distance would let the template
// slide along an edge extension indefinitely.
double line_dist_sq(const Vec3& p, const TemplateLine& l) {
  const Vec3 d = p - l.origin;
  const double s = std::clamp(d.dot(l.dir), 0.0, l.length);
  return (d - s * l.dir).squaredNorm();
}

double nearest_line_cost(const std::vector<Vec3>& pts, const RigidTransform3& h,
                         const std::vector<TemplateLine>& lines) {
  double total = 0.0;
  for (const Vec3& p : pts) {
    const Vec3 q = h * p;
    double best = std::numeric_limits<double>::infinity();
    for (const TemplateLine& l : lines) best = std::min(best, line_dist_sq(q, l));
    total += best;
  }
  return total;
}

double step_norm(const RigidTransform3& a, const RigidTransform3& b) {
  const RigidTransform3 delta = a.inverse().compose(b);
  return std::sqrt(so3_log(delta.rotation).squaredNorm() + delta.translation.squaredNorm());
}

}  // namespace

FitResult fit_template_p2l(const std::vector<LidarPoint>& edge_points, const PolygonTarget& target,
                           std::optional<RigidTransform3> init) {
  if (edge_points.size() < 4)
    throw std::invalid_argument("fit_template_p2l: fewer than 4 edge points");
  {
    std::vector<int> ring_ids;
    for (const LidarPoint& p : edge_points) ring_ids.push_back(p.ring);
    std::sort(ring_ids.begin(), ring_ids.end());
    if (std::unique(ring_ids.begin(), ring_ids.end()) - ring_ids.begin() < 2)
      throw std::invalid_argument("fit_template_p2l: edge points span fewer than 2 rings");
  }

  std::vector<Vec3> pts;
  for (const LidarPoint& p : edge_points) pts.push_back(p.p);
  const Vec3 centroid = cloud_centroid(pts);
  {
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3& p : pts) cov += (p - centroid) * (p - centroid).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    if (eig.eigenvalues()(1) < 1e-12 * std::max(1.0, eig.eigenvalues()(2)))
      throw std::invalid_argument("fit_template_p2l: edge points are collinear");
  }

  const auto& tv = target.vertices();
  std::vector<TemplateLine> lines;
  for (std::size_t i = 0; i < tv.size(); ++i) {
    const Vec2& a = tv[i];
    const Vec2& b = tv[(i + 1) % tv.size()];
    TemplateLine l;
    l.origin = {0.0, a.x(), a.y()};
    l.dir = Vec3(0.0, b.x() - a.x(), b.y() - a.y()).normalized();
    l.length = (b - a).norm();
    lines.push_back(l);
  }

  SimplexOptions opts;
  opts.cost_tol = 1e-12;
  opts.param_tol = 1e-8;
  opts.max_evals = 4000;

  FitResult best;
  best.cost = std::numeric_limits<double>::infinity();
  const int n_starts = 8;
  for (int k = 0; k < n_starts; ++k) {
    const Rotation3 spin = so3_exp({k * 2.0 * M_PI / n_starts, 0.0, 0.0});
    RigidTransform3 h;
    if (init && k == 0) {
      h = *init;
    } else if (init) {
      h = RigidTransform3{spin, Vec3::Zero()}.compose(*init);
    } else {
      const Rotation3 base = align_vectors(centroid.normalized(), Vec3::UnitX());
      const Rotation3 r = spin * base;
      h = {r, -(r * centroid)};
    }

    int iters = 0;
    for (; iters < 100; ++iters) {
      // Fix the association at the current pose, then descend.
      std::vector<int> assoc(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec3 q = h * pts[i];
        int arg = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < lines.size(); ++j) {
          const double d = line_dist_sq(q, lines[j]);
          if (d < bd) {
            bd = d;
            arg = static_cast<int>(j);
          }
        }
        assoc[i] = arg;
      }
      auto f = [&](const Eigen::VectorXd& x) {
        const RigidTransform3 cand = params_to_transform(x, h);
        double total = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
          total += line_dist_sq(cand * pts[i], lines[assoc[i]]);
        return total;
      };
      Eigen::VectorXd step(6);
      step << 0.05, 0.05, 0.05, 0.03, 0.03, 0.03;
      SimplexResult r = nelder_mead(f, Eigen::VectorXd::Zero(6), step, opts);
      const RigidTransform3 next = params_to_transform(r.x, h);
      const double moved = step_norm(h, next);
      h = next;
      if (moved < 1e-5) break;
    }

    const double cost = nearest_line_cost(pts, h, lines);
    if (cost < best.cost) {
      best.transform = h;
      best.cost = cost;
      best.iterations = iters;
      best.restarts_used = k + 1;
    }
  }

  const RigidTransform3 inv = best.transform.inverse();
  for (const Vec3& v : target.vertices3()) best.vertices.push_back(inv * v);
  best.restarts_used = n_starts;
  return best;
}

}  // namespace calib
