#include "calib/shapeopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "calib/optim.hpp"
#include "calib/rng.hpp"

namespace calib {

namespace {

const std::vector<Vec2> kNominalSquare = {{0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}, {-0.5, -0.5}};

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

void normalize_shape(CandidateShape* s) {
  Vec2 c = Vec2::Zero();
  for (const Vec2& v : s->vertices) c += v;
  c /= static_cast<double>(s->vertices.size());
  for (Vec2& v : s->vertices) v -= c;

  double s_area = 0.0;
  for (std::size_t i = 0; i < s->vertices.size(); ++i)
    s_area += cross2(s->vertices[i], s->vertices[(i + 1) % s->vertices.size()]);
  if (s_area < 0.0) std::reverse(s->vertices.begin(), s->vertices.end());

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Vec2& v : s->vertices) {
    xmin = std::min(xmin, v.x());
    xmax = std::max(xmax, v.x());
    ymin = std::min(ymin, v.y());
    ymax = std::max(ymax, v.y());
  }
  const double w = xmax - xmin;
  if (w < 1e-12) throw std::invalid_argument("shape: zero width");
  for (Vec2& v : s->vertices) v /= w;
  s->width = 1.0;
  s->height = (ymax - ymin) / w;
}

}  // namespace

CandidateShape shape_from_params(double k, double lambda, const Vec2& v, double upsilon) {
  const ProjectiveMap2 p = projective_from_params(k, lambda, v, upsilon);
  for (const Vec2& q : kNominalSquare)
    if (v.x() * q.x() + v.y() * q.y() + upsilon <= 0.0)
      throw std::invalid_argument("shape_from_params: convexity condition violated");

  CandidateShape s;
  s.k = k;
  s.lambda = lambda;
  s.v = v;
  s.upsilon = upsilon;
  s.vertices = projective_apply(p, kNominalSquare);
  normalize_shape(&s);
  return s;
}

CandidateShape shape_from_vertices(std::vector<Vec2> vertices) {
  if (vertices.size() != 4) throw std::invalid_argument("shape_from_vertices: need 4 vertices");
  CandidateShape s;
  s.vertices = std::move(vertices);
  normalize_shape(&s);
  return s;
}

std::vector<RingEdgePoint2> ring_edge_points(const std::vector<Vec2>& vertices,
                                             const std::vector<double>& ring_heights) {
  std::vector<RingEdgePoint2> out;
  const std::size_t m = vertices.size();
  for (const double y_r : ring_heights) {
    for (std::size_t i = 0; i < m; ++i) {
      const Vec2& a = vertices[i];
      const Vec2& b = vertices[(i + 1) % m];
      if (std::abs(b.y() - a.y()) < 1e-12) continue;  // horizontal edge
      if ((y_r - a.y()) * (y_r - b.y()) > 0.0) continue;
      const double x = a.x() + (b.x() - a.x()) / (b.y() - a.y()) * (y_r - a.y());
      out.push_back({x, y_r, static_cast<int>(i)});
    }
  }
  return out;
}

// Differentiating x(kappa) = x_i(kappa) + s(kappa) (y_r - y_i(kappa)) of the
// moving edge at the fixed ring gives a -slope coefficient on the vertical
// twist component (raising the shape slides the crossing down-slope).
double edge_gradient(const Vec2& p_i, const Vec2& p_next, double y_r, const TwistSE2& twist) {
  const double xi = p_i.x(), yi = p_i.y();
  const double xn = p_next.x(), yn = p_next.y();
  const double dy = yi - yn;
  if (std::abs(dy) < 1e-12) throw std::invalid_argument("edge_gradient: horizontal edge");
  const double rot_term = (xi - xn) * (xi * yn - yi * xn + xn * y_r - xi * y_r) / (dy * dy) - y_r;
  const double slope = (xn - xi) / (yn - yi);
  return twist.omega * rot_term + twist.u - slope * twist.v;
}

double sensitivity(const CandidateShape& shape, const std::vector<double>& rings,
                   const TwistSE2& twist) {
  const auto pts = ring_edge_points(shape.vertices, rings);
  if (pts.empty()) return 0.0;
  double sum = 0.0;
  const std::size_t m = shape.vertices.size();
  for (const RingEdgePoint2& ep : pts) {
    const double g = edge_gradient(shape.vertices[ep.edge], shape.vertices[(ep.edge + 1) % m],
                                   ep.y, twist);
    sum += g * g;
  }
  return sum / shape.height;
}

namespace {

double separation_term(const std::vector<RingEdgePoint2>& pts) {
  // Per-ring distance between the extreme edge points.
  double total = 0.0;
  std::size_t i = 0;
  while (i < pts.size()) {
    std::size_t j = i;
    double lo = pts[i].x, hi = pts[i].x;
    while (j < pts.size() && pts[j].y == pts[i].y) {
      lo = std::min(lo, pts[j].x);
      hi = std::max(hi, pts[j].x);
      ++j;
    }
    total += hi - lo;
    i = j;
  }
  return total;
}

}  // namespace

double shape_score(const CandidateShape& shape, const std::vector<double>& rings,
                   const TwistSE2& twist, double mu) {
  return shape.width * sensitivity(shape, rings, twist) +
         mu * separation_term(ring_edge_points(shape.vertices, rings));
}

double robust_score(const CandidateShape& shape, const ShapeScoreConfig& config) {
  if (config.n_rotations < 1 || config.m_strips < 1 || config.rings_per_strip < 1 ||
      config.sphere_grid < 2)
    throw std::invalid_argument("robust_score: bad config");

  double worst = std::numeric_limits<double>::infinity();
  const std::size_t m = shape.vertices.size();
  for (int i = 0; i < config.n_rotations; ++i) {
    const double ang = 2.0 * M_PI * i / config.n_rotations;
    const double ca = std::cos(ang), sa = std::sin(ang);
    std::vector<Vec2> rot(m);
    for (std::size_t t = 0; t < m; ++t)
      rot[t] = Vec2(ca * shape.vertices[t].x() - sa * shape.vertices[t].y(),
                    sa * shape.vertices[t].x() + ca * shape.vertices[t].y());
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Vec2& v : rot) {
      xmin = std::min(xmin, v.x());
      xmax = std::max(xmax, v.x());
      ymin = std::min(ymin, v.y());
      ymax = std::max(ymax, v.y());
    }
    const double w = xmax - xmin, h = ymax - ymin;
    const double strip_h = (ymax - ymin) / config.m_strips;

    for (int j = 0; j < config.m_strips; ++j) {
      std::vector<double> rings(config.rings_per_strip);
      for (int t = 0; t < config.rings_per_strip; ++t)
        rings[t] = ymin + strip_h * (j + (t + 1.0) / (config.rings_per_strip + 1.0));

      const auto pts = ring_edge_points(rot, rings);
      if (pts.empty()) {
        worst = std::min(worst, 0.0);
        continue;
      }
      // Psi is a quadratic form in the twist plus a constant, so the grid
      // sweep only needs the 3x3 Gram matrix of per-point gradients.
      Mat3 q = Mat3::Zero();
      for (const RingEdgePoint2& ep : pts) {
        const Vec2& a = rot[ep.edge];
        const Vec2& b = rot[(ep.edge + 1) % m];
        const double dy = a.y() - b.y();
        const double rot_term =
            (a.x() - b.x()) * (a.x() * b.y() - a.y() * b.x() + b.x() * ep.y - a.x() * ep.y) /
                (dy * dy) -
            ep.y;
        const double slope = (b.x() - a.x()) / (b.y() - a.y());
        const Vec3 c(rot_term, 1.0, -slope);
        q += c * c.transpose();
      }
      const double d_term = config.mu * separation_term(pts);
      const double wh = w / h;

      for (int ia = 0; ia < config.sphere_grid; ++ia) {
        const double polar = M_PI * (ia + 0.5) / config.sphere_grid;
        const double cw = std::cos(polar), sw = std::sin(polar);
        for (int ib = 0; ib < config.sphere_grid; ++ib) {
          const double az = 2.0 * M_PI * ib / config.sphere_grid;
          const Vec3 t(cw, sw * std::cos(az), sw * std::sin(az));
          const double psi = wh * t.dot(q * t) + d_term;
          worst = std::min(worst, psi);
        }
      }
    }
  }
  return worst;
}

double symmetry_margin(const std::vector<Vec2>& vertices) {
  const std::size_t n = vertices.size();
  Vec2 c = Vec2::Zero();
  for (const Vec2& v : vertices) c += v;
  c /= static_cast<double>(n);
  std::vector<Vec2> base;
  for (const Vec2& v : vertices) base.push_back(v - c);

  double margin = std::numeric_limits<double>::infinity();
  for (int rev = 0; rev < 2; ++rev) {
    for (std::size_t s = 0; s < n; ++s) {
      if (rev == 0 && s == 0) continue;  // identity
      std::vector<Vec2> perm(n);
      for (std::size_t i = 0; i < n; ++i)
        perm[i] = base[rev ? (s + n - i % n) % n : (i + s) % n];
      // Best orthogonal alignment (rotation or reflection) of perm onto base.
      Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
      for (std::size_t i = 0; i < n; ++i) m += base[i] * perm[i].transpose();
      Eigen::JacobiSVD<Eigen::Matrix2d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Eigen::Matrix2d q = svd.matrixU() * svd.matrixV().transpose();
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += (base[i] - q * perm[i]).squaredNorm();
      margin = std::min(margin, std::sqrt(sum / static_cast<double>(n)));
    }
  }
  return margin;
}

CandidateShape optimize_shape(const ShapeScoreConfig& config, std::uint64_t seed, int restarts) {
  if (restarts < 1) throw std::invalid_argument("optimize_shape: restarts < 1");
  Rng rng(seed);

  auto feasible_score = [&](const Eigen::VectorXd& x) -> double {
    CandidateShape s;
    try {
      s = shape_from_params(x(0), x(1), {x(2), x(3)}, x(4));
    } catch (const std::exception&) {
      return -std::numeric_limits<double>::infinity();
    }
    double min_side = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.vertices.size(); ++i)
      min_side = std::min(min_side,
                          (s.vertices[(i + 1) % s.vertices.size()] - s.vertices[i]).norm());
    if (min_side < 0.1 * s.width) return -std::numeric_limits<double>::infinity();
    // Buildable-target constraint: without an aspect cap the separation
    // term drives the optimum toward arbitrarily tall slivers.
    if (s.height > 1.5 * s.width || s.height < 0.4 * s.width)
      return -std::numeric_limits<double>::infinity();
    // A self-symmetric target has an ambiguous pose. Steep penalty rather
    // than rejection so a symmetric start (the nominal square) can escape.
    const double margin = symmetry_margin(s.vertices) / (0.02 * s.width);
    const double penalty = margin >= 1.0 ? 0.0 : 2.0 * (1.0 - margin);
    return robust_score(s, config) - penalty;
  };

  Eigen::VectorXd best_x;
  double best = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd x0(5);
    if (r == 0) {
      x0 << 0.0, 1.0, 0.0, 0.0, 1.0;
    } else {
      x0 << rng.uniform(-0.8, 0.8), rng.uniform(0.6, 1.7), rng.uniform(-0.35, 0.35),
          rng.uniform(-0.35, 0.35), rng.uniform(0.7, 1.4);
      if (!std::isfinite(feasible_score(x0))) continue;
    }
    auto f = [&](const Eigen::VectorXd& x) {
      const double s = feasible_score(x);
      return std::isfinite(s) ? -s : 1e9;
    };
    SimplexOptions opts;
    opts.cost_tol = 1e-7;
    opts.param_tol = 1e-5;
    opts.max_evals = 1200;
    Eigen::VectorXd step(5);
    step << 0.15, 0.15, 0.08, 0.08, 0.1;
    const SimplexResult res = nelder_mead(f, x0, step, opts);
    if (-res.cost > best) {
      best = -res.cost;
      best_x = res.x;
    }
  }
  if (!std::isfinite(best)) throw std::runtime_error("optimize_shape: all restarts infeasible");
  return shape_from_params(best_x(0), best_x(1), {best_x(2), best_x(3)}, best_x(4));
}

}  // namespace calib
