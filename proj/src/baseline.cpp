#include "calib/baseline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

#include "calib/rng.hpp"

namespace calib {

namespace {

Vec3 centroid_of(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

// In-plane basis: h horizontal (perpendicular to world z and the normal),
// v completes the right-handed frame.
void plane_basis(const Vec3& normal, Vec3* h, Vec3* v) {
  Vec3 hz = Vec3::UnitZ().cross(normal);
  if (hz.norm() < 1e-9) hz = Vec3::UnitX().cross(normal);
  *h = hz.normalized();
  *v = normal.cross(*h).normalized();
}

Line2 tls_line(const std::vector<Vec2>& pts) {
  Vec2 c = Vec2::Zero();
  for (const Vec2& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec2& p : pts) cov += (p - c) * (p - c).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Vec2 n = eig.eigenvectors().col(0);  // smallest eigenvalue: line normal
  return {n.x(), n.y(), -n.dot(c)};
}

}  // namespace

std::pair<Vec3, Vec3> fit_plane_svd(const std::vector<Vec3>& cloud) {
  if (cloud.size() < 3) throw std::invalid_argument("fit_plane_svd: need >= 3 points");
  const Vec3 c = centroid_of(cloud);
  Eigen::MatrixXd centered(cloud.size(), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) centered.row(i) = (cloud[i] - c).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(1) < 1e-9 * std::max(1.0, sv(0)))
    throw std::invalid_argument("fit_plane_svd: rank-deficient cloud");
  Vec3 normal = svd.matrixV().col(2);
  if (normal.dot(c) > 0.0) normal = -normal;  // face the sensor
  return {normal, c};
}

std::vector<RingEdgePoint> extract_ring_edges(const Scan& cloud) {
  std::vector<Vec3> pts;
  for (const LidarPoint& p : cloud.points) pts.push_back(p.p);
  if (pts.size() < 3) return {};
  const auto [normal, c] = fit_plane_svd(pts);
  Vec3 h, v;
  plane_basis(normal, &h, &v);

  std::map<int, std::pair<const LidarPoint*, const LidarPoint*>> extremes;
  std::map<int, int> counts;
  for (const LidarPoint& p : cloud.points) {
    const double x = h.dot(p.p - c);
    auto it = extremes.find(p.ring);
    if (it == extremes.end()) {
      extremes[p.ring] = {&p, &p};
      counts[p.ring] = 1;
      continue;
    }
    ++counts[p.ring];
    if (x < h.dot(it->second.first->p - c)) it->second.first = &p;
    if (x > h.dot(it->second.second->p - c)) it->second.second = &p;
  }

  std::vector<RingEdgePoint> out;
  for (const auto& [ring, pair] : extremes) {
    if (counts[ring] < 2) continue;
    out.push_back({pair.first->p, ring, EdgeSide::kLeft});
    out.push_back({pair.second->p, ring, EdgeSide::kRight});
  }
  return out;
}

std::pair<Line2, std::vector<int>> ransac_line(const std::vector<Vec2>& points,
                                               const RansacParams& params) {
  if (points.size() < 2) throw std::invalid_argument("ransac_line: need >= 2 points");
  if (params.iterations < 1 || params.inlier_threshold <= 0.0)
    throw std::invalid_argument("ransac_line: bad parameters");

  bool spread = false;
  for (const Vec2& p : points)
    if ((p - points[0]).norm() > 1e-12) spread = true;
  if (!spread) throw std::invalid_argument("ransac_line: all points coincide");

  Rng rng(params.seed);
  const int n = static_cast<int>(points.size());
  std::vector<int> best_inliers;
  for (int it = 0; it < params.iterations; ++it) {
    const int i = rng.uniform_int(n);
    int j = rng.uniform_int(n);
    if (i == j || (points[i] - points[j]).norm() < 1e-12) continue;
    const Vec2 d = (points[j] - points[i]).normalized();
    const Line2 l{-d.y(), d.x(), d.y() * points[i].x() - d.x() * points[i].y()};
    std::vector<int> inliers;
    for (int k = 0; k < n; ++k)
      if (l.distance(points[k]) <= params.inlier_threshold) inliers.push_back(k);
    if (inliers.size() > best_inliers.size()) best_inliers = std::move(inliers);
  }
  if (static_cast<int>(best_inliers.size()) < std::max(2, params.min_inliers))
    throw std::runtime_error("ransac_line: no consensus line found");

  std::vector<Vec2> sel;
  for (int k : best_inliers) sel.push_back(points[k]);
  return {tls_line(sel), best_inliers};
}

FitResult baseline_vertices(const Scan& cloud, const RansacParams& params) {
  std::vector<Vec3> pts;
  for (const LidarPoint& p : cloud.points) pts.push_back(p.p);
  if (pts.size() < 8) throw std::invalid_argument("baseline_vertices: too few points");

  const auto [normal, c] = fit_plane_svd(pts);
  Vec3 h, v;
  plane_basis(normal, &h, &v);
  auto to_plane = [&](const Vec3& p) { return Vec2(h.dot(p - c), v.dot(p - c)); };

  const std::vector<RingEdgePoint> edges = extract_ring_edges(cloud);
  std::vector<Vec2> edge2d;
  for (const RingEdgePoint& e : edges) edge2d.push_back(to_plane(e.p));

  // Quadrant association: edge k spans the k-th quadrant of the in-plane
  // angle, matching a diamond's four sides (top-left = quadrant between
  // the up and left vertex directions, and so on).
  auto quadrant = [](const Vec2& p) {
    const double ang = std::atan2(p.y(), p.x());
    if (ang >= 0.0 && ang < M_PI_2) return 0;
    if (ang >= M_PI_2) return 1;
    if (ang < -M_PI_2) return 2;
    return 3;
  };
  std::array<std::vector<Vec2>, 4> groups;
  for (const Vec2& p : edge2d) groups[quadrant(p)].push_back(p);

  for (const auto& g : groups)
    if (g.size() < 2)
      throw std::runtime_error("baseline_vertices: an edge has fewer than 2 edge points");

  std::array<Line2, 4> lines;
  std::array<std::vector<int>, 4> inliers;
  for (int e = 0; e < 4; ++e) {
    RansacParams p = params;
    p.seed = derive_seed(params.seed, static_cast<std::uint64_t>(e));
    std::tie(lines[e], inliers[e]) = ransac_line(groups[e], p);
  }

  // Provisional fit done; points near the quadrant boundaries may belong to
  // the neighbouring side, so reassign every edge point to its nearest line
  // and refit once.
  std::array<std::vector<Vec2>, 4> regroup;
  for (const Vec2& p : edge2d) {
    int arg = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int e = 0; e < 4; ++e) {
      const double d = lines[e].distance(p);
      if (d < bd) {
        bd = d;
        arg = e;
      }
    }
    regroup[arg].push_back(p);
  }
  for (int e = 0; e < 4; ++e) {
    if (regroup[e].size() < 2)
      throw std::runtime_error("baseline_vertices: an edge has fewer than 2 edge points");
    RansacParams p = params;
    p.seed = derive_seed(params.seed, static_cast<std::uint64_t>(4 + e));
    std::tie(lines[e], std::ignore) = ransac_line(regroup[e], p);
  }

  auto intersect = [](const Line2& l1, const Line2& l2) {
    Eigen::Matrix2d a;
    a << l1.a, l1.b, l2.a, l2.b;
    if (std::abs(a.determinant()) < 1e-12)
      throw std::runtime_error("baseline_vertices: parallel edge lines");
    return Vec2(a.inverse() * Vec2(-l1.c, -l2.c));
  };

  FitResult result;
  // Adjacent quadrants meet at the up/left/down/right vertices.
  const std::array<std::pair<int, int>, 4> corners = {{{0, 1}, {1, 2}, {2, 3}, {3, 0}}};
  double total = 0.0;
  for (const auto& [e1, e2] : corners) {
    const Vec2 q = intersect(lines[e1], lines[e2]);
    result.vertices.push_back(c + q.x() * h + q.y() * v);
  }
  for (int e = 0; e < 4; ++e)
    for (const Vec2& p : regroup[e]) total += lines[e].distance(p);
  result.cost = total;
  result.iterations = params.iterations;
  result.restarts_used = 1;
  // Pose of the fitted plane frame, for parity with the volume fit.
  Mat3 r;
  r.col(0) = -normal;
  r.col(1) = h;
  r.col(2) = v;
  if (r.determinant() < 0.0) r.col(0) = normal;
  result.transform = RigidTransform3{Rotation3{r}, c}.inverse();
  return result;
}

}  // namespace calib
