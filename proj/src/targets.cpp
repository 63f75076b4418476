#include "calib/targets.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace calib {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Signed area > 0 for counterclockwise vertex order.
double signed_area(const std::vector<Vec2>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2& p = v[i];
    const Vec2& q = v[(i + 1) % v.size()];
    s += cross2(p, q);
  }
  return 0.5 * s;
}

}  // namespace

PolygonTarget::PolygonTarget(std::vector<Vec2> vertices_yz, double epsilon)
    : vertices_(std::move(vertices_yz)), epsilon_(epsilon) {
  if (vertices_.size() < 3) throw std::invalid_argument("PolygonTarget: need >= 3 vertices");
  if (epsilon_ < 0.0) throw std::invalid_argument("PolygonTarget: epsilon < 0");

  Vec2 centroid = Vec2::Zero();
  for (const Vec2& v : vertices_) centroid += v;
  centroid /= static_cast<double>(vertices_.size());
  for (Vec2& v : vertices_) v -= centroid;

  if (signed_area(vertices_) < 0.0) std::reverse(vertices_.begin(), vertices_.end());

  const std::size_t m = vertices_.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 e0 = vertices_[(i + 1) % m] - vertices_[i];
    const Vec2 e1 = vertices_[(i + 2) % m] - vertices_[(i + 1) % m];
    if (cross2(e0, e1) <= 0.0) throw std::invalid_argument("PolygonTarget: vertices not convex");
  }
}

std::vector<Vec3> PolygonTarget::vertices3() const {
  std::vector<Vec3> out;
  out.reserve(vertices_.size());
  for (const Vec2& v : vertices_) out.emplace_back(0.0, v.x(), v.y());
  return out;
}

EdgeLineSet edge_lines(const PolygonTarget& target) {
  const auto& v = target.vertices();
  const std::size_t m = v.size();
  EdgeLineSet lines;
  lines.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2& p = v[i];
    const Vec2& q = v[(i + 1) % m];
    if ((q - p).norm() < 1e-12)
      throw std::invalid_argument("edge_lines: duplicate consecutive vertices");
    EdgeLine l;
    l.a = p.y() - q.y();
    l.b = q.x() - p.x();
    l.c = q.y() * p.x() - p.y() * q.x();
    // The centroid sits at the origin, strictly inside a convex polygon.
    l.interior_sign = (l.c > 0.0) ? 1.0 : -1.0;
    lines.push_back(l);
  }
  return lines;
}

bool roi_contains(const PolygonTarget& target, const EdgeLineSet& lines, const Vec3& p) {
  if (std::abs(p.x()) > target.epsilon()) return false;
  for (const EdgeLine& l : lines)
    if (l.signed_value(p.y(), p.z()) < 0.0) return false;
  return true;
}

PolygonTarget make_diamond(double d, double epsilon) {
  if (d <= 0.0) throw std::invalid_argument("make_diamond: d <= 0");
  const double r = d / std::sqrt(2.0);
  return PolygonTarget({{r, 0.0}, {0.0, r}, {-r, 0.0}, {0.0, -r}}, epsilon);
}

PolygonTarget make_square(double d, double epsilon) {
  if (d <= 0.0) throw std::invalid_argument("make_square: d <= 0");
  const double h = d / 2.0;
  return PolygonTarget({{h, -h}, {h, h}, {-h, h}, {-h, -h}}, epsilon);
}

PolygonTarget load_shape(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_shape: cannot open " + path);
  nlohmann::json j;
  in >> j;
  std::vector<Vec2> verts;
  for (const auto& v : j.at("vertices")) verts.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
  return PolygonTarget(std::move(verts), j.at("epsilon").get<double>());
}

void save_shape(const PolygonTarget& target, const std::string& path) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const Vec2& v : target.vertices()) j["vertices"].push_back({v.x(), v.y()});
  j["epsilon"] = target.epsilon();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_shape: cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace calib
