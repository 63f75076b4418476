#include "calib/simlidar.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "calib/rng.hpp"

namespace calib {

void LidarSpec::validate() const {
  if (ring_elevations_deg.empty()) throw std::invalid_argument("LidarSpec: no rings");
  for (std::size_t i = 1; i < ring_elevations_deg.size(); ++i)
    if (ring_elevations_deg[i] <= ring_elevations_deg[i - 1])
      throw std::invalid_argument("LidarSpec: elevations must be strictly increasing");
  if (azimuth_step_deg <= 0.0) throw std::invalid_argument("LidarSpec: azimuth step <= 0");
  if (!ring_bias.empty() && ring_bias.size() != ring_elevations_deg.size())
    throw std::invalid_argument("LidarSpec: bias list length != ring count");
}

LidarSpec LidarSpec::ultra_puck_like() {
  LidarSpec spec;
  for (double e = -25.0; e < -5.0 - 1e-9; e += 1.36) spec.ring_elevations_deg.push_back(e);
  for (double e = -5.0; e < 3.0 - 1e-9; e += 0.33) spec.ring_elevations_deg.push_back(e);
  for (double e = 3.0 + 1.36; e <= 15.0 + 1e-9; e += 1.36) spec.ring_elevations_deg.push_back(e);
  return spec;
}

namespace {

Vec3 ray_direction(double elevation_rad, double azimuth_rad) {
  const double ce = std::cos(elevation_rad);
  return {ce * std::sin(azimuth_rad), ce * std::cos(azimuth_rad), std::sin(elevation_rad)};
}

}  // namespace

Scan simulate_scan(const LidarSpec& spec, const PolygonTarget& target,
                   const RigidTransform3& pose, std::uint64_t seed) {
  spec.validate();
  const Vec3 normal = pose.rotation * Vec3::UnitX();
  const Vec3& anchor = pose.translation;
  if (std::abs(normal.dot(anchor)) < 1e-9)
    throw std::invalid_argument("simulate_scan: target plane passes through the origin");

  const EdgeLineSet lines = edge_lines(target);
  const RigidTransform3 pullback = pose.inverse();
  Rng rng(seed);

  Scan scan;
  const int n_az = static_cast<int>(std::floor(360.0 / spec.azimuth_step_deg));
  for (std::size_t r = 0; r < spec.ring_count(); ++r) {
    const double el = spec.ring_elevations_deg[r] * kDegToRad;
    const double bias = spec.ring_bias.empty() ? 0.0 : spec.ring_bias[r];
    for (int a = 0; a < n_az; ++a) {
      const double az = (a * spec.azimuth_step_deg - 180.0) * kDegToRad;
      const Vec3 dir = ray_direction(el, az);
      const double denom = normal.dot(dir);
      if (std::abs(denom) < 1e-12) continue;
      const double range = normal.dot(anchor) / denom;
      if (range <= 0.0) continue;  // target behind the sensor for this ray
      const Vec3 hit = range * dir;
      if (!roi_contains(target, lines, pullback * hit)) continue;
      double rho = range + bias;
      if (spec.range_sigma > 0.0) rho += spec.range_sigma * rng.gaussian();
      scan.points.push_back({rho * dir, static_cast<int>(r), 100.0});
    }
  }
  return scan;
}

double quantization_error(double distance, const LidarSpec& spec) {
  if (distance <= 0.0) throw std::invalid_argument("quantization_error: distance <= 0");
  return distance * spec.azimuth_step_deg * kDegToRad;
}

Scan perturb_scan(const Scan& scan, const std::vector<double>& per_ring_bias, double sigma,
                  std::uint64_t seed) {
  Rng rng(seed);
  Scan out = scan;
  for (LidarPoint& pt : out.points) {
    if (pt.ring < 0 || pt.ring >= static_cast<int>(per_ring_bias.size()))
      throw std::invalid_argument("perturb_scan: bias list does not cover ring id");
    const double rho = pt.p.norm();
    if (rho < 1e-12) continue;
    const Vec3 dir = pt.p / rho;
    pt.p = (rho + per_ring_bias[pt.ring] + sigma * rng.gaussian()) * dir;
  }
  return out;
}

void save_scan_csv(const Scan& scan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_scan_csv: cannot open " + path);
  out << "x,y,z,ring,intensity\n";
  out.precision(17);
  for (const LidarPoint& pt : scan.points)
    out << pt.p.x() << "," << pt.p.y() << "," << pt.p.z() << "," << pt.ring << ","
        << pt.intensity << "\n";
}

Scan load_scan_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_scan_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_scan_csv: empty file " + path);
  Scan scan;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    LidarPoint pt;
    char comma;
    ss >> pt.p.x() >> comma >> pt.p.y() >> comma >> pt.p.z() >> comma >> pt.ring >> comma >>
        pt.intensity;
    if (ss.fail()) throw std::runtime_error("load_scan_csv: malformed row in " + path);
    scan.points.push_back(pt);
  }
  return scan;
}

}  // namespace calib
