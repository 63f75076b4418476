#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calib/geom.hpp"
#include "calib/targets.hpp"

namespace calib {

/// Spinning-LiDAR model: one beam per ring elevation, a full azimuth sweep
/// per scan. Azimuth 0 looks along +y (x = rho cos(el) sin(az)).
struct LidarSpec {
  std::vector<double> ring_elevations_deg;  // strictly increasing
  double azimuth_step_deg = 0.4;
  double range_sigma = 0.0;                 // white range noise, meters
  std::vector<double> ring_bias;            // per-ring depth bias, meters (empty = none)

  std::size_t ring_count() const { return ring_elevations_deg.size(); }
  void validate() const;

  // 0.33 deg spacing between -5 and +3 deg elevation, 1.36 deg outside,
  // spanning roughly [-25, +15] (48 rings total).
  static LidarSpec ultra_puck_like();
};

struct LidarPoint {
  Vec3 p = Vec3::Zero();
  int ring = 0;
  double intensity = 100.0;
};

struct Scan {
  std::vector<LidarPoint> points;
  int timestamp = 0;
};

// One revolution against a posed planar target. pose maps the template
// frame (polygon in the y-z plane) into the LiDAR frame. Rays that hit the
// target plane from the front and fall inside the polygon (within the x
// slab) become returns; per-ring bias and Gaussian range noise are applied
// along the ray. Deterministic for fixed (spec, target, pose, seed).
Scan simulate_scan(const LidarSpec& spec, const PolygonTarget& target,
                   const RigidTransform3& pose, std::uint64_t seed);

// Spacing of adjacent returns on one ring: distance times the azimuth step.
double quantization_error(double distance, const LidarSpec& spec);

// Moves every point along its ray by bias[ring] + N(0, sigma^2).
Scan perturb_scan(const Scan& scan, const std::vector<double>& per_ring_bias, double sigma,
                  std::uint64_t seed);

// CSV with header "x,y,z,ring,intensity", one point per row.
void save_scan_csv(const Scan& scan, const std::string& path);
Scan load_scan_csv(const std::string& path);

}  // namespace calib
