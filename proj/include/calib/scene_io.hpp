#pragma once

#include <array>
#include <string>
#include <vector>

#include "calib/camera.hpp"
#include "calib/geom.hpp"
#include "calib/simlidar.hpp"
#include "calib/targets.hpp"

namespace calib {

struct SceneTarget {
  PolygonTarget shape;
  RigidTransform3 pose_gt;  // template frame -> LiDAR frame
  double d = 0.0;           // nominal size recorded in the file
  std::string shape_ref;    // "diamond" or a shape-file path
};

/// One calibration scene: posed targets, their scans, the camera, and the
/// per-target image corners.
struct Scene {
  std::string id;
  LidarSpec lidar;
  std::vector<SceneTarget> targets;
  CameraIntrinsics camera;
  RigidTransform3 extrinsic_gt;
  RigidTransform3 extrinsic_init;  // rough (CAD-style) starting guess
  std::vector<std::array<PixelPoint, 4>> corners;  // one quad per target
  std::vector<Scan> scans;                         // one scan per target

  std::vector<Vec3> gt_vertices(std::size_t target_index) const;
  void validate() const;
};

// Scene JSON plus per-target scan CSVs stored next to it.
Scene load_scene(const std::string& path);
void save_scene(const Scene& scene, const std::string& path);

RigidTransform3 load_transform(const std::string& path);
void save_transform(const RigidTransform3& h, const std::string& path);

}  // namespace calib
