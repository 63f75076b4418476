#include "calib/scene_io.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace calib {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json transform_to_json(const RigidTransform3& h) {
  json j;
  j["rotation"] = json::array();
  for (int r = 0; r < 3; ++r)
    j["rotation"].push_back({h.rotation.m(r, 0), h.rotation.m(r, 1), h.rotation.m(r, 2)});
  j["translation"] = {h.translation.x(), h.translation.y(), h.translation.z()};
  return j;
}

RigidTransform3 transform_from_json(const json& j) {
  RigidTransform3 h;
  const auto& rot = j.at("rotation");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) h.rotation.m(r, c) = rot.at(r).at(c).get<double>();
  const auto& t = j.at("translation");
  h.translation = {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()};
  return h;
}

json pose_to_json(const RigidTransform3& h) {
  // Poses are written as XYZ Euler degrees; recover angles from the matrix.
  const Mat3& m = h.rotation.m;
  const double pitch = std::asin(std::clamp(m(0, 2), -1.0, 1.0));
  double roll, yaw;
  if (std::abs(std::cos(pitch)) > 1e-9) {
    roll = std::atan2(-m(1, 2), m(2, 2));
    yaw = std::atan2(-m(0, 1), m(0, 0));
  } else {
    roll = std::atan2(m(1, 0), m(1, 1));
    yaw = 0.0;
  }
  json j;
  j["euler_xyz_deg"] = {roll * kRadToDeg, pitch * kRadToDeg, yaw * kRadToDeg};
  j["translation"] = {h.translation.x(), h.translation.y(), h.translation.z()};
  return j;
}

RigidTransform3 pose_from_json(const json& j) {
  const auto& e = j.at("euler_xyz_deg");
  const auto& t = j.at("translation");
  return {euler_xyz_to_rotation(e.at(0).get<double>(), e.at(1).get<double>(),
                                e.at(2).get<double>()),
          Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>())};
}

}  // namespace

std::vector<Vec3> Scene::gt_vertices(std::size_t target_index) const {
  const SceneTarget& t = targets.at(target_index);
  std::vector<Vec3> out;
  for (const Vec3& v : t.shape.vertices3()) out.push_back(t.pose_gt * v);
  return out;
}

void Scene::validate() const {
  if (corners.size() != targets.size())
    throw std::runtime_error("scene " + id + ": corners count != 4 x target count");
  if (scans.size() != targets.size())
    throw std::runtime_error("scene " + id + ": scan count != target count");
  for (const Scan& s : scans)
    for (const LidarPoint& p : s.points)
      if (p.ring < 0 || p.ring >= static_cast<int>(lidar.ring_count()))
        throw std::runtime_error("scene " + id + ": scan ring id out of range");
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_scene: cannot open " + path);
  json j;
  in >> j;

  Scene scene;
  scene.id = j.value("id", fs::path(path).stem().string());

  const json& ls = j.at("lidar_spec");
  scene.lidar.ring_elevations_deg = ls.at("elevations_deg").get<std::vector<double>>();
  scene.lidar.azimuth_step_deg = ls.at("azimuth_step_deg").get<double>();
  scene.lidar.range_sigma = ls.value("range_sigma", 0.0);
  if (ls.contains("ring_bias")) scene.lidar.ring_bias = ls.at("ring_bias").get<std::vector<double>>();
  scene.lidar.validate();

  const fs::path base = fs::path(path).parent_path();
  for (const json& tj : j.at("targets")) {
    const std::string ref = tj.at("shape_ref").get<std::string>();
    const double d = tj.value("d", 0.0);
    const double eps = tj.value("epsilon", 0.035);
    PolygonTarget shape =
        ref == "diamond" ? make_diamond(d, eps) : load_shape((base / ref).string());
    scene.targets.push_back({std::move(shape), pose_from_json(tj.at("pose")), d, ref});
  }

  const json& cj = j.at("camera");
  scene.camera = {cj.at("fx").get<double>(), cj.at("fy").get<double>(), cj.value("s", 0.0),
                  cj.at("cx").get<double>(), cj.at("cy").get<double>()};
  scene.extrinsic_gt = transform_from_json(j.at("extrinsic_gt"));
  scene.extrinsic_init =
      j.contains("extrinsic_init") ? transform_from_json(j.at("extrinsic_init")) : scene.extrinsic_gt;

  for (const json& quad : j.at("corners")) {
    std::array<PixelPoint, 4> c;
    for (int i = 0; i < 4; ++i)
      c[i] = {quad.at(i).at(0).get<double>(), quad.at(i).at(1).get<double>()};
    scene.corners.push_back(c);
  }
  for (const json& sj : j.at("scans"))
    scene.scans.push_back(load_scan_csv((base / sj.get<std::string>()).string()));

  scene.validate();
  return scene;
}

void save_scene(const Scene& scene, const std::string& path) {
  scene.validate();
  const fs::path base = fs::path(path).parent_path();
  if (!base.empty()) fs::create_directories(base);

  json j;
  j["id"] = scene.id;
  j["lidar_spec"] = {{"elevations_deg", scene.lidar.ring_elevations_deg},
                     {"azimuth_step_deg", scene.lidar.azimuth_step_deg},
                     {"range_sigma", scene.lidar.range_sigma}};
  if (!scene.lidar.ring_bias.empty()) j["lidar_spec"]["ring_bias"] = scene.lidar.ring_bias;

  j["targets"] = json::array();
  for (std::size_t t = 0; t < scene.targets.size(); ++t) {
    const SceneTarget& st = scene.targets[t];
    json tj;
    std::string ref = st.shape_ref;
    if (ref != "diamond") {
      // Shapes referenced by file are re-written next to the scene.
      ref = scene.id + "_shape_" + std::to_string(t) + ".json";
      save_shape(st.shape, (base / ref).string());
    }
    tj["shape_ref"] = ref;
    tj["d"] = st.d;
    tj["epsilon"] = st.shape.epsilon();
    tj["pose"] = pose_to_json(st.pose_gt);
    j["targets"].push_back(tj);
  }

  j["camera"] = {{"fx", scene.camera.fx}, {"fy", scene.camera.fy},  {"s", scene.camera.s},
                 {"cx", scene.camera.cx}, {"cy", scene.camera.cy}};
  j["extrinsic_gt"] = transform_to_json(scene.extrinsic_gt);
  j["extrinsic_init"] = transform_to_json(scene.extrinsic_init);

  j["corners"] = json::array();
  for (const auto& quad : scene.corners) {
    json q = json::array();
    for (const PixelPoint& p : quad) q.push_back({p.u, p.v});
    j["corners"].push_back(q);
  }

  j["scans"] = json::array();
  for (std::size_t t = 0; t < scene.scans.size(); ++t) {
    const std::string name = scene.id + "_target_" + std::to_string(t) + ".csv";
    save_scan_csv(scene.scans[t], (base / name).string());
    j["scans"].push_back(name);
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_scene: cannot open " + path);
  out << j.dump(2) << "\n";
}

RigidTransform3 load_transform(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_transform: cannot open " + path);
  json j;
  in >> j;
  return transform_from_json(j);
}

void save_transform(const RigidTransform3& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_transform: cannot open " + path);
  out << transform_to_json(h).dump(2) << "\n";
}

}  // namespace calib
