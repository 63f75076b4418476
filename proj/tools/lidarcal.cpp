// Command-line front end: synthetic scene generation, vertex fitting,
// extrinsic and intrinsic calibration, shape design, and the round-robin
// evaluation harness.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "calib/baseline.hpp"
#include "calib/harness.hpp"
#include "calib/intrinsic.hpp"
#include "calib/scene_io.hpp"
#include "calib/shapeopt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace calib;

namespace {

json fit_result_to_json(const FitResult& r, const std::string& method) {
  json j;
  j["method"] = method;
  json rot = json::array();
  for (int k = 0; k < 3; ++k)
    rot.push_back({r.transform.rotation.m(k, 0), r.transform.rotation.m(k, 1),
                   r.transform.rotation.m(k, 2)});
  j["transform"] = {{"rotation", rot},
                    {"translation",
                     {r.transform.translation.x(), r.transform.translation.y(),
                      r.transform.translation.z()}}};
  j["vertices"] = json::array();
  for (const Vec3& v : r.vertices) j["vertices"].push_back({v.x(), v.y(), v.z()});
  j["cost"] = r.cost;
  j["iterations"] = r.iterations;
  j["restarts_used"] = r.restarts_used;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  const char* tail = (!text.empty() && text.back() == '\n') ? "" : "\n";
  if (path.empty() || path == "-") {
    std::cout << text << tail;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out << text << tail;
}

PolygonTarget resolve_shape(const std::string& shape, double d, double epsilon) {
  if (shape == "diamond") {
    if (d <= 0.0) throw std::runtime_error("--shape diamond requires --d > 0");
    return make_diamond(d, epsilon);
  }
  PolygonTarget t = load_shape(shape);
  if (epsilon > 0.0 && epsilon != t.epsilon())
    t = PolygonTarget(t.vertices(), epsilon);
  return t;
}

int run_simulate(const std::string& config_path, const std::string& out_dir,
                 std::uint64_t seed) {
  SimulateConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config " + config_path);
    json j;
    in >> j;
    cfg.scene_count = j.value("scene_count", cfg.scene_count);
    cfg.targets_per_scene = j.value("targets_per_scene", cfg.targets_per_scene);
    cfg.bias_magnitude = j.value("bias_magnitude", cfg.bias_magnitude);
    cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
    cfg.large_d = j.value("large_d", cfg.large_d);
    cfg.small_d = j.value("small_d", cfg.small_d);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
  }
  const std::vector<Scene> scenes = simulate_scene_suite(cfg, seed);
  fs::create_directories(out_dir);
  for (const Scene& s : scenes) save_scene(s, (fs::path(out_dir) / (s.id + ".json")).string());
  std::cout << "wrote " << scenes.size() << " scenes to " << out_dir << "\n";
  return 0;
}

int run_fit(const std::string& method, const std::string& scan_path, const std::string& shape_path,
            double d, double epsilon, int restarts, std::uint64_t seed, const std::string& out) {
  const Scan scan = load_scan_csv(scan_path);
  const PolygonTarget shape = resolve_shape(shape_path, d, epsilon);
  FitResult result;
  if (method == "gl1") {
    L1Params p;
    p.epsilon = shape.epsilon();
    p.d = d;
    p.restarts = restarts;
    p.seed = seed;
    result = fit_target_l1(scan, shape, p);
  } else if (method == "template") {
    result = fit_template_p2l(extract_edge_points(scan), shape);
  } else if (method == "rn") {
    RansacParams p;
    p.seed = seed;
    result = baseline_vertices(scan, p);
  } else {
    std::cerr << "unknown fit method: " << method << "\n";
    return 1;
  }
  write_text(out, fit_result_to_json(result, method).dump(2));
  return 0;
}

std::vector<std::vector<Vec3>> load_vertices_files(const std::vector<std::string>& paths) {
  std::vector<std::vector<Vec3>> out;
  for (const std::string& path : paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vertices file " + path);
    json j;
    in >> j;
    if (j.is_object()) j = json::array({j});
    for (const json& rj : j) {
      std::vector<Vec3> vs;
      for (const json& v : rj.at("vertices"))
        vs.emplace_back(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
      out.push_back(vs);
    }
  }
  return out;
}

int run_calibrate(const std::string& method, const std::string& scene_path,
                  const std::vector<std::string>& vertices_paths, const std::string& init_path,
                  const std::string& out) {
  const Scene scene = load_scene(scene_path);
  const auto vertices = load_vertices_files(vertices_paths);
  if (vertices.size() != scene.targets.size())
    throw std::runtime_error("vertices files cover " + std::to_string(vertices.size()) +
                             " targets, scene has " + std::to_string(scene.targets.size()));
  const RigidTransform3 init =
      init_path.empty() ? scene.extrinsic_init : load_transform(init_path);

  std::vector<Correspondence> cs;
  for (std::size_t t = 0; t < scene.targets.size(); ++t) {
    const std::vector<PixelPoint> corners(scene.corners[t].begin(), scene.corners[t].end());
    const auto perm = sort_correspondences(vertices[t], corners, scene.camera, init);
    for (int i = 0; i < 4; ++i) cs.emplace_back(vertices[t][i], corners[perm[i]]);
  }

  RigidTransform3 extrinsic;
  if (method == "pnp") {
    extrinsic = calibrate_pnp(cs, scene.camera, init);
  } else if (method == "iou") {
    std::vector<PolygonPair> pairs;
    for (std::size_t t = 0; t < scene.targets.size(); ++t) {
      PolygonPair pp;
      pp.lidar_vertices = vertices[t];
      std::vector<Vec2> px;
      for (const PixelPoint& p : scene.corners[t]) px.emplace_back(p.u, p.v);
      pp.image_polygon = convex_hull_ccw(px);
      pairs.push_back(pp);
    }
    extrinsic = calibrate_iou(pairs, scene.camera, init);
  } else {
    std::cerr << "unknown calibration method: " << method << "\n";
    return 1;
  }

  json j;
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    rot.push_back({extrinsic.rotation.m(r, 0), extrinsic.rotation.m(r, 1),
                   extrinsic.rotation.m(r, 2)});
  j["method"] = method;
  j["extrinsic"] = {{"rotation", rot},
                    {"translation",
                     {extrinsic.translation.x(), extrinsic.translation.y(),
                      extrinsic.translation.z()}}};
  j["pixel_rms"] = pnp_residual_rms(cs, scene.camera, extrinsic);
  write_text(out, j.dump(2));
  return 0;
}

int run_intrinsic(const std::string& model_name, const std::vector<std::string>& scene_paths,
                  bool estimate_poses, const std::string& out) {
  IntrinsicModel model;
  if (model_name == "sim3")
    model = IntrinsicModel::kSim3;
  else if (model_name == "bl1")
    model = IntrinsicModel::kBL1;
  else if (model_name == "bl2")
    model = IntrinsicModel::kBL2;
  else {
    std::cerr << "unknown intrinsic model: " << model_name << "\n";
    return 1;
  }

  IntrinsicScene iscene;
  for (const std::string& path : scene_paths) {
    const Scene scene = load_scene(path);
    for (std::size_t t = 0; t < scene.targets.size(); ++t) {
      iscene.target_scans.push_back(scene.scans[t]);
      iscene.targets.push_back(scene.targets[t].shape);
      if (!estimate_poses) iscene.gt_poses.push_back(scene.targets[t].pose_gt);
    }
  }
  const IntrinsicResult result = calibrate_rings(iscene, model);

  json j;
  j["model"] = model_name;
  j["outer_iterations"] = result.outer_iterations;
  j["placement_warning"] = result.placement_warning;
  if (!result.warning.empty()) j["warning"] = result.warning;
  j["rings"] = json::array();
  for (const RingCalibration& rc : result.rings) {
    json rj;
    rj["ring"] = rc.ring;
    rj["calibrated"] = rc.calibrated;
    rj["residual_before"] = rc.residual_before;
    rj["residual_after"] = rc.residual_after;
    switch (model) {
      case IntrinsicModel::kSim3: {
        json rot = json::array();
        for (int r = 0; r < 3; ++r)
          rot.push_back({rc.correction.sim3.rotation.m(r, 0), rc.correction.sim3.rotation.m(r, 1),
                         rc.correction.sim3.rotation.m(r, 2)});
        rj["params"] = {{"scale", rc.correction.sim3.scale},
                        {"rotation", rot},
                        {"translation",
                         {rc.correction.sim3.translation.x(), rc.correction.sim3.translation.y(),
                          rc.correction.sim3.translation.z()}}};
        break;
      }
      case IntrinsicModel::kBL1:
        rj["params"] = {{"d_rho", rc.correction.bl1.d_rho},
                        {"d_theta", rc.correction.bl1.d_theta},
                        {"d_phi", rc.correction.bl1.d_phi}};
        break;
      case IntrinsicModel::kBL2:
        rj["params"] = {{"d_rho", rc.correction.bl2.d_rho}, {"d_theta", rc.correction.bl2.d_theta},
                        {"d_phi", rc.correction.bl2.d_phi}, {"s", rc.correction.bl2.s},
                        {"h", rc.correction.bl2.h},         {"v", rc.correction.bl2.v}};
        break;
    }
    j["rings"].push_back(rj);
  }
  write_text(out, j.dump(2));

  std::cerr << "ring residuals (before -> after):\n";
  for (const RingCalibration& rc : result.rings)
    std::cerr << "  ring " << rc.ring << ": " << rc.residual_before << " -> "
              << rc.residual_after << (rc.calibrated ? "" : "  (uncalibrated)") << "\n";
  return 0;
}

int run_optimize_shape(const std::string& config_path, std::uint64_t seed, int restarts,
                       double width, double epsilon, const std::string& out) {
  ShapeScoreConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config " + config_path);
    json j;
    in >> j;
    cfg.n_rotations = j.value("n_rotations", cfg.n_rotations);
    cfg.m_strips = j.value("m_strips", cfg.m_strips);
    cfg.rings_per_strip = j.value("rings_per_strip", cfg.rings_per_strip);
    cfg.sphere_grid = j.value("sphere_grid", cfg.sphere_grid);
    cfg.mu = j.value("mu", cfg.mu);
  }
  const CandidateShape shape = optimize_shape(cfg, seed, restarts);
  std::vector<Vec2> scaled;
  for (const Vec2& v : shape.vertices) scaled.push_back(width * v);
  save_shape(PolygonTarget(scaled, epsilon), out);
  std::cout << "robust score: " << robust_score(shape, cfg) << "\n";
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_check_placement(const std::string& scene_path) {
  const Scene scene = load_scene(scene_path);
  if (scene.targets.size() < 4)
    throw std::runtime_error("check-placement: scene has fewer than 4 targets");
  std::vector<Vec3> normals, anchors;
  for (std::size_t t = 0; t < 4; ++t) {
    normals.push_back((scene.targets[t].pose_gt.rotation * Vec3::UnitX()).normalized());
    anchors.push_back(scene.targets[t].pose_gt.translation);
  }
  const PlacementMatrix pm = placement_matrix(normals, plane_pair_intersections(normals, anchors));
  json j;
  j["rank"] = pm.rank;
  j["condition"] = pm.condition;
  j["similarity_residual"] = pm.similarity_residual;
  j["likely_unique"] = pm.likely_unique;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_evaluate(const std::string& scenes_dir, const std::string& fit, const std::string& calib,
                 std::uint64_t seed, const std::string& out, const std::string& csv) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(scenes_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() == ".json" && name.rfind("scene", 0) == 0 &&
        name.find("_shape_") == std::string::npos)
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.size() < 2) throw std::runtime_error("evaluate: need >= 2 scene files in " + scenes_dir);

  std::vector<Scene> scenes;
  for (const std::string& f : files) scenes.push_back(load_scene(f));
  const CalibrationReport report =
      round_robin(scenes, fit_method_from_string(fit), calib_method_from_string(calib), seed);
  write_text(out, report.to_json());
  if (!csv.empty()) write_text(csv, report.to_csv());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target-based LiDAR-camera calibration toolkit"};
  app.require_subcommand(1);

  std::string config, out_dir = "scenes", out, csv, method, scan, shape = "diamond", scene,
              init, model = "sim3", fit = "gl1", calib = "pnp";
  std::vector<std::string> vertices;
  std::vector<std::string> scene_paths;
  std::uint64_t seed = 0;
  int restarts = 8;
  double d = 0.0, epsilon = 0.035, width = 1.0;

  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic scene suite");
  sim->add_option("--config", config, "config JSON");
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--seed", seed, "master seed");

  CLI::App* fitv = app.add_subcommand("fit-vertices", "estimate target vertices from a scan");
  fitv->add_option("--method", method, "gl1|template|rn")->required();
  fitv->add_option("--scan", scan, "scan CSV")->required();
  fitv->add_option("--shape", shape, "shape JSON path or 'diamond'");
  fitv->add_option("--d", d, "diamond side length, meters");
  fitv->add_option("--epsilon", epsilon, "slab half-thickness, meters");
  fitv->add_option("--restarts", restarts, "restart count");
  fitv->add_option("--seed", seed, "seed");
  fitv->add_option("--out", out, "output JSON (default stdout)");

  CLI::App* cal = app.add_subcommand("calibrate", "extrinsic calibration from fitted vertices");
  cal->add_option("--method", method, "pnp|iou")->required();
  cal->add_option("--scene", scene, "scene JSON")->required();
  cal->add_option("--vertices", vertices, "fit-vertices outputs (one result per target)")
      ->required();
  cal->add_option("--init", init, "initial extrinsic JSON (default: scene's)");
  cal->add_option("--out", out, "output JSON (default stdout)");

  CLI::App* intr = app.add_subcommand("intrinsic", "per-ring intrinsic calibration");
  bool estimate_poses = false;
  intr->add_option("--model", model, "sim3|bl1|bl2")->required();
  intr->add_option("--scenes", scene_paths, "scene JSON files")->required();
  intr->add_flag("--estimate-poses", estimate_poses,
                 "re-estimate target poses instead of using the recorded ones");
  intr->add_option("--out", out, "output JSON (default stdout)");

  CLI::App* osh = app.add_subcommand("optimize-shape", "design an optimal target shape");
  osh->add_option("--config", config, "score config JSON");
  osh->add_option("--seed", seed, "seed");
  osh->add_option("--restarts", restarts, "restart count");
  osh->add_option("--width", width, "output width scaling, meters");
  osh->add_option("--epsilon", epsilon, "shape file epsilon");
  osh->add_option("--out", out, "output shape JSON")->required();

  CLI::App* chk = app.add_subcommand("check-placement", "intrinsic uniqueness diagnostics");
  chk->add_option("--scene", scene, "scene JSON with >= 4 targets")->required();

  CLI::App* eval = app.add_subcommand("evaluate", "round-robin cross-validation");
  eval->add_option("--scenes", out_dir, "scene directory")->required();
  eval->add_option("--fit", fit, "gl1|template|rn");
  eval->add_option("--calib", calib, "pnp|iou");
  eval->add_option("--seed", seed, "master seed");
  eval->add_option("--out", out, "report JSON (default stdout)");
  eval->add_option("--csv", csv, "report CSV table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sim->parsed()) return run_simulate(config, out_dir, seed);
    if (fitv->parsed()) return run_fit(method, scan, shape, d, epsilon, restarts, seed, out);
    if (cal->parsed()) return run_calibrate(method, scene, vertices, init, out);
    if (intr->parsed()) return run_intrinsic(model, scene_paths, estimate_poses, out);
    if (osh->parsed()) return run_optimize_shape(config, seed, restarts, width, epsilon, out);
    if (chk->parsed()) return run_check_placement(scene);
    if (eval->parsed()) return run_evaluate(out_dir, fit, calib, seed, out, csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
