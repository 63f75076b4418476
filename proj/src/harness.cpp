#include "calib/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "calib/rng.hpp"

namespace calib {

double vertex_rmse(const std::vector<Vec3>& estimated, const std::vector<Vec3>& truth) {
  if (estimated.size() != truth.size() || estimated.empty())
    throw std::invalid_argument("vertex_rmse: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i)
    sum += (estimated[i] - truth[i]).squaredNorm();
  return std::sqrt(sum / static_cast<double>(estimated.size()));
}

double vertex_rmse_aligned(const std::vector<Vec3>& estimated, const std::vector<Vec3>& truth) {
  // Cyclic shifts of the forward and reversed orders: a symmetric target
  // fitted in an equivalent orientation permutes its vertices dihedrally.
  const std::size_t n = estimated.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<Vec3> perm(n);
  for (int rev = 0; rev < 2; ++rev) {
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = rev ? (s + n - i % n) % n : (i + s) % n;
        perm[i] = estimated[src];
      }
      best = std::min(best, vertex_rmse(perm, truth));
    }
  }
  return best;
}

std::pair<double, double> pose_error(const RigidTransform3& estimate,
                                     const RigidTransform3& truth) {
  const double e_t = (truth.translation - estimate.translation).norm();
  const double e_r =
      so3_log(truth.rotation * estimate.rotation.transpose()).norm() * kRadToDeg;
  return {e_t, e_r};
}

double pixel_rms(const std::vector<PixelPoint>& projected, const std::vector<PixelPoint>& corners) {
  if (projected.size() != corners.size() || projected.empty())
    throw std::invalid_argument("pixel_rms: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < projected.size(); ++i) {
    const double du = projected[i].u - corners[i].u;
    const double dv = projected[i].v - corners[i].v;
    sum += du * du + dv * dv;
  }
  return std::sqrt(sum / static_cast<double>(projected.size()));
}

FitMethod fit_method_from_string(const std::string& s) {
  if (s == "gl1") return FitMethod::kGL1;
  if (s == "template") return FitMethod::kTemplate;
  if (s == "rn") return FitMethod::kRN;
  throw std::invalid_argument("unknown fit method: " + s);
}

CalibMethod calib_method_from_string(const std::string& s) {
  if (s == "pnp") return CalibMethod::kPnP;
  if (s == "iou") return CalibMethod::kIoU;
  throw std::invalid_argument("unknown calib method: " + s);
}

int thread_cap() {
  if (const char* env = std::getenv("CALIB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

std::vector<Vec3> fit_scene_target(const Scene& scene, std::size_t t, FitMethod method,
                                   const L1Params& base_params, std::uint64_t seed) {
  const Scan& scan = scene.scans[t];
  const PolygonTarget& shape = scene.targets[t].shape;
  switch (method) {
    case FitMethod::kGL1: {
      L1Params p = base_params;
      p.seed = seed;
      return fit_target_l1(scan, shape, p).vertices;
    }
    case FitMethod::kTemplate:
      return fit_template_p2l(extract_edge_points(scan), shape).vertices;
    case FitMethod::kRN: {
      RansacParams p;
      p.seed = seed;
      return baseline_vertices(scan, p).vertices;
    }
  }
  throw std::logic_error("fit_scene_target: bad method");
}

std::vector<Correspondence> scene_correspondences(const Scene& scene,
                                                  const std::vector<std::vector<Vec3>>& vertices,
                                                  const RigidTransform3& guess) {
  std::vector<Correspondence> cs;
  for (std::size_t t = 0; t < scene.targets.size(); ++t) {
    const std::vector<PixelPoint> corners(scene.corners[t].begin(), scene.corners[t].end());
    std::array<int, 4> perm = {0, 1, 2, 3};
    try {
      perm = sort_correspondences(vertices[t], corners, scene.camera, guess);
    } catch (const std::exception&) {
      // Degenerate layouts happen when a fit went badly wrong; fall back
      // to greedy nearest-projection pairing so the error stays measured
      // instead of aborting the study.
      try {
        std::array<bool, 4> used = {false, false, false, false};
        for (int i = 0; i < 4; ++i) {
          const PixelPoint p = project_point(vertices[t][i], guess, scene.camera);
          int arg = -1;
          double best = std::numeric_limits<double>::infinity();
          for (int c = 0; c < 4; ++c) {
            if (used[c]) continue;
            const double d2 = (p.u - corners[c].u) * (p.u - corners[c].u) +
                              (p.v - corners[c].v) * (p.v - corners[c].v);
            if (d2 < best) {
              best = d2;
              arg = c;
            }
          }
          used[arg] = true;
          perm[i] = arg;
        }
      } catch (const std::exception&) {
        perm = {0, 1, 2, 3};  // projection failed outright; keep file order
      }
    }
    for (int i = 0; i < 4; ++i) cs.emplace_back(vertices[t][i], corners[perm[i]]);
  }
  return cs;
}

}  // namespace

CalibrationReport round_robin(const std::vector<Scene>& scenes, FitMethod fit, CalibMethod calib,
                              std::uint64_t seed, const L1Params& fit_params) {
  if (scenes.size() < 2) throw std::invalid_argument("round_robin: need >= 2 scenes");
  for (const Scene& s : scenes) {
    s.validate();
    if (s.corners.empty()) throw std::invalid_argument("round_robin: scene missing corners");
  }

  CalibrationReport report;
  report.fit_method = fit == FitMethod::kGL1 ? "gl1" : (fit == FitMethod::kRN ? "rn" : "template");
  report.calib_method = calib == CalibMethod::kPnP ? "pnp" : "iou";
  report.seed = seed;

  // Per-scene target fits, parallel across scenes, deterministic per-index
  // seeds merged by index.
  const std::size_t n = scenes.size();
  std::vector<std::vector<std::vector<Vec3>>> fitted(n);
  {
    const int cap = std::max(1, thread_cap());
    std::size_t next = 0;
    while (next < n) {
      const std::size_t batch = std::min<std::size_t>(cap, n - next);
      std::vector<std::future<std::vector<std::vector<Vec3>>>> futs;
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t idx = next + b;
        futs.push_back(std::async(std::launch::async, [&, idx] {
          std::vector<std::vector<Vec3>> out;
          for (std::size_t t = 0; t < scenes[idx].targets.size(); ++t)
            out.push_back(fit_scene_target(scenes[idx], t, fit, fit_params,
                                           derive_seed(seed, idx * 97 + t)));
          return out;
        }));
      }
      for (std::size_t b = 0; b < batch; ++b) fitted[next + b] = futs[b].get();
      next += batch;
    }
  }

  for (std::size_t train_idx = 0; train_idx < n; ++train_idx) {
    const Scene& scene = scenes[train_idx];
    const auto cs = scene_correspondences(scene, fitted[train_idx], scene.extrinsic_init);

    RigidTransform3 extrinsic;
    if (calib == CalibMethod::kPnP) {
      extrinsic = calibrate_pnp(cs, scene.camera, scene.extrinsic_init);
    } else {
      std::vector<PolygonPair> pairs;
      for (std::size_t t = 0; t < scene.targets.size(); ++t) {
        PolygonPair pp;
        pp.lidar_vertices = fitted[train_idx][t];
        std::vector<Vec2> px;
        for (const PixelPoint& p : scene.corners[t]) px.emplace_back(p.u, p.v);
        pp.image_polygon = convex_hull_ccw(px);
        pairs.push_back(pp);
      }
      extrinsic = calibrate_iou(pairs, scene.camera, scene.extrinsic_init);
    }

    SceneTrainResult tr;
    tr.scene = static_cast<int>(train_idx);
    tr.extrinsic = extrinsic;
    tr.train_pixel_rms = pnp_residual_rms(cs, scene.camera, extrinsic);
    for (std::size_t t = 0; t < scene.targets.size(); ++t)
      tr.vertex_rmse.push_back(
          vertex_rmse_aligned(fitted[train_idx][t], scene.gt_vertices(t)));
    report.train.push_back(tr);

    for (std::size_t val_idx = 0; val_idx < n; ++val_idx) {
      if (val_idx == train_idx) continue;
      const auto vcs = scene_correspondences(scenes[val_idx], fitted[val_idx], extrinsic);
      ValidationCell cell;
      cell.train_scene = static_cast<int>(train_idx);
      cell.val_scene = static_cast<int>(val_idx);
      cell.pixel_rms = pnp_residual_rms(vcs, scenes[val_idx].camera, extrinsic);
      report.validation.push_back(cell);
    }
  }

  double mean = 0.0;
  for (const ValidationCell& c : report.validation) mean += c.pixel_rms;
  mean /= static_cast<double>(report.validation.size());
  double var = 0.0;
  for (const ValidationCell& c : report.validation)
    var += (c.pixel_rms - mean) * (c.pixel_rms - mean);
  if (report.validation.size() > 1) var /= static_cast<double>(report.validation.size() - 1);
  report.validation_mean = mean;
  report.validation_variance = var;
  return report;
}

std::string CalibrationReport::to_json() const {
  nlohmann::json j;
  j["fit_method"] = fit_method;
  j["calib_method"] = calib_method;
  j["seed"] = seed;
  j["train"] = nlohmann::json::array();
  for (const SceneTrainResult& t : train) {
    nlohmann::json tj;
    tj["scene"] = t.scene;
    tj["train_pixel_rms"] = t.train_pixel_rms;
    tj["vertex_rmse"] = t.vertex_rmse;
    nlohmann::json rot = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
      rot.push_back({t.extrinsic.rotation.m(r, 0), t.extrinsic.rotation.m(r, 1),
                     t.extrinsic.rotation.m(r, 2)});
    tj["extrinsic"] = {{"rotation", rot},
                       {"translation",
                        {t.extrinsic.translation.x(), t.extrinsic.translation.y(),
                         t.extrinsic.translation.z()}}};
    j["train"].push_back(tj);
  }
  j["validation"] = nlohmann::json::array();
  for (const ValidationCell& c : validation)
    j["validation"].push_back(
        {{"train_scene", c.train_scene}, {"val_scene", c.val_scene}, {"pixel_rms", c.pixel_rms}});
  j["summary"] = {{"mean", validation_mean}, {"variance", validation_variance}};
  return j.dump(2);
}

std::string CalibrationReport::to_csv() const {
  // Rows: training scene; columns: validation scene ("train" first).
  std::size_t n = train.size();
  std::ostringstream out;
  out << "train_scene,train_rms";
  for (std::size_t v = 0; v < n; ++v) out << ",val_" << v;
  out << "\n";
  for (std::size_t t = 0; t < n; ++t) {
    out << t << "," << train[t].train_pixel_rms;
    for (std::size_t v = 0; v < n; ++v) {
      if (v == t) {
        out << ",";
        continue;
      }
      for (const ValidationCell& c : validation)
        if (c.train_scene == static_cast<int>(t) && c.val_scene == static_cast<int>(v))
          out << "," << c.pixel_rms;
    }
    out << "\n";
  }
  return out.str();
}

std::vector<Scene> simulate_scene_suite(const SimulateConfig& config, std::uint64_t seed) {
  std::vector<Scene> scenes;
  const CameraIntrinsics camera{600.0, 600.0, 0.0, 640.0, 360.0};

  // Camera 10 cm ahead of and 20 cm below the LiDAR, optical axis along
  // the LiDAR's +y (camera frame: x right, y down, z forward).
  Mat3 rm;
  rm << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  const Rotation3 r_lc{rm};
  const Vec3 cam_pos(0.0, 0.10, -0.20);
  const RigidTransform3 extrinsic_gt{r_lc, -(r_lc * cam_pos)};

  for (int s = 0; s < config.scene_count; ++s) {
    Rng rng(derive_seed(seed, 1000 + s));
    Scene scene;
    scene.id = "scene_" + std::to_string(s);
    scene.lidar = LidarSpec::ultra_puck_like();
    scene.lidar.range_sigma = config.noise_sigma;
    scene.lidar.ring_bias.resize(scene.lidar.ring_count());
    for (std::size_t r = 0; r < scene.lidar.ring_count(); ++r) {
      const double sign = (r % 2 == 0) ? 1.0 : -1.0;
      // Alternating systematic depth bias with a per-scene random flip.
      scene.lidar.ring_bias[r] = sign * config.bias_magnitude * (rng.uniform() < 0.5 ? 1.0 : -1.0);
    }
    scene.camera = camera;
    scene.extrinsic_gt = extrinsic_gt;
    {
      const Vec3 axis = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()).normalized();
      const Rotation3 dr = so3_exp((5.0 * kDegToRad) * axis);
      const Vec3 dt(0.05 * rng.gaussian(), 0.05 * rng.gaussian(), 0.05 * rng.gaussian());
      scene.extrinsic_init = {dr * extrinsic_gt.rotation, extrinsic_gt.translation + dt};
    }

    struct Placement {
      double d, dist;
    };
    std::vector<Placement> placements = {{config.large_d, rng.uniform(4.0, 7.0)},
                                         {config.small_d, rng.uniform(1.2, 1.8)}};
    for (int t = 2; t < config.targets_per_scene; ++t)
      placements.push_back({t % 2 == 0 ? config.large_d : config.small_d,
                            rng.uniform(2.0, 5.0)});
    const int n_targets = static_cast<int>(placements.size());
    for (int t = 0; t < n_targets; ++t) {
      const double az =
          n_targets <= 2 ? rng.uniform(-12.0, 12.0) * kDegToRad
                         : (-30.0 + 60.0 * t / (n_targets - 1) + rng.uniform(-4.0, 4.0)) *
                               kDegToRad;
      const Vec3 dir(std::sin(az), std::cos(az), 0.0);
      // Face the template's normal along the viewing ray, then tilt. The
      // in-plane spin (roll about the template normal) stays small so the
      // targets present diamond-like; out-of-plane attitude varies more.
      Rotation3 base = rot_z(-az) * rot_z(M_PI_2);
      const Rotation3 tilt =
          euler_xyz_to_rotation(rng.uniform(-8.0, 8.0), rng.uniform(-18.0, 18.0),
                                rng.uniform(-15.0, 15.0));
      SceneTarget target{make_diamond(placements[t].d, config.epsilon),
                         RigidTransform3{Rotation3{(base * tilt).m}, placements[t].dist * dir},
                         placements[t].d, "diamond"};
      scene.scans.push_back(simulate_scan(scene.lidar, target.shape, target.pose_gt,
                                          derive_seed(seed, 2000 + s * 10 + t)));
      scene.targets.push_back(std::move(target));
    }

    for (std::size_t t = 0; t < scene.targets.size(); ++t) {
      std::array<PixelPoint, 4> quad;
      const std::vector<Vec3> gt = scene.gt_vertices(t);
      for (int i = 0; i < 4; ++i) quad[i] = project_point(gt[i], extrinsic_gt, camera);
      scene.corners.push_back(quad);
    }
    scene.validate();
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

}  // namespace calib
