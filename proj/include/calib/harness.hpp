#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calib/baseline.hpp"
#include "calib/extrinsic.hpp"
#include "calib/scene_io.hpp"
#include "calib/vertexfit.hpp"

namespace calib {

// Root-mean-square vertex distance for correspondence-ordered sets.
double vertex_rmse(const std::vector<Vec3>& estimated, const std::vector<Vec3>& truth);

// As vertex_rmse but minimized over cyclic vertex relabelings; used when a
// symmetric target makes the absolute labeling ambiguous.
double vertex_rmse_aligned(const std::vector<Vec3>& estimated, const std::vector<Vec3>& truth);

// Translation error (meters) and rotation error (degrees, SO(3) log norm).
std::pair<double, double> pose_error(const RigidTransform3& estimate,
                                     const RigidTransform3& truth);

double pixel_rms(const std::vector<PixelPoint>& projected, const std::vector<PixelPoint>& corners);

enum class FitMethod { kGL1, kTemplate, kRN };
enum class CalibMethod { kPnP, kIoU };

FitMethod fit_method_from_string(const std::string& s);
CalibMethod calib_method_from_string(const std::string& s);

struct ValidationCell {
  int train_scene = 0;
  int val_scene = 0;
  double pixel_rms = 0.0;
};

struct SceneTrainResult {
  int scene = 0;
  double train_pixel_rms = 0.0;
  RigidTransform3 extrinsic;
  std::vector<double> vertex_rmse;  // per target, against GT, cyclically aligned
};

struct CalibrationReport {
  std::string fit_method;
  std::string calib_method;
  std::uint64_t seed = 0;
  std::vector<SceneTrainResult> train;
  std::vector<ValidationCell> validation;
  double validation_mean = 0.0;
  double validation_variance = 0.0;  // unbiased sample variance

  std::string to_json() const;
  std::string to_csv() const;  // train rows x validation columns
};

// Trains the extrinsic on each scene in turn and validates on every other
// scene's fitted vertices. Scene fitting honours the CALIB_THREADS cap.
CalibrationReport round_robin(const std::vector<Scene>& scenes, FitMethod fit, CalibMethod calib,
                              std::uint64_t seed, const L1Params& fit_params = {});

struct SimulateConfig {
  int scene_count = 7;
  int targets_per_scene = 2;     // extra targets beyond the first two alternate sizes
  double bias_magnitude = 0.03;  // per-ring systematic depth bias, meters
  double noise_sigma = 0.01;     // white range noise, meters
  double large_d = 0.805;        // side of the far diamond target
  double small_d = 0.158;        // side of the near diamond target
  double epsilon = 0.035;
};

// Builds a synthetic suite: each scene has a large and a small diamond at
// varied distances and attitudes, per-ring alternating bias with a seeded
// sign pattern, plus range noise. Corners come from projecting the true
// vertices through the true extrinsic.
std::vector<Scene> simulate_scene_suite(const SimulateConfig& config, std::uint64_t seed);

// Number of worker threads: CALIB_THREADS if set, else the hardware count.
int thread_cap();

}  // namespace calib
