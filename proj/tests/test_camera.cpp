#include <doctest.h>

#include <algorithm>

#include "calib/camera.hpp"
#include "calib/rng.hpp"

using namespace calib;

TEST_CASE("project_point") {
  const CameraIntrinsics unit{1.0, 1.0, 0.0, 0.0, 0.0};
  const PixelPoint on_axis = project_point({0.0, 0.0, 5.0}, RigidTransform3::identity(), unit);
  CHECK(on_axis.u == doctest::Approx(0.0));
  CHECK(on_axis.v == doctest::Approx(0.0));

  const CameraIntrinsics k{100.0, 100.0, 0.0, 320.0, 240.0};
  const PixelPoint p = project_point({1.0, 0.0, 10.0}, RigidTransform3::identity(), k);
  CHECK(p.u == doctest::Approx(330.0));
  CHECK(p.v == doctest::Approx(240.0));

  CHECK_THROWS(project_point({0.0, 0.0, -1.0}, RigidTransform3::identity(), k));
}

TEST_CASE("project_point matches the homogeneous 3x4 product") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const CameraIntrinsics k{rng.uniform(200, 800), rng.uniform(200, 800), rng.uniform(-2, 2),
                             rng.uniform(200, 600), rng.uniform(100, 400)};
    const RigidTransform3 h{so3_exp(0.4 * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian())),
                            {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.5, 0.5)}};
    const Vec3 x(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(3, 10));
    const Vec3 cam = h * x;
    if (cam.z() <= 1e-3) continue;

    Eigen::Matrix<double, 3, 4> pm;
    pm.block<3, 3>(0, 0) = k.matrix() * h.rotation.m;
    pm.col(3) = k.matrix() * h.translation;
    const Eigen::Vector4d xh(x.x(), x.y(), x.z(), 1.0);
    const Vec3 uvw = pm * xh;

    const PixelPoint p = project_point(x, h, k);
    CHECK(p.u == doctest::Approx(uvw.x() / uvw.z()).epsilon(1e-12));
    CHECK(p.v == doctest::Approx(uvw.y() / uvw.z()).epsilon(1e-12));
  }
}

TEST_CASE("projection is invariant to homogeneous scaling") {
  const CameraIntrinsics k{500.0, 480.0, 1.0, 320.0, 240.0};
  const Vec3 x(0.4, -0.2, 6.0);
  const Vec3 uvw = k.matrix() * x;
  for (double alpha : {0.5, 2.0, 7.3}) {
    const Vec3 scaled = alpha * uvw;
    CHECK(scaled.x() / scaled.z() == doctest::Approx(uvw.x() / uvw.z()).epsilon(1e-12));
    CHECK(scaled.y() / scaled.z() == doctest::Approx(uvw.y() / uvw.z()).epsilon(1e-12));
  }
}

namespace {

// A quad in front of the camera with distinct top/bottom/left/right roles.
std::vector<Vec3> camera_frame_quad() {
  return {{0.0, -0.4, 5.0}, {0.45, 0.0, 5.0}, {0.0, 0.4, 5.0}, {-0.45, 0.0, 5.0}};
}

}  // namespace

TEST_CASE("sort_correspondences") {
  const CameraIntrinsics k{600.0, 600.0, 0.0, 640.0, 360.0};
  const RigidTransform3 id = RigidTransform3::identity();
  const std::vector<Vec3> quad = camera_frame_quad();
  std::vector<PixelPoint> corners;
  for (const Vec3& v : quad) corners.push_back(project_point(v, id, k));

  SUBCASE("aligned inputs give the identity permutation") {
    const auto perm = sort_correspondences(quad, corners, k, id);
    for (int i = 0; i < 4; ++i) CHECK(perm[i] == i);
  }

  SUBCASE("a cyclic shift by two is recovered") {
    const std::vector<PixelPoint> shifted = {corners[2], corners[3], corners[0], corners[1]};
    const auto perm = sort_correspondences(quad, shifted, k, id);
    CHECK(perm[0] == 2);
    CHECK(perm[1] == 3);
    CHECK(perm[2] == 0);
    CHECK(perm[3] == 1);
  }

  SUBCASE("degenerate ties are rejected") {
    std::vector<PixelPoint> tied = corners;
    tied[1] = {tied[0].u + 0.2, tied[0].v + 0.2};
    CHECK_THROWS(sort_correspondences(quad, tied, k, id));
  }
}

TEST_CASE("sorted pairing matches the nearest projection under the true extrinsic") {
  Rng rng(11);
  const CameraIntrinsics k{600.0, 600.0, 0.0, 640.0, 360.0};
  for (int trial = 0; trial < 100; ++trial) {
    // Ground-truth extrinsic near identity with the quad in LiDAR frame.
    const RigidTransform3 gt{so3_exp(0.05 * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian())),
                             {0.05 * rng.gaussian(), 0.05 * rng.gaussian(), 0.05 * rng.gaussian()}};
    std::vector<Vec3> quad = camera_frame_quad();
    // Mild in-plane spin: the extremes-based sorting assumes the target
    // presents diamond-like, as in the calibration scenes.
    const double a = rng.uniform(-20.0, 20.0) * kDegToRad;
    for (Vec3& v : quad) {
      const double x = v.x() * std::cos(a) - v.y() * std::sin(a);
      const double y = v.x() * std::sin(a) + v.y() * std::cos(a);
      v.x() = x;
      v.y() = y;
    }
    std::vector<PixelPoint> corners;
    for (const Vec3& v : quad) corners.push_back(project_point(v, gt, k));

    // Shuffle the corners and ask for the pairing with a perturbed guess.
    std::vector<int> order = {0, 1, 2, 3};
    for (int i = 3; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
    std::vector<PixelPoint> shuffled(4);
    for (int i = 0; i < 4; ++i) shuffled[i] = corners[order[i]];

    const RigidTransform3 guess{
        so3_exp(0.03 * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian())) * gt.rotation,
        gt.translation + 0.02 * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian())};

    std::array<int, 4> perm;
    try {
      perm = sort_correspondences(quad, shuffled, k, guess);
    } catch (const std::runtime_error&) {
      continue;  // degenerate role tie for this spin; skip
    }
    for (int i = 0; i < 4; ++i) {
      // The paired corner must be the nearest to the true projection.
      const PixelPoint proj = project_point(quad[i], gt, k);
      int nearest = 0;
      double best = 1e300;
      for (int c = 0; c < 4; ++c) {
        const double d2 = (proj.u - shuffled[c].u) * (proj.u - shuffled[c].u) +
                          (proj.v - shuffled[c].v) * (proj.v - shuffled[c].v);
        if (d2 < best) {
          best = d2;
          nearest = c;
        }
      }
      CHECK(perm[i] == nearest);
    }
  }
}
