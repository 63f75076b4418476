#include <doctest.h>

#include <algorithm>

#include "calib/rng.hpp"
#include "calib/shapeopt.hpp"

using namespace calib;

namespace {

// Central finite difference of the edge point's horizontal coordinate when
// the whole edge moves under se2_exp(kappa * twist), the ring held fixed.
double fd_gradient(const Vec2& a, const Vec2& b, double y_r, const TwistSE2& twist,
                   double step = 1e-6) {
  auto edge_x = [&](double kappa) {
    const Pose2 g = se2_exp(kappa, twist);
    const Vec2 pa = g * a;
    const Vec2 pb = g * b;
    return pa.x() + (pb.x() - pa.x()) / (pb.y() - pa.y()) * (y_r - pa.y());
  };
  return (edge_x(step) - edge_x(-step)) / (2.0 * step);
}

CandidateShape unit_square_shape() { return shape_from_params(0.0, 1.0, Vec2::Zero(), 1.0); }

}  // namespace

TEST_CASE("shape_from_params") {
  const CandidateShape sq = unit_square_shape();
  CHECK(sq.vertices.size() == 4);
  CHECK(sq.width == doctest::Approx(1.0));
  CHECK(sq.height == doctest::Approx(1.0));

  // Violating the elation positivity is rejected.
  CHECK_THROWS(shape_from_params(0.0, 1.0, {2.5, 0.0}, 1.0));

  // A generic member of the family is convex and counterclockwise.
  const CandidateShape s = shape_from_params(0.4, 1.3, {0.25, -0.2}, 1.1);
  for (int i = 0; i < 4; ++i) {
    const Vec2 e0 = s.vertices[(i + 1) % 4] - s.vertices[i];
    const Vec2 e1 = s.vertices[(i + 2) % 4] - s.vertices[(i + 1) % 4];
    CHECK(e0.x() * e1.y() - e0.y() * e1.x() > 0.0);
  }
  CHECK(s.width == doctest::Approx(1.0));  // normalized
}

TEST_CASE("ring_edge_points") {
  const CandidateShape sq = unit_square_shape();

  SUBCASE("one ring through the middle of the unit square") {
    const auto pts = ring_edge_points(sq.vertices, {0.0});
    REQUIRE(pts.size() == 2);
    double lo = std::min(pts[0].x, pts[1].x);
    double hi = std::max(pts[0].x, pts[1].x);
    CHECK(lo == doctest::Approx(-0.5));
    CHECK(hi == doctest::Approx(0.5));
    // Horizontal edges are skipped: both hits are on the vertical sides.
  }

  SUBCASE("ring above the polygon yields nothing") {
    CHECK(ring_edge_points(sq.vertices, {2.0}).empty());
  }

  SUBCASE("edge points lie on the boundary segment") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      CandidateShape s;
      try {
        s = shape_from_params(rng.uniform(-0.6, 0.6), rng.uniform(0.7, 1.5),
                              {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)},
                              rng.uniform(0.8, 1.3));
      } catch (const std::exception&) {
        continue;
      }
      std::vector<double> rings;
      for (int r = 0; r < 4; ++r) rings.push_back(rng.uniform(-0.4 * s.height, 0.4 * s.height));
      for (const RingEdgePoint2& ep : ring_edge_points(s.vertices, rings)) {
        const Vec2& a = s.vertices[ep.edge];
        const Vec2& b = s.vertices[(ep.edge + 1) % 4];
        // (x, y) on segment a-b: collinear and within the bounding span.
        const double cross =
            (b.x() - a.x()) * (ep.y - a.y()) - (b.y() - a.y()) * (ep.x - a.x());
        CHECK(std::abs(cross) < 1e-12 * std::max(1.0, (b - a).squaredNorm()));
        CHECK(ep.x >= std::min(a.x(), b.x()) - 1e-12);
        CHECK(ep.x <= std::max(a.x(), b.x()) + 1e-12);
      }
    }
  }

  SUBCASE("count is even for rings strictly inside a convex polygon") {
    Rng rng(5);
    const CandidateShape s = shape_from_params(0.3, 1.2, {0.1, 0.15}, 1.0);
    double ymin = 1e300, ymax = -1e300;
    for (const Vec2& v : s.vertices) {
      ymin = std::min(ymin, v.y());
      ymax = std::max(ymax, v.y());
    }
    for (int i = 0; i < 50; ++i) {
      const double y = rng.uniform(ymin + 1e-3, ymax - 1e-3);
      CHECK(ring_edge_points(s.vertices, {y}).size() % 2 == 0);
    }
  }
}

TEST_CASE("edge_gradient closed forms") {
  // Vertical edge, pure x-translation: the edge point moves with the shape.
  const Vec2 a(0.5, -0.5), b(0.5, 0.5);
  CHECK(edge_gradient(a, b, 0.0, {0.0, 1.0, 0.0}) == doctest::Approx(1.0));
  // Pure y-translation does nothing to a vertical edge's crossing.
  CHECK(edge_gradient(a, b, 0.0, {0.0, 0.0, 1.0}) == doctest::Approx(0.0));
  // Pure rotation about the origin at ring height y_r: velocity -omega*y_r.
  CHECK(edge_gradient(a, b, 0.3, {1.0, 0.0, 0.0}) == doctest::Approx(-0.3));
  CHECK(edge_gradient(a, b, 0.0, {1.0, 0.0, 0.0}) == doctest::Approx(0.0));

  CHECK_THROWS(edge_gradient({0.0, 0.5}, {1.0, 0.5}, 0.5, {1.0, 0.0, 0.0}));
}

TEST_CASE("edge_gradient matches central finite differences") {
  Rng rng(11);
  int done = 0;
  while (done < 100) {
    const Vec2 a(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Vec2 b(rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (std::abs(a.y() - b.y()) < 0.05) continue;  // keep away from horizontal
    const double y_r = rng.uniform(std::min(a.y(), b.y()), std::max(a.y(), b.y()));
    const TwistSE2 t = TwistSE2::normalized(rng.gaussian(), rng.gaussian(), rng.gaussian());
    const double analytic = edge_gradient(a, b, y_r, t);
    const double numeric = fd_gradient(a, b, y_r, t);
    const double scale = std::max(1.0, std::abs(analytic));
    CHECK(std::abs(analytic - numeric) / scale < 1e-5);
    ++done;
  }
}

TEST_CASE("sensitivity") {
  const CandidateShape sq = unit_square_shape();

  SUBCASE("no illuminated rings gives zero") {
    CHECK(sensitivity(sq, {5.0}, {1.0, 0.0, 0.0}) == 0.0);
  }

  SUBCASE("pure x-translation gives M/h on vertical edges") {
    const std::vector<double> rings = {-0.2, 0.0, 0.2};
    // Six edge points, each with gradient exactly 1.
    CHECK(sensitivity(sq, rings, {0.0, 1.0, 0.0}) == doctest::Approx(6.0 / sq.height));
  }

  SUBCASE("matches a straightforward recomputation on random shapes") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      CandidateShape s;
      try {
        s = shape_from_params(rng.uniform(-0.5, 0.5), rng.uniform(0.8, 1.4),
                              {rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25)}, 1.0);
      } catch (const std::exception&) {
        continue;
      }
      std::vector<double> rings = {-0.25, -0.05, 0.1, 0.3};
      const TwistSE2 t = TwistSE2::normalized(rng.gaussian(), rng.gaussian(), rng.gaussian());
      double oracle = 0.0;
      for (const RingEdgePoint2& ep : ring_edge_points(s.vertices, rings)) {
        const double g =
            edge_gradient(s.vertices[ep.edge], s.vertices[(ep.edge + 1) % 4], ep.y, t);
        oracle += g * g;
      }
      oracle /= s.height;
      CHECK(sensitivity(s, rings, t) == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("shape_score") {
  const CandidateShape sq = unit_square_shape();
  const std::vector<double> rings = {0.0};

  // mu = 0 leaves only the width-scaled sensitivity.
  const TwistSE2 t{0.0, 1.0, 0.0};
  CHECK(shape_score(sq, rings, t, 0.0) ==
        doctest::Approx(sq.width * sensitivity(sq, rings, t)));

  // A single mid ring crossing the unit square adds separation d = 1.
  const TwistSE2 rot{1.0, 0.0, 0.0};
  const double psi = shape_score(sq, rings, rot, 1.0);
  CHECK(psi == doctest::Approx(sq.width * sensitivity(sq, rings, rot) + 1.0));

  // Random shape: equals hand-summed components.
  Rng rng(17);
  const CandidateShape s = shape_from_params(0.2, 1.1, {0.15, -0.1}, 0.95);
  const std::vector<double> rr = {-0.2, 0.05, 0.25};
  const TwistSE2 tw = TwistSE2::normalized(0.5, -0.3, 0.81);
  double dsum = 0.0;
  for (double y : rr) {
    const auto pts = ring_edge_points(s.vertices, {y});
    if (pts.size() >= 2) {
      double lo = 1e300, hi = -1e300;
      for (const auto& ep : pts) {
        lo = std::min(lo, ep.x);
        hi = std::max(hi, ep.x);
      }
      dsum += hi - lo;
    }
  }
  CHECK(shape_score(s, rr, tw, 0.7) ==
        doctest::Approx(s.width * sensitivity(s, rr, tw) + 0.7 * dsum).epsilon(1e-12));
}

TEST_CASE("robust_score reduces to shape_score for a 1x1x1 config") {
  const CandidateShape sq = unit_square_shape();
  ShapeScoreConfig cfg;
  cfg.n_rotations = 1;
  cfg.m_strips = 1;
  cfg.rings_per_strip = 1;
  cfg.sphere_grid = 2;
  cfg.mu = 1.0;
  // With one rotation and one strip the single ring sits mid-strip; the
  // score is the minimum of shape_score over the twist grid.
  const double got = robust_score(sq, cfg);
  double expect = 1e300;
  for (int ia = 0; ia < 2; ++ia) {
    const double polar = M_PI * (ia + 0.5) / 2.0;
    for (int ib = 0; ib < 2; ++ib) {
      const double az = 2.0 * M_PI * ib / 2.0;
      const TwistSE2 t{std::cos(polar), std::sin(polar) * std::cos(az),
                       std::sin(polar) * std::sin(az)};
      expect = std::min(expect, shape_score(sq, {0.0}, t, cfg.mu));
    }
  }
  CHECK(got == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("robust_score is invariant under cyclic vertex relabeling") {
  const CandidateShape s = shape_from_params(0.3, 1.2, {0.2, 0.1}, 1.05);
  ShapeScoreConfig cfg;
  cfg.n_rotations = 3;
  cfg.m_strips = 2;
  cfg.rings_per_strip = 2;
  cfg.sphere_grid = 7;
  const double base = robust_score(s, cfg);
  for (int shift = 1; shift < 4; ++shift) {
    CandidateShape rotated = s;
    std::rotate(rotated.vertices.begin(), rotated.vertices.begin() + shift,
                rotated.vertices.end());
    CHECK(robust_score(rotated, cfg) == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("scaling the shape and rings together keeps the candidate ranking") {
  // Argmax over a fixed candidate set is unchanged when all coordinates
  // (and the strip-derived rings with them) are doubled.
  ShapeScoreConfig cfg;
  cfg.n_rotations = 4;
  cfg.m_strips = 2;
  cfg.rings_per_strip = 3;
  cfg.sphere_grid = 9;

  std::vector<CandidateShape> candidates;
  candidates.push_back(unit_square_shape());
  candidates.push_back(shape_from_params(0.45, 1.25, {0.28, -0.12}, 1.0));
  candidates.push_back(shape_from_params(-0.2, 0.8, {0.05, 0.3}, 1.2));

  auto argmax = [&](double scale) {
    int best = -1;
    double best_score = -1e300;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      CandidateShape s = candidates[i];
      for (Vec2& v : s.vertices) v *= scale;
      s.width *= scale;
      s.height *= scale;
      const double sc = robust_score(s, cfg);
      if (sc > best_score) {
        best_score = sc;
        best = static_cast<int>(i);
      }
    }
    return best;
  };
  CHECK(argmax(1.0) == argmax(2.0));
}

TEST_CASE("per-ring separation doubles when coordinates double") {
  const CandidateShape s = shape_from_params(0.25, 1.1, {0.1, 0.2}, 1.0);
  const std::vector<double> rings = {-0.1, 0.15};
  auto total_d = [&](double scale) {
    std::vector<Vec2> vs;
    for (const Vec2& v : s.vertices) vs.push_back(scale * v);
    std::vector<double> rr;
    for (double y : rings) rr.push_back(scale * y);
    double sum = 0.0;
    for (double y : rr) {
      const auto pts = ring_edge_points(vs, {y});
      double lo = 1e300, hi = -1e300;
      for (const auto& ep : pts) {
        lo = std::min(lo, ep.x);
        hi = std::max(hi, ep.x);
      }
      if (pts.size() >= 2) sum += hi - lo;
    }
    return sum;
  };
  CHECK(total_d(2.0) == doctest::Approx(2.0 * total_d(1.0)).epsilon(1e-12));
}

TEST_CASE("optimizer beats the nominal square at the default config") {
  const ShapeScoreConfig cfg;  // paper-default scoring
  const CandidateShape best = optimize_shape(cfg, 123, 2);
  CHECK(robust_score(best, cfg) >= robust_score(unit_square_shape(), cfg));

  // Feasibility of the optimum: convex, unit width, discernible sides, and
  // clear of any self-symmetry (pose ambiguity).
  CHECK(best.width == doctest::Approx(1.0));
  double min_side = 1e300;
  for (int i = 0; i < 4; ++i)
    min_side = std::min(min_side, (best.vertices[(i + 1) % 4] - best.vertices[i]).norm());
  CHECK(min_side >= 0.1);
  CHECK(symmetry_margin(best.vertices) >= 0.01);
}

TEST_CASE("optimize_shape is deterministic per seed") {
  ShapeScoreConfig cfg;
  cfg.n_rotations = 2;
  cfg.m_strips = 2;
  cfg.rings_per_strip = 2;
  cfg.sphere_grid = 5;
  const CandidateShape a = optimize_shape(cfg, 9, 2);
  const CandidateShape b = optimize_shape(cfg, 9, 2);
  for (int i = 0; i < 4; ++i) CHECK((a.vertices[i] - b.vertices[i]).norm() == 0.0);
}
