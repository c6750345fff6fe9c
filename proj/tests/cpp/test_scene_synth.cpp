#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <Eigen/Geometry>

#include "normint/scene_synth.hpp"

using namespace normint;

namespace {

bool same_scene(const Scene& a, const Scene& b) {
  if (!(a.normals.mask == b.normals.mask)) return false;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (a.normals.normals(x, y) != b.normals.normals(x, y)) return false;
      const double da = a.gt_depth(x, y), db = b.gt_depth(x, y);
      if (!(da == db || (std::isnan(da) && std::isnan(db)))) return false;
    }
  return true;
}

// Quad-edge corner differences of the ground truth must equal the targets on
// pieces that are affine within each pixel.
double worst_target_error(const Scene& s) {
  const PixelGraph g = build_graph(s.normals.mask);
  const GradientTargets t = edge_targets(s.normals, s.camera, g);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.quad_edges().size(); ++i) {
    const QuadEdge& e = g.quad_edges()[i];
    const auto [x, y] = g.pixel_xy(e.pixel);
    const auto& c = s.gt_corners(x, y);
    const double slope = c[static_cast<int>(PixelGraph::vertex_corner(e.head))] -
                         c[static_cast<int>(PixelGraph::vertex_corner(e.tail))];
    worst = std::max(worst, std::abs(t.ghat(static_cast<int>(i)) - slope));
  }
  return worst;
}

std::set<int> seam_columns(const Scene& s) {
  const PixelGraph g = build_graph(s.normals.mask);
  const auto jumps = ground_truth_jumps(g, s);
  std::set<int> cols;
  for (std::size_t i = 0; i < jumps.size(); ++i)
    if (std::abs(jumps[i]) > 1e-9 && g.aux_edges()[i].axis == Axis::X)
      cols.insert(g.pixel_xy(g.aux_edges()[i].pixel_b)[0]);
  return cols;
}

}  // namespace

TEST_CASE("plane examples") {
  SUBCASE("flat") {
    const Scene s = make_plane(0, 0, 4, 4);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) CHECK(s.normals.normals(x, y) == Eigen::Vector3d(0, 0, 1));
  }
  SUBCASE("unit slope in x") {
    // Depth grows with x, so the surface (at z = -depth) falls away to the
    // right and its normal leans toward +x.
    const Scene s = make_plane(1, 0, 4, 4);
    CHECK((s.normals.normals(2, 1) - Eigen::Vector3d(1, 0, 1) / std::sqrt(2.0)).norm() < 1e-15);
  }
  SUBCASE("slope 0.75 gives x target 0.75") {
    const Scene s = make_plane(0.75, 0, 5, 3);
    const PixelGraph g = build_graph(s.normals.mask);
    const GradientTargets t = edge_targets(s.normals, s.camera, g);
    for (std::size_t i = 0; i < g.quad_edges().size(); ++i)
      if (g.quad_edges()[i].axis == Axis::X) CHECK(t.ghat(static_cast<int>(i)) == doctest::Approx(0.75));
  }
  SUBCASE("too small") { CHECK_THROWS_AS(make_plane(0, 0, 1, 4), Error); }
}

TEST_CASE("analytic targets on smooth pieces") {
  CHECK(worst_target_error(make_plane(0.75, -0.3, 9, 7)) < 1e-10);
  CHECK(worst_target_error(make_step(5.0, 32)) < 1e-10);
  CHECK(worst_target_error(make_step(2.0, 24, 0.5)) < 1e-10);
  CHECK(worst_target_error(make_comb(4, 5.0, 64)) < 1e-10);
  CHECK(worst_target_error(make_comb(3, 2.0, 40, 0.0)) < 1e-10);
}

TEST_CASE("step has one seam column") {
  const Scene s = make_step(5.0, 64);
  const auto cols = seam_columns(s);
  REQUIRE(cols.size() == 1);
  CHECK(*cols.begin() == 32);
  CHECK(s.gt_depth(40, 0) - s.gt_depth(20, 0) > 5.0);
}

TEST_CASE("comb has two seams per tooth") {
  for (int teeth : {4, 8}) {
    const Scene s = make_comb(teeth, 5.0, 64);
    CHECK(seam_columns(s).size() == static_cast<std::size_t>(2 * teeth));
  }
}

TEST_CASE("sphere silhouette is an occlusion ring") {
  const Scene s = make_sphere_on_plane(20.0, 64);
  const PixelGraph g = build_graph(s.normals.mask);
  const auto jumps = ground_truth_jumps(g, s);
  const double c = 31.5;
  int seams = 0;
  for (std::size_t i = 0; i < jumps.size(); ++i) {
    if (std::abs(jumps[i]) < 1e-9) continue;
    ++seams;
    const Eigen::Vector2d p = g.vertex_position(g.aux_edges()[i].tail);
    CHECK(std::abs(std::hypot(p.x() - c, p.y() - c) - 20.0) < 1.5);
  }
  CHECK(seams > 100);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) CHECK(s.normals.normals(x, y).z() > 0.0);
}

TEST_CASE("degenerate geometry is rejected") {
  CHECK_THROWS_AS(make_step(0.0, 64), Error);
  CHECK_THROWS_AS(make_step(5.0, 4), Error);
  CHECK_THROWS_AS(make_comb(0, 5.0, 64), Error);
  CHECK_THROWS_AS(make_comb(40, 5.0, 64), Error);
  CHECK_THROWS_AS(make_sphere_on_plane(40.0, 64), Error);
  CHECK_THROWS_AS(make_perspective_plane(Eigen::Vector3d(0, 0, -1), 10, 8, 100), Error);
}

TEST_CASE("noise") {
  const Scene base = make_plane(0, 0, 64, 64);
  SUBCASE("sigma 0 leaves the scene unchanged") { CHECK(same_scene(add_gradient_noise(base, 0.0, 1), base)); }
  SUBCASE("same seed, same scene; different seed, different scene") {
    CHECK(same_scene(add_gradient_noise(base, 0.1, 9), add_gradient_noise(base, 0.1, 9)));
    CHECK_FALSE(same_scene(add_gradient_noise(base, 0.1, 9), add_gradient_noise(base, 0.1, 10)));
  }
  SUBCASE("mean normal of a noisy flat plane") {
    const Scene s = add_gradient_noise(base, 0.1, 42);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        CHECK(s.normals.normals(x, y).norm() == doctest::Approx(1.0));
        mean += s.normals.normals(x, y);
      }
    mean /= 64.0 * 64.0;
    CHECK((mean - Eigen::Vector3d(0, 0, 1)).norm() < 0.02);

    // Sampling oracle for E[n] with an independent generator.
    std::mt19937 rng(2718);
    std::normal_distribution<double> g(0.0, 0.1);
    Eigen::Vector3d expected = Eigen::Vector3d::Zero();
    const int samples = 200000;
    for (int i = 0; i < samples; ++i) expected += Eigen::Vector3d(g(rng), g(rng), 1.0).normalized();
    expected /= samples;
    CHECK((mean - expected).norm() < 0.02);
  }
  SUBCASE("negative sigma") { CHECK_THROWS_AS(add_gradient_noise(base, -1.0, 1), Error); }
}

TEST_CASE("holes") {
  const Scene base = make_step(5.0, 64);
  SUBCASE("empty spec leaves the scene unchanged") { CHECK(same_scene(punch_holes(base, HoleSpec{}, 3), base)); }
  SUBCASE("one disk removes about its area") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      const Scene s = punch_holes(base, HoleSpec{1, 3.0}, seed);
      const double removed = static_cast<double>(count_masked(base.normals.mask) - count_masked(s.normals.mask));
      // Lattice points inside a disk of radius r differ from pi r^2 by at most
      // one ring of pixels; holes clipped by the border remove fewer.
      const double area = std::numbers::pi * 9.0;
      const double ring = 2.0 * std::numbers::pi * 3.0;
      CAPTURE(seed);
      CHECK(removed <= area + ring);
      bool clipped = false;
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
          if (!s.normals.mask(x, y) && (x == 0 || y == 0 || x == 63 || y == 63)) clipped = true;
      if (!clipped) CHECK(removed >= area - ring);
    }
  }
  SUBCASE("no auxiliary edge touches a hole") {
    const Scene s = punch_holes(base, HoleSpec{5, 3.0}, 11);
    const PixelGraph g = build_graph(s.normals.mask);
    for (const AuxEdge& e : g.aux_edges()) {
      const auto [ax, ay] = g.pixel_xy(e.pixel_a);
      const auto [bx, by] = g.pixel_xy(e.pixel_b);
      CHECK(s.normals.mask(ax, ay));
      CHECK(s.normals.mask(bx, by));
    }
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        if (!s.normals.mask(x, y)) CHECK(std::isnan(s.gt_depth(x, y)));
  }
  SUBCASE("deterministic per seed") {
    CHECK(same_scene(punch_holes(base, HoleSpec{5, 3.0}, 11), punch_holes(base, HoleSpec{5, 3.0}, 11)));
  }
  SUBCASE("removing everything is rejected") { CHECK_THROWS_AS(punch_holes(base, HoleSpec{1, 200.0}, 1), Error); }
}

TEST_CASE("perspective plane normals match its depth") {
  const Scene s = make_perspective_plane(Eigen::Vector3d(0.3, 0.2, 1.0), 400.0, 16, 400.0);
  const double c = 7.5, f = 400.0;
  // Back-project three pixel centres and compare the plane normal.
  auto point = [&](int x, int y) {
    const double d = s.gt_depth(x, y);
    return Eigen::Vector3d((x - c) * d / f, -(y - c) * d / f, -d);
  };
  const Eigen::Vector3d n = (point(15, 0) - point(0, 0)).cross(point(0, 15) - point(0, 0)).normalized();
  CHECK((n + s.normals.normals(3, 3)).norm() < 1e-9);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) CHECK(s.gt_depth(x, y) > 0.0);
}
