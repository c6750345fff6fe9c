#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "normint/metrics.hpp"
#include "normint/scene_synth.hpp"

using namespace normint;

namespace {

DepthMap ramp(int w, int h) {
  DepthMap d(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) d(x, y) = 0.3 * x - 0.1 * y * y;
  return d;
}

}  // namespace

TEST_CASE("made examples") {
  const DepthMap gt = ramp(6, 4);
  const Mask mask(6, 4, 1);
  CHECK(made(gt, gt, mask).made == 0.0);

  DepthMap shifted = gt;
  for (double& v : shifted.data()) v += 7.0;
  const MadeResult r = made(shifted, gt, mask);
  CHECK(r.made == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.offset == doctest::Approx(7.0));

  DepthMap half = gt;
  for (int y = 2; y < 4; ++y)
    for (int x = 0; x < 6; ++x) half(x, y) += 1.0;
  CHECK(made(half, gt, mask).made == doctest::Approx(0.5));
}

TEST_CASE("made ignores pixels outside the mask and NaN") {
  DepthMap gt(3, 1, 0.0), pred(3, 1, 0.0);
  pred(2, 0) = 100.0;
  Mask mask(3, 1, 1);
  mask(2, 0) = 0;
  CHECK(made(pred, gt, mask).made == 0.0);
  pred(1, 0) = kNoDepth;
  CHECK(made(pred, gt, mask).pixels == 1);
}

TEST_CASE("made errors") {
  CHECK_THROWS_AS(made(DepthMap(3, 2), DepthMap(2, 3), Mask(3, 2, 1)), Error);
  CHECK_THROWS_AS(made(DepthMap(3, 2), DepthMap(3, 2), Mask(3, 2, 0)), Error);
}

TEST_CASE("made: constant invariance and sign symmetry") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap gt = ramp(9, 7);
    DepthMap plus = gt, minus = gt, moved = gt;
    const double c = 10.0 * n01(rng);
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 9; ++x) {
        const double e = n01(rng);
        plus(x, y) += e;
        minus(x, y) -= e;
        moved(x, y) = plus(x, y) + c;
      }
    const Mask mask(9, 7, 1);
    const double m = made(plus, gt, mask).made;
    CHECK(m >= 0.0);
    CHECK(made(minus, gt, mask).made == doctest::Approx(m).epsilon(1e-12));
    CHECK(made(moved, gt, mask).made == doctest::Approx(m).epsilon(1e-9));
  }
}

TEST_CASE("made without gauge") {
  DepthMap gt(2, 1, 0.0), pred(2, 1, 3.0);
  const MadeResult r = made(pred, gt, Mask(2, 1, 1), Gauge::None);
  CHECK(r.made == 3.0);
  CHECK(r.offset == 0.0);
}

TEST_CASE("discontinuity score examples") {
  const Scene s = make_step(5.0, 32);
  const PixelGraph g = build_graph(s.normals.mask);
  const auto jumps = ground_truth_jumps(g, s);
  SUBCASE("no edits, real seams: recall 0") {
    const auto sc = discontinuity_score(g, std::vector<double>(jumps.size(), 0.0), jumps, 0.5);
    CHECK(sc.recall == 0.0);
    CHECK(sc.ground_truth > 0);
    CHECK(sc.detected == 0);
  }
  SUBCASE("edits exactly on the seams") {
    const auto sc = discontinuity_score(g, jumps, jumps, 0.5);
    CHECK(sc.precision == 1.0);
    CHECK(sc.recall == 1.0);
  }
  SUBCASE("a stray detection lowers precision") {
    std::vector<double> gp = jumps;
    gp[0] = 3.0;  // top-left corner, far from the seam
    const auto sc = discontinuity_score(g, gp, jumps, 0.5);
    CHECK(sc.precision < 1.0);
    CHECK(sc.recall == 1.0);
  }
  SUBCASE("detections one pixel off still count") {
    std::vector<double> gp(jumps.size(), 0.0);
    for (std::size_t i = 0; i < jumps.size(); ++i) {
      if (std::abs(jumps[i]) <= 0.5) continue;
      const AuxEdge& e = g.aux_edges()[i];
      const auto [x, y] = g.pixel_xy(e.pixel_a);
      const int shifted = g.pixel_id(x + 1, y);
      for (int k : g.incident_aux_edges(shifted))
        if (g.aux_edges()[k].axis == Axis::X && g.aux_edges()[k].pixel_a == shifted) gp[k] = 1.0;
    }
    const auto sc = discontinuity_score(g, gp, jumps, 0.5);
    CHECK(sc.precision == 1.0);
    CHECK(sc.recall == 1.0);
  }
}

TEST_CASE("nonzero fraction") {
  CHECK(nonzero_fraction({}, 1e-6) == 0.0);
  CHECK(nonzero_fraction({0.0, 1e-7, 2.0, -3.0}, 1e-6) == 0.5);
}

TEST_CASE("report formats") {
  EvalReport r;
  r.name = "step";
  r.made = 0.25;
  r.offset = -1.0;
  const auto j = nlohmann::json::parse(r.to_json_line());
  CHECK(j["name"] == "step");
  CHECK(j["made"] == 0.25);
  CHECK_FALSE(j.contains("precision"));
  CHECK(r.to_text().find("MADE 0.25") != std::string::npos);
  r.precision = 1.0;
  r.recall = 0.5;
  CHECK(nlohmann::json::parse(r.to_json_line())["recall"] == 0.5);
  CHECK(r.to_json_line().find('\n') == std::string::npos);
}
