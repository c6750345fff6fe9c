#include <doctest.h>

#include <cmath>

#include "normint/discontinuity_opt.hpp"
#include "normint/metrics.hpp"
#include "normint/scene_synth.hpp"

using namespace normint;

TEST_CASE("reweight examples") {
  CHECK(reweight_value(0.0) == 1.0);
  CHECK(reweight_value(2.0) == 0.25);
  CHECK(reweight_value(-2.0) == 0.25);
  CHECK(reweight_value(0.5) == 1.0);
  CHECK(reweight_value(1.0) == 1.0);
}

TEST_CASE("tangentness scale examples") {
  // 1x2 mask: one vertical pair, two south bridges.
  const PixelGraph g = build_graph(Mask(1, 2, 1));
  REQUIRE(g.aux_edges().size() == 2);
  CHECK(tangentness_scale(g, {1.0, 1.0}, 0, 1e-2) == 1e-2);
  CHECK(tangentness_scale(g, {1.0, 0.2}, 0, 1e-2) == doctest::Approx(0.65).epsilon(1e-15));
  CHECK(tangentness_scale(g, {0.2, 1.0}, 1, 1e-2) == doctest::Approx(0.65).epsilon(1e-15));
  CHECK(tangentness_scale(g, {0.3, 0.3}, 1, 1e-2) == 1e-2);
}

TEST_CASE("local maximumness and filter response") {
  // G^2 of 4 with neighbours 1 and 1.
  const double l = local_maximumness(2.0, 1.0, -1.0);
  CHECK(l == 6.0);
  CHECK(filter_response(l, 1000.0) == doctest::Approx(1.0));
  CHECK(filter_response(0.0, 1000.0) == 0.0);
  CHECK(filter_response(-3.0, 1000.0) == 0.0);
  CHECK(filter_response(1e-3, 1000.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("filter treats missing neighbours as zero") {
  // 3x1: bridges 0/1 between pixels 0 and 1, 2/3 between 1 and 2.
  const PixelGraph g = build_graph(Mask(3, 1, 1));
  DepthSolution d{Eigen::VectorXd::Zero(12), DepthMode::Orthographic};
  for (int v = 4; v < 12; ++v) d.values[v] = 2.0;  // jump between pixel 0 and 1 only
  const std::vector<double> nz(3, 1.0);
  const std::vector<double> gp = filter_gradients(g, d, nz, 1000.0, 1e-2);
  // Facing the camera, s = tau: G = 0.02 and L = 2 G^2 with zero neighbours.
  const double expected = 2.0 / (1.0 + std::exp(-1000.0 * 2.0 * 0.02 * 0.02));
  CHECK(gp[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(gp[1] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(gp[2] == 0.0);
  CHECK(gp[3] == 0.0);
}

TEST_CASE("flat depth filters to zero everywhere") {
  const PixelGraph g = build_graph(Mask(5, 5, 1));
  const DepthSolution d{Eigen::VectorXd::Constant(g.vertex_count(), 4.0), DepthMode::Orthographic};
  for (double v : filter_gradients(g, d, std::vector<double>(25, 1.0), 1000.0, 1e-2)) CHECK(v == 0.0);
}

TEST_CASE("lambda schedule") {
  SolverConfig c;
  CHECK(c.lambda_center() == doctest::Approx(0.7).epsilon(1e-15));
  const auto cycle = c.lambda_cycle();
  REQUIRE(cycle.size() == 4);
  CHECK(cycle[0] == 0.2);
  CHECK(cycle[2] == 1.2);
  CHECK(cycle[1] == cycle[3]);
}

TEST_CASE("config validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.lambda_soft = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SolverConfig{};
  c.n_max = 3;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SolverConfig{};
  c.tau = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SolverConfig{};
  c.k = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SolverConfig{};
  c.lambda_soft = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("tilted plane: exact depth and no edits") {
  const Scene s = make_plane(0.75, -0.3, 16, 16);
  SolverConfig c;
  c.n_max = 400;
  c.cg_tol = 1e-12;
  const OptimizeResult r = optimize(s.normals, c);
  const MadeResult m = made(r.depth_map, s.gt_depth, s.normals.mask);
  double worst = 0.0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) worst = std::max(worst, std::abs(r.depth_map(x, y) - s.gt_depth(x, y) - m.offset));
  CHECK(worst < 1e-6);
  for (double v : r.gprime) CHECK(std::abs(v) < 1e-9);
  for (double w : r.weights.w) CHECK(w == 1.0);
}

TEST_CASE("trace follows the lambda cycle and respects n_max") {
  const Scene s = make_plane(0.1, 0.2, 8, 8);
  SolverConfig c;
  c.n_max = 10;
  const OptimizeResult r = optimize(s.normals, c);
  REQUIRE(r.trace.iterations.size() == 10);
  const double expected[4] = {0.2, 0.7, 1.2, 0.7};
  for (std::size_t i = 0; i < r.trace.iterations.size(); ++i) {
    CHECK(r.trace.iterations[i].iteration == static_cast<int>(i) + 1);
    CHECK(r.trace.iterations[i].lambda == doctest::Approx(expected[i % 4]).epsilon(1e-15));
  }
}

TEST_CASE("first solve is bit-identical to the baseline at lambda_soft") {
  const Scene s = add_gradient_noise(make_step(5.0, 16), 0.05, 3);
  SolverConfig c;
  c.n_max = 4;
  const OptimizeResult r = optimize(s.normals, c);
  const DepthSolution base = poisson_baseline(s.normals, s.camera, r.graph, CgOptions{}, c.lambda_soft);
  REQUIRE(base.values.size() == r.first_solve.values.size());
  for (Eigen::Index i = 0; i < base.values.size(); ++i) CHECK(base.values[i] == r.first_solve.values[i]);
}

TEST_CASE("weights and edits stay in range") {
  const Scene s = add_gradient_noise(make_step(5.0, 24), 0.1, 21);
  SolverConfig c;
  c.n_max = 40;
  const OptimizeResult r = optimize(s.normals, c);
  for (double w : r.weights.w) {
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
  }
  for (std::size_t i = 0; i < r.gprime.size(); ++i) {
    const double jump = aux_derivative(r.graph, r.depth.values, static_cast<int>(i));
    CHECK(std::abs(r.gprime[i]) <= std::abs(jump) * (1.0 + 1e-15));
  }
  // The final weights are the reweighting of the final depth.
  const EdgeWeights again = reweight(r.graph, r.depth);
  CHECK(again.w == r.weights.w);
}

TEST_CASE("identical inputs give identical runs") {
  const Scene s = add_gradient_noise(make_step(5.0, 20), 0.1, 5);
  SolverConfig c;
  c.n_max = 60;
  c.snapshot_every = 20;
  const OptimizeResult a = optimize(s.normals, c);
  const OptimizeResult b = optimize(s.normals, c);
  CHECK(a.depth.values == b.depth.values);
  CHECK(a.gprime == b.gprime);
  CHECK(a.weights.w == b.weights.w);
  REQUIRE(a.trace.iterations.size() == b.trace.iterations.size());
  for (std::size_t i = 0; i < a.trace.iterations.size(); ++i) {
    CHECK(a.trace.iterations[i].e_data == b.trace.iterations[i].e_data);
    CHECK(a.trace.iterations[i].e_disc == b.trace.iterations[i].e_disc);
    CHECK(a.trace.iterations[i].cg.iterations == b.trace.iterations[i].cg.iterations);
  }
  REQUIRE(a.trace.snapshots.size() == 3);
  CHECK(a.trace.snapshots[1].iteration == 40);
}

TEST_CASE("step scene: jump recovered, edits confined to the seam") {
  const Scene s = make_step(5.0, 32);
  SolverConfig c;
  c.early_stop = true;
  const OptimizeResult r = optimize(s.normals, c);
  CHECK(made(r.depth_map, s.gt_depth, s.normals.mask).made < 0.05);
  CHECK(nonzero_fraction(r.gprime, c.nonzero_eps) <= 0.05);
  const int seam = static_cast<int>(s.params.at("seam_column"));
  for (std::size_t i = 0; i < r.gprime.size(); ++i) {
    if (std::abs(r.gprime[i]) <= c.nonzero_eps) continue;
    // Bridge at corner column x + 0.5 of the tail pixel lies between pixel columns.
    const double column = r.graph.vertex_position(r.graph.aux_edges()[i].tail).x() + 0.5;
    CHECK(std::abs(column - seam) <= 1.0);
  }
  const auto score = discontinuity_score(r.graph, r.gprime, ground_truth_jumps(r.graph, s), 0.5);
  CHECK(score.precision >= 0.9);
  CHECK(score.recall >= 0.9);
}

TEST_CASE("early stop ends on a full cycle") {
  const Scene s = make_plane(0.3, 0.3, 12, 12);
  SolverConfig c;
  c.early_stop = true;
  const OptimizeResult r = optimize(s.normals, c);
  CHECK(r.trace.stopped_early);
  CHECK(r.trace.iterations.size() % 4 == 0);
  CHECK(r.trace.iterations.size() < 5000);
}

TEST_CASE("perspective runs on log depth") {
  const Scene s = make_perspective_plane(Eigen::Vector3d(0.2, -0.1, 1.0), 500.0, 16, 500.0);
  SolverConfig c;
  c.camera = s.camera;
  c.n_max = 8;
  c.cg_tol = 1e-12;
  const OptimizeResult r = optimize(s.normals, c);
  CHECK(r.trace.mode == DepthMode::Perspective);
  CHECK(r.depth.mode == DepthMode::Perspective);
  // Depth is recovered up to scale: compare log ratios.
  const double ref = std::log(r.depth_map(0, 0) / s.gt_depth(0, 0));
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) CHECK(std::abs(std::log(r.depth_map(x, y) / s.gt_depth(x, y)) - ref) < 1e-6);
}
