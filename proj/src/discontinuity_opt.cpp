#include "normint/discontinuity_opt.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "normint/metrics.hpp"

namespace normint {

std::vector<double> SolverConfig::lambda_cycle() const {
  const double c = lambda_center();
  return {lambda_soft, c, lambda_hard, c};
}

void SolverConfig::validate() const {
  if (!(lambda_soft > 0.0) || !(lambda_soft <= lambda_hard))
    throw Error("config: need 0 < lambda_soft <= lambda_hard");
  if (!(k > 0.0)) throw Error("config: k must be positive");
  if (!(tau > 0.0)) throw Error("config: tau must be positive");
  if (n_max < 4) throw Error("config: n_max must be at least 4");
  if (!(cg_tol > 0.0)) throw Error("config: cg_tol must be positive");
  if (cg_max_iter < 1) throw Error("config: cg_max_iter must be at least 1");
  if (snapshot_every < 0) throw Error("config: snapshot_every must be non-negative");
  camera.validate();
}

double reweight_value(double derivative) {
  const double sq = derivative * derivative;
  return sq <= 1.0 ? 1.0 : 1.0 / sq;
}

EdgeWeights reweight(const PixelGraph& graph, const DepthSolution& depth) {
  EdgeWeights w;
  w.w.resize(graph.aux_edges().size());
  const int n = static_cast<int>(w.w.size());
#pragma omp parallel for schedule(static) if (n > 50000)
  for (int i = 0; i < n; ++i) w.w[i] = reweight_value(aux_derivative(graph, depth.values, i));
  return w;
}

std::vector<double> tangentness_nz(const GradientTargets& targets, const CameraModel& camera) {
  std::vector<double> nz = targets.nz_eff;
  if (camera.is_perspective())
    for (double& v : nz) v /= camera.focal;
  return nz;
}

double tangentness_scale(const PixelGraph& graph, const std::vector<double>& nz, int aux, double tau) {
  const AuxNeighbors& nb = graph.aux_neighbors()[aux];
  const double diff = nz[graph.quad_edges()[nb.quad_a].pixel] - nz[graph.quad_edges()[nb.quad_b].pixel];
  return diff * diff + tau;
}

double local_maximumness(double g_center, double g_prev, double g_next) {
  return 2.0 * g_center * g_center - g_prev * g_prev - g_next * g_next;
}

double filter_response(double laplacian, double k) {
  if (!(laplacian > 0.0)) return 0.0;
  return 1.0 / (1.0 + std::exp(-k * laplacian));
}

std::vector<double> tangentness_scales(const PixelGraph& graph, const std::vector<double>& nz, double tau) {
  std::vector<double> s(graph.aux_edges().size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = tangentness_scale(graph, nz, static_cast<int>(i), tau);
  return s;
}

std::vector<double> filter_gradients(const PixelGraph& graph, const DepthSolution& depth,
                                     const std::vector<double>& scales, double k) {
  const int n = static_cast<int>(graph.aux_edges().size());
  if (scales.size() != static_cast<std::size_t>(n)) throw Error("one tangentness scale per auxiliary edge expected");
  std::vector<double> jump(n), scaled(n), out(n);
#pragma omp parallel for schedule(static) if (n > 50000)
  for (int i = 0; i < n; ++i) {
    jump[i] = aux_derivative(graph, depth.values, i);
    scaled[i] = scales[i] * jump[i];
  }
  // A missing collinear neighbour contributes G = 0.
#pragma omp parallel for schedule(static) if (n > 50000)
  for (int i = 0; i < n; ++i) {
    const AuxNeighbors& nb = graph.aux_neighbors()[i];
    const double prev = nb.aux_prev == PixelGraph::kNone ? 0.0 : scaled[nb.aux_prev];
    const double next = nb.aux_next == PixelGraph::kNone ? 0.0 : scaled[nb.aux_next];
    out[i] = filter_response(local_maximumness(scaled[i], prev, next), k) * jump[i];
  }
  return out;
}

std::vector<double> filter_gradients(const PixelGraph& graph, const DepthSolution& depth,
                                     const std::vector<double>& nz, double k, double tau) {
  return filter_gradients(graph, depth, tangentness_scales(graph, nz, tau), k);
}

OptimizeResult optimize(const NormalMap& normals, const SolverConfig& config) {
  config.validate();
  const CameraModel& camera = config.camera;
  const DepthMode mode = camera.depth_mode();

  OptimizeResult result{build_graph(normals.mask), {}, {}, {}, {}, {}, {}};
  const PixelGraph& graph = result.graph;
  GradientTargets targets = edge_targets(normals, camera, graph);
  const std::vector<double> scales = tangentness_scales(graph, tangentness_nz(targets, camera), config.tau);

  SystemAssembler assembler(graph);
  CgWorkspace workspace;
  EdgeWeights weights = EdgeWeights::ones(graph.aux_edges().size());
  const CgOptions cg{config.cg_tol, config.cg_max_iter, false, config.preconditioner};
  const std::vector<double> cycle = config.lambda_cycle();
  const double lambda_c = config.lambda_center();

  OptimizeTrace& trace = result.trace;
  trace.mode = mode;
  trace.iterations.reserve(config.n_max);
  DepthSolution depth;
  double previous_objective = std::numeric_limits<double>::quiet_NaN();
  int n = 0;

  do {
    for (double lambda : cycle) {
      if (n >= config.n_max) break;
      const LinearSystem& system = assembler.assemble(targets, weights, lambda);
      auto [solution, report] = solve_cg(system, n == 0 ? nullptr : &depth, cg, mode, &workspace);
      if (n == 0) result.first_solve = solution;
      const Energies energies = evaluate_energies(graph, targets, weights, solution.values);
      depth = std::move(solution);

      weights = reweight(graph, depth);
      targets.gprime = filter_gradients(graph, depth, scales, config.k);
      ++n;

      trace.iterations.push_back(IterationRecord{n, lambda, energies.data, energies.disc,
                                                 nonzero_fraction(targets.gprime, config.nonzero_eps), report});
      if (config.snapshot_every > 0 && n % config.snapshot_every == 0)
        trace.snapshots.push_back(Snapshot{n, depth.values, targets.gprime});
    }

    if (config.early_stop && n % 4 == 0) {
      const IterationRecord& last = trace.iterations.back();
      const double objective = last.e_data + lambda_c * last.e_disc;
      if (std::isfinite(previous_objective) &&
          std::abs(objective - previous_objective) <= config.early_stop_tol * std::abs(previous_objective)) {
        trace.stopped_early = true;
        break;
      }
      previous_objective = objective;
    }
  } while (n < config.n_max);

  result.depth_map = average_to_depth_map(graph, depth);
  result.depth = std::move(depth);
  result.gprime = std::move(targets.gprime);
  result.weights = std::move(weights);
  return result;
}

}  // namespace normint
