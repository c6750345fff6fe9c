#pragma once

#include <vector>

#include "normint/energy_solver.hpp"
#include "normint/gradient_field.hpp"
#include "normint/grid_graph.hpp"

namespace normint {

struct SolverConfig {
  double lambda_soft = 0.2;
  double lambda_hard = 1.2;
  int n_max = 5000;
  double k = 1000.0;
  double tau = 1e-2;
  double cg_tol = 1e-7;
  int cg_max_iter = 3000;
  Preconditioner preconditioner = Preconditioner::Jacobi;
  CameraModel camera;
  // Stop when E_v + lambda_c E_disc changes by less than this (relative) over a full cycle.
  bool early_stop = false;
  double early_stop_tol = 1e-9;
  // Keep a copy of depth and g' every N iterations (0 = never).
  int snapshot_every = 0;
  // |g'| above this counts as a detected jump in the trace.
  double nonzero_eps = 1e-6;

  double lambda_center() const { return 0.5 * (lambda_soft + lambda_hard); }
  /// The cycle [soft, center, hard, center].
  std::vector<double> lambda_cycle() const;
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;  // 1-based
  double lambda = 0.0;
  double e_data = 0.0;
  double e_disc = 0.0;
  double nonzero_fraction = 0.0;
  SolveReport cg;
};

struct Snapshot {
  int iteration = 0;
  Eigen::VectorXd values;
  std::vector<double> gprime;
};

struct OptimizeTrace {
  DepthMode mode = DepthMode::Orthographic;
  std::vector<IterationRecord> iterations;
  std::vector<Snapshot> snapshots;
  bool stopped_early = false;
};

struct OptimizeResult {
  PixelGraph graph;
  DepthSolution depth;
  DepthMap depth_map;
  std::vector<double> gprime;
  EdgeWeights weights;
  OptimizeTrace trace;
  // Output of the very first solve (g' = 0, w = 1, lambda_soft).
  DepthSolution first_solve;
};

/// w_e = min(1 / (D_e d)^2, 1), with D_e d = 0 giving 1.
double reweight_value(double derivative);
EdgeWeights reweight(const PixelGraph& graph, const DepthSolution& depth);

/// Per-pixel n_z used by the tangentness scale: n_z orthographic, nz_eff / f perspective.
std::vector<double> tangentness_nz(const GradientTargets& targets, const CameraModel& camera);

double tangentness_scale(const PixelGraph& graph, const std::vector<double>& nz, int aux, double tau);

/// 2 G(e)^2 - G(e_a')^2 - G(e_a'')^2.
double local_maximumness(double g_center, double g_prev, double g_next);

/// 1 / (1 + exp(-k L)) for L > 0, else 0.
double filter_response(double laplacian, double k);

std::vector<double> filter_gradients(const PixelGraph& graph, const DepthSolution& depth,
                                     const std::vector<double>& nz, double k, double tau);
/// s(e) for every auxiliary edge.
std::vector<double> tangentness_scales(const PixelGraph& graph, const std::vector<double>& nz, double tau);
/// Same filter with precomputed s(e).
std::vector<double> filter_gradients(const PixelGraph& graph, const DepthSolution& depth,
                                     const std::vector<double>& scales, double k);

OptimizeResult optimize(const NormalMap& normals, const SolverConfig& config);

}  // namespace normint
