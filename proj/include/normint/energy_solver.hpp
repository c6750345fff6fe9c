#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "normint/gradient_field.hpp"
#include "normint/grid_graph.hpp"

namespace normint {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Normal equations A^T W A d = A^T W b of the stacked edge residuals.
struct LinearSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  // Connected components of the vertex coupling graph (edges with nonzero
  // weight); the solution is pinned to zero mean on each.
  std::vector<int> component;
  int component_count = 0;

  int dimension() const { return static_cast<int>(rhs.size()); }
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  // Quadratic objective 0.5 x^T A x - b^T x after each iteration, when requested.
  std::vector<double> objective;
};

enum class Preconditioner { Jacobi, Cholesky };

struct CgOptions {
  double tol = 1e-7;
  int max_iter = 3000;
  bool record_objective = false;
  /// Cholesky factors the system plus a tiny diagonal shift (see CgWorkspace).
  Preconditioner preconditioner = Preconditioner::Jacobi;
};

/// Keeps the sparsity pattern of the graph's normal equations and refills the
/// values in place. Summation order is fixed by edge order.
class SystemAssembler {
 public:
  explicit SystemAssembler(const PixelGraph& graph);

  const LinearSystem& assemble(const GradientTargets& targets, const EdgeWeights& weights, double lambda);
  const LinearSystem& system() const { return system_; }

 private:
  struct Slots {
    int tt, hh, th, ht;
  };

  void add_edge(const Slots& s, int tail, int head, double stiffness, double flux);
  void label_components(const GradientTargets& targets, const EdgeWeights& weights, double lambda);

  const PixelGraph* graph_;
  LinearSystem system_;
  std::vector<Slots> quad_slots_;
  std::vector<Slots> aux_slots_;
  std::vector<std::uint8_t> coupled_;
  std::vector<double> base_coeff_, base_rhs_, base_values_;
  Eigen::VectorXd base_vector_;
};

LinearSystem assemble(const PixelGraph& graph, const GradientTargets& targets, const EdgeWeights& weights,
                      double lambda);

/// Keeps a Cholesky preconditioner alive across solves of systems with one
/// sparsity pattern. The factor goes stale as weights change and is rebuilt
/// once a solve needs more than `refactor_after` iterations.
class CgWorkspace {
 public:
  explicit CgWorkspace(int refactor_after = 10);
  ~CgWorkspace();
  CgWorkspace(const CgWorkspace&) = delete;
  CgWorkspace& operator=(const CgWorkspace&) = delete;

  int factorizations() const;

 private:
  friend std::pair<DepthSolution, SolveReport> solve_cg(const struct LinearSystem&, const DepthSolution*,
                                                        const struct CgOptions&, DepthMode, CgWorkspace*);
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Preconditioned conjugate gradients, warm-started when `warm_start` is
/// given, followed by per-component mean removal. Without a workspace the
/// Cholesky preconditioner is factored fresh. Throws Error naming the
/// iteration when a non-finite value appears.
std::pair<DepthSolution, SolveReport> solve_cg(const LinearSystem& system, const DepthSolution* warm_start,
                                               const CgOptions& options, DepthMode mode = DepthMode::Orthographic,
                                               CgWorkspace* workspace = nullptr);

/// E_v and E_disc at a given solution.
struct Energies {
  double data = 0.0;
  double disc = 0.0;
};
Energies evaluate_energies(const PixelGraph& graph, const GradientTargets& targets, const EdgeWeights& weights,
                           const Eigen::VectorXd& values);

/// Least-squares integration with w = 1 and g' = 0. aux_weight = 1 is the
/// plain Horn-Brooks reference; the optimizer's first solve uses lambda_soft.
DepthSolution poisson_baseline(const NormalMap& normals, const CameraModel& camera, const PixelGraph& graph,
                               const CgOptions& options = {}, double aux_weight = 1.0,
                               SolveReport* report = nullptr);

}  // namespace normint
