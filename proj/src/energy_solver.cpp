#include "normint/energy_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/SparseCholesky>

#include "normint/parallel.hpp"

namespace normint {

namespace {

int find_slot(const SparseMatrix& m, int row, int col) {
  const int* begin = m.innerIndexPtr() + m.outerIndexPtr()[row];
  const int* end = m.innerIndexPtr() + m.outerIndexPtr()[row + 1];
  const int* it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) throw Error("sparsity pattern is missing an edge entry");
  return static_cast<int>(it - m.innerIndexPtr());
}

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

void multiply(const SparseMatrix& a, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  const int n = static_cast<int>(a.rows());
  const int* outer = a.outerIndexPtr();
  const int* inner = a.innerIndexPtr();
  const double* val = a.valuePtr();
  // Each row is summed by one thread in a fixed order, so results do not
  // depend on the thread count.
#pragma omp parallel for schedule(static) if (n > 20000)
  for (int r = 0; r < n; ++r) {
    double s = 0.0;
    for (int k = outer[r]; k < outer[r + 1]; ++k) s += val[k] * x[inner[k]];
    y[r] = s;
  }
}

void remove_component_means(const LinearSystem& system, Eigen::VectorXd& x) {
  if (system.component_count == 1) {
    x.array() -= x.sum() / static_cast<double>(x.size());
    return;
  }
  std::vector<double> sum(system.component_count, 0.0);
  std::vector<int> count(system.component_count, 0);
  for (int i = 0; i < x.size(); ++i) {
    sum[system.component[i]] += x[i];
    ++count[system.component[i]];
  }
  for (int c = 0; c < system.component_count; ++c) sum[c] /= count[c];
  for (int i = 0; i < x.size(); ++i) x[i] -= sum[system.component[i]];
}

}  // namespace

SystemAssembler::SystemAssembler(const PixelGraph& graph) : graph_(&graph) {
  const int n = graph.vertex_count();
  std::vector<Eigen::Triplet<double>> pattern;
  pattern.reserve(n + 2 * (graph.quad_edges().size() + graph.aux_edges().size()));
  for (int v = 0; v < n; ++v) pattern.emplace_back(v, v, 0.0);
  auto add = [&](int t, int h) {
    pattern.emplace_back(t, h, 0.0);
    pattern.emplace_back(h, t, 0.0);
  };
  for (const QuadEdge& e : graph.quad_edges()) add(e.tail, e.head);
  for (const AuxEdge& e : graph.aux_edges()) add(e.tail, e.head);

  system_.matrix.resize(n, n);
  system_.matrix.setFromTriplets(pattern.begin(), pattern.end());
  system_.matrix.makeCompressed();
  system_.rhs = Eigen::VectorXd::Zero(n);
  system_.component.assign(n, 0);

  auto slots = [&](int t, int h) {
    return Slots{find_slot(system_.matrix, t, t), find_slot(system_.matrix, h, h), find_slot(system_.matrix, t, h),
                 find_slot(system_.matrix, h, t)};
  };
  quad_slots_.reserve(graph.quad_edges().size());
  for (const QuadEdge& e : graph.quad_edges()) quad_slots_.push_back(slots(e.tail, e.head));
  aux_slots_.reserve(graph.aux_edges().size());
  for (const AuxEdge& e : graph.aux_edges()) aux_slots_.push_back(slots(e.tail, e.head));
}

void SystemAssembler::add_edge(const Slots& s, int tail, int head, double stiffness, double flux) {
  double* val = system_.matrix.valuePtr();
  val[s.tt] += stiffness;
  val[s.hh] += stiffness;
  val[s.th] -= stiffness;
  val[s.ht] -= stiffness;
  system_.rhs[head] += flux;
  system_.rhs[tail] -= flux;
}

void SystemAssembler::label_components(const GradientTargets& targets, const EdgeWeights& weights,
                                       double lambda) {
  const PixelGraph& g = *graph_;
  // Labels only depend on which edges couple their endpoints.
  std::vector<std::uint8_t> coupled(g.quad_edges().size() + g.aux_edges().size());
  for (std::size_t i = 0; i < g.quad_edges().size(); ++i) coupled[i] = targets.quad_coeff[i] != 0.0;
  const bool aux_on = lambda != 0.0 && targets.nz_aux != 0.0;
  for (std::size_t i = 0; i < g.aux_edges().size(); ++i)
    coupled[g.quad_edges().size() + i] = aux_on && weights.w[i] != 0.0;
  if (coupled == coupled_) return;
  coupled_ = std::move(coupled);

  DisjointSets sets(g.vertex_count());
  for (std::size_t i = 0; i < g.quad_edges().size(); ++i)
    if (targets.quad_coeff[i] != 0.0) sets.unite(g.quad_edges()[i].tail, g.quad_edges()[i].head);
  if (lambda != 0.0 && targets.nz_aux != 0.0)
    for (std::size_t i = 0; i < g.aux_edges().size(); ++i)
      if (weights.w[i] != 0.0) sets.unite(g.aux_edges()[i].tail, g.aux_edges()[i].head);

  std::vector<int> label(g.vertex_count(), -1);
  system_.component_count = 0;
  for (int v = 0; v < g.vertex_count(); ++v) {
    const int root = sets.find(v);
    if (label[root] == -1) label[root] = system_.component_count++;
    system_.component[v] = label[root];
  }
}

const LinearSystem& SystemAssembler::assemble(const GradientTargets& targets, const EdgeWeights& weights,
                                              double lambda) {
  const PixelGraph& g = *graph_;
  if (weights.w.size() != g.aux_edges().size() || targets.gprime.size() != g.aux_edges().size())
    throw Error("weights and g' must have one entry per auxiliary edge");
  if (targets.quad_coeff.size() != g.quad_edges().size()) throw Error("targets do not match the graph");

  // The quad-edge part only depends on the targets; reuse it while they repeat.
  if (targets.quad_coeff != base_coeff_ || targets.quad_rhs != base_rhs_ || base_values_.empty()) {
    std::fill_n(system_.matrix.valuePtr(), system_.matrix.nonZeros(), 0.0);
    system_.rhs.setZero();
    for (std::size_t i = 0; i < g.quad_edges().size(); ++i) {
      const QuadEdge& e = g.quad_edges()[i];
      const double c = targets.quad_coeff[i];
      add_edge(quad_slots_[i], e.tail, e.head, c * c, c * targets.quad_rhs[i]);
    }
    base_coeff_ = targets.quad_coeff;
    base_rhs_ = targets.quad_rhs;
    base_values_.assign(system_.matrix.valuePtr(), system_.matrix.valuePtr() + system_.matrix.nonZeros());
    base_vector_ = system_.rhs;
  } else {
    std::copy(base_values_.begin(), base_values_.end(), system_.matrix.valuePtr());
    system_.rhs = base_vector_;
  }
  const double nz2 = targets.nz_aux * targets.nz_aux;
  for (std::size_t i = 0; i < g.aux_edges().size(); ++i) {
    const AuxEdge& e = g.aux_edges()[i];
    const double stiffness = lambda * weights.w[i] * nz2;
    add_edge(aux_slots_[i], e.tail, e.head, stiffness, stiffness * targets.gprime[i]);
  }
  label_components(targets, weights, lambda);
  return system_;
}

LinearSystem assemble(const PixelGraph& graph, const GradientTargets& targets, const EdgeWeights& weights,
                      double lambda) {
  SystemAssembler assembler(graph);
  return assembler.assemble(targets, weights, lambda);
}

struct CgWorkspace::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analyzed = false;
  bool valid = false;
  int last_iterations = 0;
  int refactor_after = 10;
  int factorizations = 0;

  void factor(const SparseMatrix& a) {
    double max_diag = 1.0;
    for (int i = 0; i < a.rows(); ++i) max_diag = std::max(max_diag, a.coeff(i, i));
    // The shift makes the singular (per-component constant) system factorable;
    // the constant part is projected out of every preconditioned residual.
    Eigen::SparseMatrix<double> shifted = a;
    for (int i = 0; i < a.rows(); ++i) shifted.coeffRef(i, i) += 1e-10 * max_diag;
    if (!analyzed) {
      ldlt.analyzePattern(shifted);
      analyzed = true;
    }
    ldlt.factorize(shifted);
    if (ldlt.info() != Eigen::Success) throw Error("preconditioner factorization failed");
    valid = true;
    ++factorizations;
  }
};

CgWorkspace::CgWorkspace(int refactor_after) : impl_(std::make_unique<Impl>()) {
  impl_->refactor_after = refactor_after;
}
CgWorkspace::~CgWorkspace() = default;
int CgWorkspace::factorizations() const { return impl_->factorizations; }

std::pair<DepthSolution, SolveReport> solve_cg(const LinearSystem& system, const DepthSolution* warm_start,
                                               const CgOptions& options, DepthMode mode, CgWorkspace* workspace) {
  if (!(options.tol > 0.0)) throw Error("CG tolerance must be positive");
  const int n = system.dimension();
  const SparseMatrix& a = system.matrix;
  const Eigen::VectorXd& b = system.rhs;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (warm_start != nullptr) {
    if (warm_start->values.size() != n) throw Error("warm start has the wrong dimension");
    x = warm_start->values;
  }

  const bool cholesky = options.preconditioner == Preconditioner::Cholesky;
  Eigen::VectorXd inv_diag;
  CgWorkspace local;
  CgWorkspace::Impl& ws = *(workspace != nullptr ? workspace : &local)->impl_;
  if (cholesky) {
    if (!ws.valid || ws.last_iterations > ws.refactor_after) ws.factor(a);
  } else {
    inv_diag.resize(n);
    const int* outer = a.outerIndexPtr();
    const int* inner = a.innerIndexPtr();
    for (int i = 0; i < n; ++i) {
      double d = 0.0;
      for (int k = outer[i]; k < outer[i + 1]; ++k)
        if (inner[k] == i) d = a.valuePtr()[k];
      inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
    }
  }
  auto precondition = [&](const Eigen::VectorXd& res, Eigen::VectorXd& out) {
    if (cholesky) {
      out = ws.ldlt.solve(res);
      remove_component_means(system, out);
    } else {
      out = res.cwiseProduct(inv_diag);
    }
  };

  Eigen::VectorXd r(n), z(n), p(n), q(n);
  multiply(a, x, q);
  r = b - q;

  SolveReport report;
  const double b_norm = b.norm();
  const double scale = b_norm > 0.0 ? b_norm : 1.0;
  auto objective = [&] { return -0.5 * x.dot(b + r); };

  double rel = r.norm() / scale;
  if (!std::isfinite(rel)) throw Error("divergent solve at iteration 0");
  if (options.record_objective) report.objective.push_back(objective());

  if (rel > options.tol) {
    precondition(r, z);
    p = z;
    double rz = r.dot(z);
    for (int it = 1; it <= options.max_iter; ++it) {
      multiply(a, p, q);
      const double pq = p.dot(q);
      if (!std::isfinite(pq)) throw Error("divergent solve at iteration " + std::to_string(it));
      if (pq <= 0.0) break;  // search direction in the null space: nothing left to reduce
      const double alpha = rz / pq;
      x += alpha * p;
      r -= alpha * q;
      report.iterations = it;
      rel = r.norm() / scale;
      if (!std::isfinite(rel)) throw Error("divergent solve at iteration " + std::to_string(it));
      if (options.record_objective) report.objective.push_back(objective());
      if (rel <= options.tol) break;
      precondition(r, z);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
  }
  report.relative_residual = rel;
  report.converged = rel <= options.tol;
  ws.last_iterations = report.iterations;

  remove_component_means(system, x);
  return {DepthSolution{std::move(x), mode}, report};
}

Energies evaluate_energies(const PixelGraph& graph, const GradientTargets& targets, const EdgeWeights& weights,
                           const Eigen::VectorXd& values) {
  Energies e;
  for (std::size_t i = 0; i < graph.quad_edges().size(); ++i) {
    const double r = targets.quad_coeff[i] * quad_derivative(graph, values, static_cast<int>(i)) - targets.quad_rhs[i];
    e.data += r * r;
  }
  for (std::size_t i = 0; i < graph.aux_edges().size(); ++i) {
    const double r = targets.nz_aux * (aux_derivative(graph, values, static_cast<int>(i)) - targets.gprime[i]);
    e.disc += weights.w[i] * r * r;
  }
  return e;
}

DepthSolution poisson_baseline(const NormalMap& normals, const CameraModel& camera, const PixelGraph& graph,
                               const CgOptions& options, double aux_weight, SolveReport* report) {
  const GradientTargets targets = edge_targets(normals, camera, graph);
  SystemAssembler assembler(graph);
  const LinearSystem& system =
      assembler.assemble(targets, EdgeWeights::ones(graph.aux_edges().size()), aux_weight);
  auto [solution, rep] = solve_cg(system, nullptr, options, camera.depth_mode());
  if (report != nullptr) *report = rep;
  return solution;
}

}  // namespace normint
