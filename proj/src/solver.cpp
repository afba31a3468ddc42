#include "isr/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#ifdef ISR_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "isr/error.hpp"

namespace isr {

const char* scheme_name(Scheme s) { return s == Scheme::Monolithic ? "monolithic" : "staggered"; }

void TimeSteppingConfig::validate() const {
  if (!(dt > 0.0)) throw InvalidArgument("time stepping: dt must be positive");
  if (!(t_end >= 0.0)) throw InvalidArgument("time stepping: t_end must be non-negative");
  if (!(newton_tol_abs > 0.0) || !(newton_tol_rel > 0.0))
    throw InvalidArgument("time stepping: Newton tolerances must be positive");
  if (max_newton_iters < 1) throw InvalidArgument("time stepping: max_newton_iters >= 1");
  if (max_retries < 0) throw InvalidArgument("time stepping: max_retries >= 0");
}

// ---------------------------------------------------------------------------

void apply_dirichlet(SparseSystem& system, const std::vector<int>& dofs,
                     const std::vector<double>& values) {
  const int n = static_cast<int>(system.K.rows());
  if (dofs.size() != values.size())
    throw InvalidArgument("apply_dirichlet: dofs and values differ in length");
  if (static_cast<int>(system.fixed.size()) != n) system.fixed.assign(n, 0);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  for (size_t k = 0; k < dofs.size(); ++k) {
    if (dofs[k] < 0 || dofs[k] >= n) throw InvalidArgument("apply_dirichlet: dof out of range");
    system.fixed[dofs[k]] = 1;
    v(dofs[k]) = values[k];
  }
  SparseMatrix& K = system.K;
  K.makeCompressed();
  for (int col = 0; col < K.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(K, col); it; ++it) {
      const int row = static_cast<int>(it.row());
      if (system.fixed[col] && !system.fixed[row]) system.rhs(row) -= it.value() * v(col);
    }
  bool has_diag_for_all = true;
  std::vector<char> seen(n, 0);
  for (int col = 0; col < K.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(K, col); it; ++it) {
      const int row = static_cast<int>(it.row());
      if (system.fixed[row] || system.fixed[col]) {
        it.valueRef() = row == col ? 1.0 : 0.0;
        if (row == col) seen[row] = 1;
      }
    }
  for (int i = 0; i < n; ++i)
    if (system.fixed[i]) {
      if (!seen[i]) has_diag_for_all = false;
      system.rhs(i) = v(i);
    }
  if (!has_diag_for_all)
    throw InvalidArgument("apply_dirichlet: matrix does not store the diagonal of a fixed dof");
}

AssemblyPlan::AssemblyPlan(int ndof, const std::vector<std::vector<int>>& element_dofs) {
  std::vector<Eigen::Triplet<double>> trip;
  size_t total = 0;
  for (const auto& d : element_dofs) total += d.size() * d.size();
  trip.reserve(total);
  for (const auto& d : element_dofs)
    for (int r : d)
      for (int c : d) trip.emplace_back(r, c, 0.0);
  pattern_.resize(ndof, ndof);
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();

  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  slots_.resize(element_dofs.size());
  sizes_.resize(element_dofs.size());
  for (size_t e = 0; e < element_dofs.size(); ++e) {
    const auto& d = element_dofs[e];
    const int m = static_cast<int>(d.size());
    sizes_[e] = m;
    slots_[e].resize(static_cast<size_t>(m) * m);
    for (int c = 0; c < m; ++c) {
      const int* begin = inner + outer[d[c]];
      const int* end = inner + outer[d[c] + 1];
      for (int r = 0; r < m; ++r) {
        const int* pos = std::lower_bound(begin, end, d[r]);
        slots_[e][r * m + c] = static_cast<int>(pos - inner);
      }
    }
  }
}

// ---------------------------------------------------------------------------

State Model::initial_state() const {
  State s;
  const int n = mesh.num_nodes();
  s.x = Eigen::VectorXd::Zero(kDofsPerNode * n);
  std::vector<char> done(n, 0);
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int node : mesh.elements[e]) {
      if (done[node]) continue;
      done[node] = 1;
      s.x(dof_index(node, 2)) = materials[e].species.c_E_eq;
      s.x(dof_index(node, 3)) = materials[e].species.rho_S_eq;
    }
  for (size_t k = 0; k < fixed_dofs.size(); ++k) s.x(fixed_dofs[k]) = fixed_values[k];
  return s;
}

void Model::validate() const {
  mesh.validate();
  if (static_cast<int>(materials.size()) != mesh.num_elements())
    throw InvalidArgument("model: one material per element required");
  if (fixed_dofs.size() != fixed_values.size())
    throw InvalidArgument("model: fixed dofs and values differ in length");
  const int ndof = kDofsPerNode * mesh.num_nodes();
  for (int d : fixed_dofs)
    if (d < 0 || d >= ndof || d % kDofsPerNode < 4)
      throw InvalidArgument("model: Dirichlet constraints apply to displacement dofs only");
  if (monitor_node < 0 || monitor_node >= mesh.num_nodes())
    throw InvalidArgument("model: monitor node out of range");
  if (!(flux.p_en >= 0.0)) throw InvalidArgument("model: p_en must be non-negative");
  flux.profile.validate();
  for (const ElementMaterial& m : materials) {
    m.species.validate();
    m.structural.validate();
  }
}

// ---------------------------------------------------------------------------

struct Simulator::LinearSolvers {
#ifdef ISR_HAVE_UMFPACK
  Eigen::UmfPackLU<SparseMatrix> umf;
  Eigen::Index umf_nnz = -1;  // pattern of the current symbolic analysis
#endif
  Eigen::SparseLU<SparseMatrix> lu;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_species;
  bool species_analyzed = false;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_u;
  bool u_analyzed = false;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double>>
      cg;
  Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> bicg;
};

Simulator::Simulator(const Model& model, const TimeSteppingConfig& config)
    : model_(model), config_(config), solvers_(std::make_unique<LinearSolvers>()) {
  config_.validate();
  model_.validate();
  const Mesh& mesh = model_.mesh;
  const int nn = mesh.num_nodes();
  const int ne = mesh.num_elements();

  geometry_.reserve(ne);
  for (int e = 0; e < ne; ++e) geometry_.push_back(element_geometry(mesh, e));
  node_weight_ = Eigen::VectorXd::Zero(nn);
  for (int e = 0; e < ne; ++e)
    for (int n : geometry_[e].nodes) node_weight_(n) += geometry_[e].volume;

  const SpeciesParams& ref = model_.materials.front().species;
  const std::array<double, 4> species_scale{ref.c_P_th, ref.c_T_th, ref.c_E_eq, ref.rho_S_eq};
  scale_ = Eigen::VectorXd::Ones(kDofsPerNode * nn);
  for (int n = 0; n < nn; ++n)
    for (int f = 0; f < 4; ++f) scale_(dof_index(n, f)) = species_scale[f] > 0 ? species_scale[f] : 1.0;

  if (config_.freeze_mechanics) {
    for (int n = 0; n < nn; ++n)
      for (int i = 0; i < 3; ++i) constrained_.push_back(u_dof(n, i));
    constrained_values_.assign(constrained_.size(), 0.0);
  } else {
    constrained_ = model_.fixed_dofs;
    constrained_values_ = model_.fixed_values;
  }
  fixed_.assign(kDofsPerNode * nn, 0);
  for (int d : constrained_) fixed_[d] = 1;
}

Simulator::~Simulator() = default;

ElementState Simulator::gather(int e, const Eigen::VectorXd& x, const Eigen::VectorXd& x_old,
                               const Eigen::VectorXd& J_nodal,
                               const Eigen::VectorXd& J_nodal_old) const {
  ElementState s;
  const auto& nodes = geometry_[e].nodes;
  for (int a = 0; a < 8; ++a) {
    const int n = nodes[a];
    for (int X = 0; X < 4; ++X) {
      s.c[X](a) = x(dof_index(n, X));
      s.c_old[X](a) = x_old(dof_index(n, X));
    }
    for (int i = 0; i < 3; ++i) {
      s.u(a, i) = x(u_dof(n, i));
      s.u_old(a, i) = x_old(u_dof(n, i));
    }
    s.J_nodal(a) = J_nodal(n);
    s.J_nodal_old(a) = J_nodal_old(n);
  }
  return s;
}

Eigen::VectorXd Simulator::nodal_J(const Eigen::VectorXd& x) const {
  std::vector<std::array<double, 8>> Jq(geometry_.size());
  Eigen::Matrix<double, 8, 3> u;
  for (size_t e = 0; e < geometry_.size(); ++e) {
    for (int a = 0; a < 8; ++a) u.row(a) = x.segment<3>(u_dof(geometry_[e].nodes[a], 0)).transpose();
    Jq[e] = qp_jacobians(geometry_[e], u);
  }
  return project_nodal_J(geometry_, model_.mesh.num_nodes(), Jq);
}

namespace {

void quad_data(const Mesh& mesh, const SurfaceQuad& q, const Eigen::VectorXd& x, int field,
               Eigen::Matrix<double, 4, 3>& X, Eigen::Matrix<double, 4, 3>& u,
               Eigen::Matrix<double, 4, 1>& c) {
  for (int a = 0; a < 4; ++a) {
    X.row(a) = mesh.nodes[q.nodes[a]].transpose();
    u.row(a) = x.segment<3>(u_dof(q.nodes[a], 0)).transpose();
    c(a) = x(dof_index(q.nodes[a], field));
  }
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

SparseSystem Simulator::assemble_monolithic(const Eigen::VectorXd& x, const Eigen::VectorXd& x_old,
                                            double t_new, double dt) {
  const int ndof = num_dofs();
  const int nn = model_.mesh.num_nodes();
  if (full_plan_.pattern().rows() == 0) {
    std::vector<std::vector<int>> full(geometry_.size());
    for (size_t e = 0; e < geometry_.size(); ++e) {
      const auto& nodes = geometry_[e].nodes;
      for (int X = 0; X < 4; ++X)
        for (int a = 0; a < 8; ++a) full[e].push_back(dof_index(nodes[a], X));
      for (int a = 0; a < 8; ++a)
        for (int i = 0; i < 3; ++i) full[e].push_back(u_dof(nodes[a], i));
    }
    full_plan_ = AssemblyPlan(ndof, full);
  }
  SparseSystem sys;
  sys.K = full_plan_.pattern();
  sys.rhs = Eigen::VectorXd::Zero(ndof);
  sys.fixed = fixed_;
  double* val = sys.K.valuePtr();

  const Eigen::VectorXd Jn = nodal_J(x);
  const Eigen::VectorXd Jn_old = nodal_J(x_old);
  std::vector<Eigen::Triplet<double>> dRdJ, dJdu;
  const bool exact = config_.exact_gradJ_tangent && !config_.freeze_mechanics;

  ElementContribution c;
  std::array<int, kElementDofs> g;
  for (int e = 0; e < model_.mesh.num_elements(); ++e) {
    const ElementState s = gather(e, x, x_old, Jn, Jn_old);
    hex_residual_tangent(geometry_[e], s, model_.materials[e], dt, ElementScheme::fully_implicit(),
                         c, e);
    const auto& nodes = geometry_[e].nodes;
    for (int X = 0; X < 4; ++X)
      for (int a = 0; a < 8; ++a) g[8 * X + a] = dof_index(nodes[a], X);
    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 3; ++i) g[32 + 3 * a + i] = u_dof(nodes[a], i);

    for (int r = 0; r < kElementDofs; ++r) {
      const double inv_sr = 1.0 / scale_(g[r]);
      sys.rhs(g[r]) += c.residual(r) * inv_sr;
      for (int col = 0; col < kElementDofs; ++col)
        val[full_plan_.slot(e, r, col)] += c.stiffness(r, col) * scale_(g[col]) * inv_sr;
    }
    if (exact) {
      for (int r = 0; r < kElementDofs; ++r)
        for (int b = 0; b < 8; ++b) {
          const double v = c.d_residual_d_J_nodal(r, b);
          if (v != 0.0) dRdJ.emplace_back(g[r], nodes[b], v / scale_(g[r]));
        }
      // d(integral of J over e)/du = sum_q dV J F^-T B
      Eigen::Matrix<double, 8, 3> sens = Eigen::Matrix<double, 8, 3>::Zero();
      for (int q = 0; q < 8; ++q) {
        const QpGeometry& qp = geometry_[e].qp[q];
        const Mat3d F = Mat3d::Identity() + s.u.transpose() * qp.B;
        const Mat3d FinvT = F.inverse().transpose();
        sens += qp.dV * F.determinant() * (qp.B * FinvT.transpose());
      }
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b)
          for (int i = 0; i < 3; ++i)
            dJdu.emplace_back(nodes[a], u_dof(nodes[b], i), sens(b, i) / node_weight_(nodes[a]));
    }
  }

  for (const SurfaceQuad& q : model_.flux_quads) {
    for (int f = 0; f < 2; ++f) {
      Eigen::Matrix<double, 4, 3> X, u;
      Eigen::Matrix<double, 4, 1> cq;
      quad_data(model_.mesh, q, x, f, X, u, cq);
      const double q_in = model_.flux.profile.q(static_cast<Field>(f), t_new);
      const FluxContribution fc = flux_surface_residual_tangent(X, u, cq, q_in, model_.flux.p_en);
      for (int a = 0; a < 4; ++a) {
        const int row = dof_index(q.nodes[a], f);
        const double inv_sr = 1.0 / scale_(row);
        sys.rhs(row) += fc.residual(a) * inv_sr;
        for (int b = 0; b < 4; ++b) {
          sys.K.coeffRef(row, dof_index(q.nodes[b], f)) += fc.K_cc(a, b);
          for (int i = 0; i < 3; ++i)
            sys.K.coeffRef(row, u_dof(q.nodes[b], i)) += fc.K_cu(a, 3 * b + i) * inv_sr;
        }
      }
    }
  }

  if (exact) {
    SparseMatrix D(ndof, nn), P(nn, ndof);
    D.setFromTriplets(dRdJ.begin(), dRdJ.end());
    P.setFromTriplets(dJdu.begin(), dJdu.end());
    const SparseMatrix DP = D * P;
    sys.K = sys.K + DP;
    sys.K.makeCompressed();
  }
  return sys;
}

Eigen::VectorXd Simulator::monolithic_residual(const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& x_old, double t_new,
                                               double dt) {
  Eigen::VectorXd R = Eigen::VectorXd::Zero(num_dofs());
  const Eigen::VectorXd Jn = nodal_J(x);
  const Eigen::VectorXd Jn_old = nodal_J(x_old);
  for (int e = 0; e < model_.mesh.num_elements(); ++e) {
    const ElementState s = gather(e, x, x_old, Jn, Jn_old);
    const auto r = hex_residual(geometry_[e], s, model_.materials[e], dt,
                                ElementScheme::fully_implicit(), e);
    const auto& nodes = geometry_[e].nodes;
    for (int X = 0; X < 4; ++X)
      for (int a = 0; a < 8; ++a) R(dof_index(nodes[a], X)) += r(8 * X + a);
    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 3; ++i) R(u_dof(nodes[a], i)) += r(32 + 3 * a + i);
  }
  for (const SurfaceQuad& q : model_.flux_quads)
    for (int f = 0; f < 2; ++f) {
      Eigen::Matrix<double, 4, 3> X, u;
      Eigen::Matrix<double, 4, 1> cq;
      quad_data(model_.mesh, q, x, f, X, u, cq);
      const double q_in = model_.flux.profile.q(static_cast<Field>(f), t_new);
      const FluxContribution fc = flux_surface_residual_tangent(X, u, cq, q_in, model_.flux.p_en);
      for (int a = 0; a < 4; ++a) R(dof_index(q.nodes[a], f)) += fc.residual(a);
    }
  return R;
}

SparseSystem Simulator::assemble_species(Field f, const Eigen::VectorXd& c_new,
                                         const Eigen::VectorXd& x_old, double t_new, double dt) {
  if (node_plan_.pattern().rows() == 0) {
    std::vector<std::vector<int>> nodal(geometry_.size());
    for (size_t e = 0; e < geometry_.size(); ++e)
      nodal[e].assign(geometry_[e].nodes.begin(), geometry_[e].nodes.end());
    node_plan_ = AssemblyPlan(model_.mesh.num_nodes(), nodal);
  }
  const int X = static_cast<int>(f);
  const int nn = model_.mesh.num_nodes();
  SparseSystem sys;
  sys.K = node_plan_.pattern();
  sys.rhs = Eigen::VectorXd::Zero(nn);
  sys.fixed.assign(nn, 0);
  sys.symmetric = true;
  double* val = sys.K.valuePtr();

  Eigen::VectorXd x = x_old;
  for (int n = 0; n < nn; ++n) x(dof_index(n, X)) = c_new(n);
  const Eigen::VectorXd Jn_old = nodal_J(x_old);

  ElementContribution c;
  const auto block = static_cast<Block>(X);
  for (int e = 0; e < model_.mesh.num_elements(); ++e) {
    const ElementState s = gather(e, x, x_old, Jn_old, Jn_old);
    hex_residual_tangent(geometry_[e], s, model_.materials[e], dt, ElementScheme::semi_implicit(f),
                         c, e);
    const auto& nodes = geometry_[e].nodes;
    const auto R = c.R(block);
    const auto K = c.K(block, block);
    for (int a = 0; a < 8; ++a) {
      sys.rhs(nodes[a]) += R(a);
      for (int b = 0; b < 8; ++b) val[node_plan_.slot(e, a, b)] += K(a, b);
    }
  }
  if (f == Field::P || f == Field::T) {
    for (const SurfaceQuad& q : model_.flux_quads) {
      Eigen::Matrix<double, 4, 3> Xq, u;
      Eigen::Matrix<double, 4, 1> cq;
      quad_data(model_.mesh, q, x, X, Xq, u, cq);  // u is u_old here
      const double q_in = model_.flux.profile.q(f, t_new);
      const FluxContribution fc = flux_surface_residual_tangent(Xq, u, cq, q_in, model_.flux.p_en);
      for (int a = 0; a < 4; ++a) {
        sys.rhs(q.nodes[a]) += fc.residual(a);
        for (int b = 0; b < 4; ++b) sys.K.coeffRef(q.nodes[a], q.nodes[b]) += fc.K_cc(a, b);
      }
    }
  }
  return sys;
}

SparseSystem Simulator::assemble_mechanics(const Eigen::VectorXd& x, const Eigen::VectorXd& x_old,
                                           double dt) {
  if (u_plan_.pattern().rows() == 0) {
    std::vector<std::vector<int>> disp(geometry_.size());
    for (size_t e = 0; e < geometry_.size(); ++e)
      for (int a = 0; a < 8; ++a)
        for (int i = 0; i < 3; ++i) disp[e].push_back(3 * geometry_[e].nodes[a] + i);
    u_plan_ = AssemblyPlan(3 * model_.mesh.num_nodes(), disp);
  }
  const int nn = model_.mesh.num_nodes();
  SparseSystem sys;
  sys.K = u_plan_.pattern();
  sys.rhs = Eigen::VectorXd::Zero(3 * nn);
  sys.fixed.assign(3 * nn, 0);
  for (int d : constrained_) sys.fixed[3 * (d / kDofsPerNode) + d % kDofsPerNode - 4] = 1;
  sys.symmetric = true;
  double* val = sys.K.valuePtr();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(nn);
  ElementContribution c;
  for (int e = 0; e < model_.mesh.num_elements(); ++e) {
    const ElementState s = gather(e, x, x_old, ones, ones);
    hex_residual_tangent(geometry_[e], s, model_.materials[e], dt, ElementScheme::mechanics(), c, e);
    const auto& nodes = geometry_[e].nodes;
    const auto R = c.R(Block::u);
    const auto K = c.K(Block::u, Block::u);
    for (int a = 0; a < 8; ++a)
      for (int i = 0; i < 3; ++i) {
        sys.rhs(3 * nodes[a] + i) += R(3 * a + i);
        for (int r = 0; r < 24; ++r) val[u_plan_.slot(e, 3 * a + i, r)] += K(3 * a + i, r);
      }
  }
  return sys;
}

Eigen::VectorXd Simulator::solve_monolithic(const SparseSystem& sys) {
  Eigen::VectorXd dx;
  if (config_.linear_solver == LinearSolverKind::Iterative) {
    auto& s = solvers_->bicg;
    s.setTolerance(1e-12);
    s.compute(sys.K);
    dx = s.solve(sys.rhs);
    if (s.info() != Eigen::Success) throw ConvergenceError("iterative linear solve failed");
    return dx;
  }
#ifdef ISR_HAVE_UMFPACK
  // The tangent pattern is fixed by the mesh, so the symbolic analysis is
  // reused across Newton iterations and steps.
  auto& umf = solvers_->umf;
  if (solvers_->umf_nnz != sys.K.nonZeros()) {
    umf.umfpackControl()(UMFPACK_STRATEGY) = UMFPACK_STRATEGY_SYMMETRIC;
    umf.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_CHOLMOD;
    umf.analyzePattern(sys.K);
    solvers_->umf_nnz = sys.K.nonZeros();
  }
  umf.factorize(sys.K);
  if (umf.info() != Eigen::Success) {
    umf.compute(sys.K);
    solvers_->umf_nnz = -1;
  }
  if (solvers_->umf.info() == Eigen::Success) {
    dx = solvers_->umf.solve(sys.rhs);
    if (solvers_->umf.info() == Eigen::Success) return dx;
  }
#endif
  solvers_->lu.compute(sys.K);
  if (solvers_->lu.info() != Eigen::Success)
    throw ConvergenceError("sparse LU factorization failed (singular tangent)");
  return solvers_->lu.solve(sys.rhs);
}

StepLog Simulator::step_monolithic(State& state, double dt) {
  StepLog log;
  log.dt = dt;
  const Eigen::VectorXd x_old = state.x;
  Eigen::VectorXd x = state.x;
  for (size_t k = 0; k < constrained_.size(); ++k)
    x(constrained_[k]) = config_.freeze_mechanics ? x_old(constrained_[k]) : constrained_values_[k];
  const double t_new = state.t + dt;
  const std::vector<double> zeros(constrained_.size(), 0.0);

  double r0 = 0.0;
  for (int it = 0;; ++it) {
    Eigen::VectorXd R = monolithic_residual(x, x_old, t_new, dt).cwiseQuotient(scale_);
    for (int d : constrained_) R(d) = 0.0;
    const double rn = R.norm();
    if (!finite(rn)) throw ConvergenceError("non-finite residual");
    log.residual_history.push_back(rn);
    if (config_.verbose) std::fprintf(stderr, "  t=%g newton %d |R|=%.6e\n", t_new, it, rn);
    if (it == 0) r0 = rn;
    if (it > 0 && (rn < config_.newton_tol_abs || rn < config_.newton_tol_rel * r0)) break;
    if (it >= config_.max_newton_iters) {
      std::ostringstream os;
      os << "monolithic Newton did not converge in " << config_.max_newton_iters
         << " iterations (|R| = " << rn << ", |R0| = " << r0 << ")";
      throw ConvergenceError(os.str());
    }
    if (it > 2 && rn > 1e8 * std::max(r0, config_.newton_tol_abs))
      throw ConvergenceError("monolithic Newton diverged");
    SparseSystem sys = assemble_monolithic(x, x_old, t_new, dt);
    sys.rhs = -R;
    apply_dirichlet(sys, constrained_, zeros);
    const Eigen::VectorXd dx = solve_monolithic(sys);
    x += scale_.cwiseProduct(dx);
    log.newton_iterations = it + 1;
  }
  state.x = x;
  state.t = t_new;
  return log;
}

StepLog Simulator::step_staggered(State& state, double dt) {
  StepLog log;
  log.dt = dt;
  const Eigen::VectorXd x_old = state.x;
  Eigen::VectorXd x = state.x;
  const int nn = model_.mesh.num_nodes();
  const double t_new = state.t + dt;

  for (int X = 0; X < 4; ++X) {
    const Field f = static_cast<Field>(X);
    Eigen::VectorXd c(nn);
    for (int n = 0; n < nn; ++n) c(n) = x_old(dof_index(n, X));
    SparseSystem sys = assemble_species(f, c, x_old, t_new, dt);
    Eigen::VectorXd dc;
    if (config_.linear_solver == LinearSolverKind::Iterative) {
      auto& s = solvers_->cg;
      s.setTolerance(1e-14);
      s.compute(sys.K);
      dc = s.solve(-sys.rhs);
      if (s.info() != Eigen::Success) throw ConvergenceError("species CG did not converge");
    } else {
      auto& s = solvers_->ldlt_species;
      if (!solvers_->species_analyzed) {
        s.analyzePattern(sys.K);
        solvers_->species_analyzed = true;
      }
      s.factorize(sys.K);
      if (s.info() != Eigen::Success)
        throw ConvergenceError(std::string("species factorization failed for ") + field_name(f));
      dc = s.solve(-sys.rhs);
    }
    if (!dc.allFinite()) throw ConvergenceError("non-finite species update");
    c += dc;
    for (int n = 0; n < nn; ++n) x(dof_index(n, X)) = c(n);
    log.species_solves[X] = 1;
  }

  if (!config_.freeze_mechanics) {
    for (size_t k = 0; k < constrained_.size(); ++k) x(constrained_[k]) = constrained_values_[k];
    std::vector<int> fixed_local;
    for (int d : constrained_) fixed_local.push_back(3 * (d / kDofsPerNode) + d % kDofsPerNode - 4);
    const std::vector<double> zeros(fixed_local.size(), 0.0);
    double r0 = 0.0;
    for (int it = 0;; ++it) {
      SparseSystem sys = assemble_mechanics(x, x_old, dt);
      for (int d : fixed_local) sys.rhs(d) = 0.0;
      const double rn = sys.rhs.norm();
      if (!finite(rn)) throw ConvergenceError("non-finite displacement residual");
      log.residual_history.push_back(rn);
      if (config_.verbose) std::fprintf(stderr, "  t=%g u-newton %d |R|=%.6e\n", t_new, it, rn);
      if (it == 0) r0 = rn;
      if (it > 0 && (rn < config_.newton_tol_abs || rn < config_.newton_tol_rel * r0)) break;
      if (it >= config_.max_newton_iters)
        throw ConvergenceError("displacement Newton did not converge");
      if (it > 2 && rn > 1e8 * std::max(r0, config_.newton_tol_abs))
        throw ConvergenceError("displacement Newton diverged");
      sys.rhs = -sys.rhs;
      apply_dirichlet(sys, fixed_local, zeros);
      Eigen::VectorXd du;
      if (config_.linear_solver == LinearSolverKind::Iterative) {
        auto& s = solvers_->bicg;
        s.setTolerance(1e-12);
        s.compute(sys.K);
        du = s.solve(sys.rhs);
        if (s.info() != Eigen::Success) throw ConvergenceError("iterative linear solve failed");
      } else {
        auto& s = solvers_->ldlt_u;
        if (!solvers_->u_analyzed) {
          s.analyzePattern(sys.K);
          solvers_->u_analyzed = true;
        }
        s.factorize(sys.K);
        if (s.info() == Eigen::Success) {
          du = s.solve(sys.rhs);
        } else {
          solvers_->lu.compute(sys.K);
          if (solvers_->lu.info() != Eigen::Success)
            throw ConvergenceError("displacement factorization failed");
          du = solvers_->lu.solve(sys.rhs);
        }
      }
      for (int n = 0; n < nn; ++n) x.segment<3>(u_dof(n, 0)) += du.segment<3>(3 * n);
      log.newton_iterations = it + 1;
    }
  }
  state.x = x;
  state.t = t_new;
  return log;
}

void Simulator::check_negativity(const State& state, StepLog& log) const {
  const int nn = model_.mesh.num_nodes();
  for (int X = 0; X < 4; ++X) {
    double worst = 0.0;
    int where = -1;
    for (int n = 0; n < nn; ++n) {
      const double v = state.x(dof_index(n, X)) / scale_(dof_index(n, X));
      if (v < worst) {
        worst = v;
        where = n;
      }
    }
    if (worst < -1e-3) {
      std::ostringstream os;
      os << "negative " << field_name(static_cast<Field>(X)) << " at node " << where
         << " (c0/scale = " << worst << ") at t = " << state.t;
      log.warnings.push_back(os.str());
    }
  }
}

StepLog Simulator::step_with_retry(State& state, double dt, int depth) {
  State trial = state;
  try {
    StepLog log = config_.scheme == Scheme::Monolithic ? step_monolithic(trial, dt)
                                                       : step_staggered(trial, dt);
    state = trial;
    return log;
  } catch (const Error& err) {
    if (err.category() != ErrorCategory::Convergence && err.category() != ErrorCategory::Geometry)
      throw;
    if (depth >= config_.max_retries) {
      std::ostringstream os;
      os << "step from t = " << state.t << " failed after " << depth
         << " dt halvings: " << err.what();
      throw ConvergenceError(os.str());
    }
  }
  StepLog a = step_with_retry(state, 0.5 * dt, depth + 1);
  StepLog b = step_with_retry(state, 0.5 * dt, depth + 1);
  StepLog merged = b;
  merged.dt = dt;
  merged.newton_iterations = a.newton_iterations + b.newton_iterations;
  for (int X = 0; X < 4; ++X) merged.species_solves[X] = a.species_solves[X] + b.species_solves[X];
  merged.substeps = a.substeps + b.substeps;
  merged.retries = 1 + a.retries + b.retries;
  merged.warnings.insert(merged.warnings.begin(), a.warnings.begin(), a.warnings.end());
  return merged;
}

StepLog Simulator::step(State& state, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("step: dt must be positive");
  const auto start = std::chrono::steady_clock::now();
  StepLog log = step_with_retry(state, dt, 0);
  log.t = state.t;
  log.dt = dt;
  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  check_negativity(state, log);
  std::vector<double> Jg, theta;
  element_growth(state, Jg, theta);
  for (double th : theta)
    if (th <= kGrowthStretchFloor) log.growth_clamped = true;
  return log;
}

OutputRecord Simulator::record(const State& state) const {
  OutputRecord r;
  r.t = state.t;
  const int m = model_.monitor_node;
  r.u_monitor = state.u(m);
  const Eigen::VectorXd Jn = nodal_J(state.x);
  int elem = 0;
  for (int e = 0; e < model_.mesh.num_elements(); ++e)
    if (std::find(geometry_[e].nodes.begin(), geometry_[e].nodes.end(), m) !=
        geometry_[e].nodes.end()) {
      elem = e;
      break;
    }
  const ElementMaterial& mat = model_.materials[elem];
  const GrowthState<double> g = growth_from_density(state.c0(m, Field::S), mat.structural, mat.gamma);
  r.Jg = g.Jg;
  r.theta = g.theta;
  for (int X = 0; X < 4; ++X) r.c_spatial[X] = state.x(dof_index(m, X)) / Jn(m);
  return r;
}

void Simulator::element_growth(const State& state, std::vector<double>& Jg,
                               std::vector<double>& theta) const {
  const int ne = model_.mesh.num_elements();
  Jg.assign(ne, 0.0);
  theta.assign(ne, 0.0);
  for (int e = 0; e < ne; ++e) {
    Eigen::Matrix<double, 8, 1> rho;
    for (int a = 0; a < 8; ++a) rho(a) = state.c0(geometry_[e].nodes[a], Field::S);
    const ElementMaterial& mat = model_.materials[e];
    for (int q = 0; q < 8; ++q) {
      const GrowthState<double> g =
          growth_from_density(geometry_[e].qp[q].N.dot(rho), mat.structural, mat.gamma);
      Jg[e] += g.Jg / 8.0;
      theta[e] += g.theta / 8.0;
    }
  }
}

double Simulator::total_content(const State& state, Field f) const {
  double total = 0.0;
  for (const ElementGeometry& g : geometry_) {
    Eigen::Matrix<double, 8, 1> c;
    for (int a = 0; a < 8; ++a) c(a) = state.c0(g.nodes[a], f);
    for (const QpGeometry& q : g.qp) total += q.dV * q.N.dot(c);
  }
  return total;
}

RunResult run(const Model& model, const TimeSteppingConfig& config,
              const std::function<void(const State&, const Simulator&)>& observer,
              const State* initial) {
  Simulator sim(model, config);
  RunResult result;
  State state = initial ? *initial : model.initial_state();
  result.records.push_back(sim.record(state));
  if (observer) observer(state, sim);
  const double t0 = state.t;
  const long steps = std::lround((config.t_end - t0) / config.dt);
  for (long k = 1; k <= steps; ++k) {
    const double target = t0 + static_cast<double>(k) * config.dt;
    StepLog log;
    try {
      log = sim.step(state, target - state.t);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(std::string(e.what()) + " [run aborted at t = " +
                             std::to_string(state.t) + " days]");
    }
    state.t = target;
    log.step = static_cast<int>(k);
    log.t = target;
    OutputRecord rec = sim.record(state);
    rec.newton_iterations = log.newton_iterations;
    rec.wall_seconds = log.wall_seconds;
    result.records.push_back(rec);
    result.logs.push_back(std::move(log));
    if (observer) observer(state, sim);
  }
  result.final_state = state;
  return result;
}

}  // namespace isr
