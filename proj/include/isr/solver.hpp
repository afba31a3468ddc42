// Time marching: fully implicit monolithic Newton-Raphson on all five fields,
// or the staggered variant (four linear symmetric species solves followed by
// a displacement-only Newton loop). Global unknowns are interleaved per node:
//   dof(node, f) = 7 node + f,  f = 0..3 species (P, T, E, S), 4..6 u_x..u_z.
#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "isr/fem_elements.hpp"
#include "isr/mesh.hpp"

namespace isr {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

inline int dof_index(int node, int field) { return kDofsPerNode * node + field; }
inline int u_dof(int node, int component) { return kDofsPerNode * node + 4 + component; }

enum class Scheme { Monolithic, Staggered };
enum class LinearSolverKind { Direct, Iterative };

const char* scheme_name(Scheme s);

struct TimeSteppingConfig {
  double dt = 1.0;       // days
  double t_end = 370.0;  // days
  Scheme scheme = Scheme::Monolithic;
  double newton_tol_abs = 1e-9;  // on the field-scaled residual
  double newton_tol_rel = 1e-8;
  int max_newton_iters = 25;
  LinearSolverKind linear_solver = LinearSolverKind::Direct;
  int max_retries = 3;  // successive dt halvings per step
  /// Hold u at its initial value (all displacement dofs constrained).
  bool freeze_mechanics = false;
  /// Include the non-local sensitivity of the projected Grad J in the
  /// monolithic tangent.
  bool exact_gradJ_tangent = true;
  /// Print every Newton residual norm to stderr.
  bool verbose = false;

  void validate() const;
};

/// Global unknown vector at one time level.
struct State {
  double t = 0.0;
  Eigen::VectorXd x;

  double c0(int node, Field f) const { return x(dof_index(node, static_cast<int>(f))); }
  Vec3d u(int node) const { return x.segment<3>(u_dof(node, 0)); }
};

/// Linear system with Dirichlet elimination markers.
struct SparseSystem {
  SparseMatrix K;
  Eigen::VectorXd rhs;
  std::vector<char> fixed;  // per row/column
  bool symmetric = false;
};

/// Symmetric row/column elimination: for every constrained dof j the rhs is
/// corrected by -K(:, j) v_j, row and column j are zeroed, K(j, j) = 1 and
/// rhs(j) = v_j. `K` must store its diagonal.
void apply_dirichlet(SparseSystem& system, const std::vector<int>& dofs,
                     const std::vector<double>& values);

/// Precomputed CSC pattern and element-to-value scatter map.
class AssemblyPlan {
 public:
  AssemblyPlan() = default;
  AssemblyPlan(int ndof, const std::vector<std::vector<int>>& element_dofs);

  const SparseMatrix& pattern() const { return pattern_; }
  /// Index into the value array of local entry (r, c) of element e.
  int slot(int e, int r, int c) const { return slots_[e][r * sizes_[e] + c]; }
  int local_size(int e) const { return sizes_[e]; }

 private:
  SparseMatrix pattern_;
  std::vector<std::vector<int>> slots_;
  std::vector<int> sizes_;
};

/// Everything the solver needs to know about a scenario.
struct Model {
  Mesh mesh;
  std::vector<ElementMaterial> materials;  // one per element
  std::vector<SurfaceQuad> flux_quads;
  FluxPatchParams flux;
  std::vector<int> fixed_dofs;  // global dof indices (displacement components)
  std::vector<double> fixed_values;
  int monitor_node = 0;

  /// Resting initial state: c_P = c_T = 0, c_E = c_E_eq, rho_S = rho_S_eq, u = 0
  /// (nodal values taken from the materials of adjacent elements).
  State initial_state() const;
  void validate() const;
};

struct StepLog {
  int step = 0;
  double t = 0.0;
  double dt = 0.0;
  int newton_iterations = 0;   // monolithic or displacement Newton (summed over substeps)
  std::array<int, 4> species_solves{0, 0, 0, 0};
  std::vector<double> residual_history;  // scaled residual norms of the last substep
  int substeps = 1;
  int retries = 0;
  double wall_seconds = 0.0;
  bool growth_clamped = false;
  std::vector<std::string> warnings;
};

struct OutputRecord {
  double t = 0.0;
  Vec3d u_monitor = Vec3d::Zero();
  double Jg = 1.0;
  double theta = 1.0;
  std::array<double, 4> c_spatial{0.0, 0.0, 0.0, 0.0};  // c0/J at the monitor node
  int newton_iterations = 0;
  double wall_seconds = 0.0;
};

struct RunResult {
  std::vector<OutputRecord> records;
  std::vector<StepLog> logs;
  State final_state;
};

class Simulator {
 public:
  Simulator(const Model& model, const TimeSteppingConfig& config);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const Model& model() const { return model_; }
  const TimeSteppingConfig& config() const { return config_; }
  int num_dofs() const { return kDofsPerNode * model_.mesh.num_nodes(); }

  /// Advance `state` by dt with the configured scheme and retry policy.
  /// Throws ConvergenceError (with the failing time) when retries run out.
  StepLog step(State& state, double dt);

  /// Single attempt without retries.
  StepLog step_monolithic(State& state, double dt);
  StepLog step_staggered(State& state, double dt);

  /// Fully implicit residual and tangent (field-scaled, before Dirichlet
  /// elimination) at iterate `x` over the step from `x_old`.
  SparseSystem assemble_monolithic(const Eigen::VectorXd& x, const Eigen::VectorXd& x_old,
                                   double t_new, double dt);
  /// Semi-implicit system of one species over nodes (unscaled).
  SparseSystem assemble_species(Field f, const Eigen::VectorXd& c_new,
                                const Eigen::VectorXd& x_old, double t_new, double dt);
  /// Displacement-only system over 3 x nodes with species taken from `x`
  /// (unscaled, Dirichlet markers set but not applied).
  SparseSystem assemble_mechanics(const Eigen::VectorXd& x, const Eigen::VectorXd& x_old,
                                  double dt);
  /// Unscaled monolithic residual (no tangent), for finite-difference checks.
  Eigen::VectorXd monolithic_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& x_old,
                                      double t_new, double dt);

  /// Volume-weighted nodal J for the displacements contained in x.
  Eigen::VectorXd nodal_J(const Eigen::VectorXd& x) const;

  const Eigen::VectorXd& dof_scales() const { return scale_; }
  OutputRecord record(const State& state) const;

  /// Jg and theta averaged over the Gauss points of every element.
  void element_growth(const State& state, std::vector<double>& Jg,
                      std::vector<double>& theta) const;

  /// Total reference content int c0 dV of one species.
  double total_content(const State& state, Field f) const;

 private:
  struct LinearSolvers;

  ElementState gather(int e, const Eigen::VectorXd& x, const Eigen::VectorXd& x_old,
                      const Eigen::VectorXd& J_nodal, const Eigen::VectorXd& J_nodal_old) const;
  Eigen::VectorXd solve_monolithic(const SparseSystem& sys);
  void check_negativity(const State& state, StepLog& log) const;
  StepLog step_with_retry(State& state, double dt, int depth);

  Model model_;
  TimeSteppingConfig config_;
  std::vector<ElementGeometry> geometry_;
  Eigen::VectorXd scale_;
  Eigen::VectorXd node_weight_;  // sum of adjacent element volumes
  std::vector<char> fixed_;
  std::vector<int> constrained_;  // Dirichlet dofs used in the current mode
  std::vector<double> constrained_values_;
  AssemblyPlan full_plan_;
  AssemblyPlan node_plan_;  // one unknown per node (species)
  AssemblyPlan u_plan_;     // three unknowns per node
  std::unique_ptr<LinearSolvers> solvers_;
};

/// Advance from the model's initial state (or `initial`) to config.t_end.
/// `observer` is called after every accepted step, including step 0.
RunResult run(const Model& model, const TimeSteppingConfig& config,
              const std::function<void(const State&, const Simulator&)>& observer = {},
              const State* initial = nullptr);

}  // namespace isr
