// Element residuals and consistent tangents for the five-field trilinear
// hexahedron, and the deformation-dependent growth-factor flux quad.
//
// Element-local unknown ordering is field-blocked:
//   [c0_P(8) | c0_T(8) | c0_E(8) | rho0_S(8) | u(8 x 3, node-major)]
// Global ordering is node-interleaved (see dof_index in solver.hpp).
#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "isr/constitutive.hpp"
#include "isr/mesh.hpp"
#include "isr/shape.hpp"
#include "isr/species_kinetics.hpp"

namespace isr {

enum class Field { P = 0, T = 1, E = 2, S = 3 };
inline constexpr int kNumSpecies = 4;
inline constexpr int kDofsPerNode = 7;
inline constexpr int kElementDofs = 56;

const char* field_name(Field f);

enum class Block { P = 0, T = 1, E = 2, S = 3, u = 4 };
inline constexpr int block_offset(Block b) { return 8 * static_cast<int>(b); }
inline constexpr int block_size(Block b) { return b == Block::u ? 24 : 8; }

/// Time discretization applied inside one element evaluation.
struct ElementScheme {
  enum Kind {
    FullyImplicit,  // every field at t_{n+1}; all coupling blocks
    SemiImplicit,   // only `field` implicit; geometry and other fields at t_n
    Mechanics,      // displacement block only, species given at t_{n+1}
  } kind = FullyImplicit;
  Field field = Field::P;

  static ElementScheme fully_implicit() { return {FullyImplicit, Field::P}; }
  static ElementScheme semi_implicit(Field f) { return {SemiImplicit, f}; }
  static ElementScheme mechanics() { return {Mechanics, Field::P}; }
};

struct QpGeometry {
  Eigen::Matrix<double, 8, 1> N;
  Eigen::Matrix<double, 8, 3> B;  // dN/dX
  double dV;                      // Gauss weight times det(dX/dxi)
};

struct ElementGeometry {
  std::array<int, 8> nodes;
  std::array<QpGeometry, 8> qp;
  double volume = 0.0;
};

/// Reference-configuration shape data; throws InvalidElementError when the
/// Jacobian is non-positive at a Gauss point.
ElementGeometry element_geometry(const Mesh& mesh, int element);

struct ElementMaterial {
  SpeciesParams species;
  StructuralParams structural;
  Mat3d H1 = Mat3d::Zero();
  Mat3d H2 = Mat3d::Zero();
  Vec3d gamma = Vec3d::Zero();
};

ElementMaterial make_element_material(const SpeciesParams& species,
                                      const StructuralParams& structural,
                                      const FiberPair& fibers);

/// Nodal values of one element in local node order.
struct ElementState {
  std::array<Eigen::Matrix<double, 8, 1>, kNumSpecies> c;      // t_{n+1} iterate
  std::array<Eigen::Matrix<double, 8, 1>, kNumSpecies> c_old;  // t_n
  Eigen::Matrix<double, 8, 3> u = Eigen::Matrix<double, 8, 3>::Zero();
  Eigen::Matrix<double, 8, 3> u_old = Eigen::Matrix<double, 8, 3>::Zero();
  /// Projected nodal J used for Grad J, at the iterate and at t_n.
  Eigen::Matrix<double, 8, 1> J_nodal = Eigen::Matrix<double, 8, 1>::Ones();
  Eigen::Matrix<double, 8, 1> J_nodal_old = Eigen::Matrix<double, 8, 1>::Ones();
};

struct ElementContribution {
  Eigen::Matrix<double, kElementDofs, 1> residual;
  Eigen::Matrix<double, kElementDofs, kElementDofs> stiffness;
  /// Sensitivity of the residual to the projected nodal J values.
  Eigen::Matrix<double, kElementDofs, 8> d_residual_d_J_nodal;
  bool growth_clamped = false;

  ElementContribution() { set_zero(); }
  void set_zero() {
    residual.setZero();
    stiffness.setZero();
    d_residual_d_J_nodal.setZero();
    growth_clamped = false;
  }
  auto R(Block b) { return residual.segment(block_offset(b), block_size(b)); }
  auto R(Block b) const { return residual.segment(block_offset(b), block_size(b)); }
  auto K(Block r, Block c) {
    return stiffness.block(block_offset(r), block_offset(c), block_size(r), block_size(c));
  }
  auto K(Block r, Block c) const {
    return stiffness.block(block_offset(r), block_offset(c), block_size(r), block_size(c));
  }
};

/// Residual and tangent. `out` is overwritten. Throws InvertedElementError
/// (tagged with `element_id`) on a non-positive deformation Jacobian.
void hex_residual_tangent(const ElementGeometry& geom, const ElementState& state,
                          const ElementMaterial& material, double dt,
                          const ElementScheme& scheme, ElementContribution& out,
                          int element_id = -1);

/// Residual only, evaluated in plain double arithmetic.
Eigen::Matrix<double, kElementDofs, 1> hex_residual(const ElementGeometry& geom,
                                                    const ElementState& state,
                                                    const ElementMaterial& material, double dt,
                                                    const ElementScheme& scheme,
                                                    int element_id = -1);

// ---------------------------------------------------------------------------
// Flux interface

/// Piecewise-linear growth-factor influx history, constant past the ends.
struct InfluxProfile {
  std::vector<double> t;    // days, strictly increasing
  std::vector<double> q_P;  // mol/mm^2/day
  std::vector<double> q_T;

  double q(Field f, double time) const;
  void validate() const;

  /// Linear rise over 30 days, plateau to day 100, linear decay to zero at 370.
  static InfluxProfile damage_and_recovery(double peak_P, double peak_T);
};

struct FluxPatchParams {
  double p_en = 1e-3;  // mm/day
  InfluxProfile profile;
};

struct FluxContribution {
  Eigen::Matrix<double, 4, 1> residual;
  Eigen::Matrix<double, 4, 4> K_cc;
  Eigen::Matrix<double, 4, 12> K_cu;  // columns node-major (x, y, z)
};

/// Robin-type influx q = q_in - p_en c0/J through a reference quad, pulled
/// back with the Piola identity. `X` and `u` hold node coordinates and
/// displacements row-wise. Throws GeometryError on a degenerate quad.
FluxContribution flux_surface_residual_tangent(const Eigen::Matrix<double, 4, 3>& X,
                                               const Eigen::Matrix<double, 4, 3>& u,
                                               const Eigen::Matrix<double, 4, 1>& c0,
                                               double q_in, double p_en);

// ---------------------------------------------------------------------------
// Grad J recovery

/// det F at the eight Gauss points of an element for nodal displacements u.
std::array<double, 8> qp_jacobians(const ElementGeometry& geom,
                                   const Eigen::Matrix<double, 8, 3>& u);

/// Volume-weighted nodal average of element-mean J. Exact for elementwise
/// constant J.
Eigen::VectorXd project_nodal_J(const std::vector<ElementGeometry>& geometry, int num_nodes,
                                const std::vector<std::array<double, 8>>& J_qp);

}  // namespace isr
