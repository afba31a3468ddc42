#include "isr/fem_elements.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "isr/dual.hpp"
#include "isr/error.hpp"

namespace isr {

const char* field_name(Field f) {
  switch (f) {
    case Field::P: return "P";
    case Field::T: return "T";
    case Field::E: return "E";
    case Field::S: return "S";
  }
  return "?";
}

ElementGeometry element_geometry(const Mesh& mesh, int element) {
  ElementGeometry g;
  g.nodes = mesh.elements.at(element);
  Eigen::Matrix<double, 8, 3> X;
  for (int a = 0; a < 8; ++a) X.row(a) = mesh.nodes[g.nodes[a]].transpose();
  const QuadRule& rule = gauss_hex_2x2x2();
  for (int q = 0; q < 8; ++q) {
    const Eigen::Vector3d& p = rule.points[q];
    const Hex8Shape s = shape_hex8(p(0), p(1), p(2));
    const Mat3d J0 = X.transpose() * s.dN;  // J0(i, j) = dX_i / dxi_j
    const double det = J0.determinant();
    if (!(det > 0.0))
      throw InvertedElementError(element, "element " + std::to_string(element) +
                                              ": non-positive reference Jacobian at Gauss point " +
                                              std::to_string(q));
    g.qp[q].N = s.N;
    g.qp[q].B = s.dN * J0.inverse();
    g.qp[q].dV = rule.weights[q] * det;
    g.volume += g.qp[q].dV;
  }
  return g;
}

ElementMaterial make_element_material(const SpeciesParams& species,
                                      const StructuralParams& structural,
                                      const FiberPair& fibers) {
  ElementMaterial m;
  m.species = species;
  m.structural = structural;
  m.H1 = structural_tensor(fibers.a1, structural.kappa);
  m.H2 = structural_tensor(fibers.a2, structural.kappa);
  m.gamma = growth_direction_for(fibers, structural);
  return m;
}

namespace {

// Point-level unknowns of the fully implicit kernel.
constexpr int kInC = 0;      // c0_P, c0_T, c0_E, rho0_S
constexpr int kInGrad = 4;   // Grad c0_P, Grad c0_T, Grad c0_E
constexpr int kInF = 13;     // F, row-major
constexpr int kInGradJ = 22; // Grad J
constexpr int kNumInputs = 25;

// Output rows of the chained derivative table.
constexpr int kOutS = 0;   // 4 sources
constexpr int kOutQ = 4;   // 4 x 3 fluxes
constexpr int kOutP = 16;  // 9 stress components
constexpr int kNumOutputs = 25;

// Columns: 56 element dofs followed by 8 projected nodal J values.
constexpr int kCols = kElementDofs + 8;

template <class T>
struct PointInputs {
  std::array<T, 4> c;
  std::array<Vec3<T>, 3> grad;
  Mat3<T> F;
  Vec3<T> gradJ;
};

template <class T>
struct PointOutputs {
  std::array<T, 4> s;
  std::array<Vec3<T>, 4> q;
  Mat3<T> P;
  bool clamped = false;
};

struct PointValues {
  std::array<double, 4> c, c_old;
  std::array<Vec3d, 4> grad, grad_old;
  Mat3d F, F_old;
  Vec3d gradJ, gradJ_old;
};

PointValues interpolate(const QpGeometry& q, const ElementState& s) {
  PointValues v;
  for (int X = 0; X < kNumSpecies; ++X) {
    v.c[X] = q.N.dot(s.c[X]);
    v.c_old[X] = q.N.dot(s.c_old[X]);
    v.grad[X] = q.B.transpose() * s.c[X];
    v.grad_old[X] = q.B.transpose() * s.c_old[X];
  }
  v.F = Mat3d::Identity() + s.u.transpose() * q.B;
  v.F_old = Mat3d::Identity() + s.u_old.transpose() * q.B;
  v.gradJ = q.B.transpose() * s.J_nodal;
  v.gradJ_old = q.B.transpose() * s.J_nodal_old;
  return v;
}

template <class T>
PointOutputs<T> evaluate_point(const PointInputs<T>& in, const std::array<double, 4>& c_old,
                               const ElementMaterial& m, double dt, bool semi_implicit,
                               bool need_species, bool need_stress) {
  PointOutputs<T> out;
  const T J = det3(in.F);
  if (need_species) {
    const SpeciesParams& sp = m.species;
    const Mat3<T> C = in.F.transpose() * in.F;
    const Mat3<T> Cinv = inv3(C);
    SpeciesPointState<T> st{in.c[0],  in.c[1],  in.c[2], in.c[3], in.grad[0],
                            in.grad[1], in.grad[2], in.gradJ, J, Cinv};
    out.s[0] = (in.c[0] - c_old[0]) / dt - pdgf_reaction(st, sp);
    out.s[1] = (in.c[1] - c_old[1]) / dt - tgf_reaction(st, sp);
    out.s[2] = (in.c[2] - c_old[2]) / dt - ecm_reaction(st, sp);
    out.s[3] = (in.c[3] - c_old[3]) / dt - smc_reaction(st, sp);

    // Semi-implicit: drift and taxis carry their transported quantity at t_n.
    const T drift_P = semi_implicit ? T(c_old[0]) : in.c[0];
    const T drift_T = semi_implicit ? T(c_old[1]) : in.c[1];
    out.q[0] = gf_diffusive_flux(drift_P, in.grad[0], J, in.gradJ, Cinv, sp.D_P);
    out.q[1] = gf_diffusive_flux(drift_T, in.grad[1], J, in.gradJ, Cinv, sp.D_T);
    out.q[2] = Vec3<T>(T(0.0), T(0.0), T(0.0));
    SpeciesPointState<T> taxis = st;
    if (semi_implicit) taxis.rho0_S = T(c_old[3]);
    const auto [chemo, hapto] = smc_flux_coefficients(taxis, sp);
    out.q[3] = chemo + hapto;
  }
  if (need_stress) {
    const GrowthState<T> g = growth_from_density(in.c[3], m.structural, m.gamma);
    out.P = first_piola(in.F, g, in.c[2], m.H1, m.H2, m.structural);
    out.clamped = g.clamped;
  }
  return out;
}

void check_jacobian(const Mat3d& F, int element_id, int qp) {
  const double J = F.determinant();
  if (!(J > 0.0))
    throw InvertedElementError(element_id, "element " + std::to_string(element_id) +
                                               ": det F = " + std::to_string(J) +
                                               " at Gauss point " + std::to_string(qp));
}

// Residual accumulation shared by the double and Dual paths.
template <class T>
void add_species_residual(Eigen::Matrix<double, kElementDofs, 1>& R, const QpGeometry& q,
                          const PointOutputs<T>& o, int X) {
  for (int a = 0; a < 8; ++a) {
    double r = value_of(o.s[X]) * q.N(a);
    for (int k = 0; k < 3; ++k) r += value_of(o.q[X](k)) * q.B(a, k);
    R(8 * X + a) += q.dV * r;
  }
}

template <class T>
void add_mechanics_residual(Eigen::Matrix<double, kElementDofs, 1>& R, const QpGeometry& q,
                            const PointOutputs<T>& o) {
  for (int a = 0; a < 8; ++a)
    for (int i = 0; i < 3; ++i) {
      double r = 0.0;
      for (int J = 0; J < 3; ++J) r += value_of(o.P(i, J)) * q.B(a, J);
      R(32 + 3 * a + i) += q.dV * r;
    }
}

// Maps d(output)/d(point inputs) to d(output)/d(element dofs, nodal J).
void chain_to_dofs(const double* d, const QpGeometry& q, double* g) {
  for (int b = 0; b < 8; ++b) {
    const double N = q.N(b);
    const double B0 = q.B(b, 0), B1 = q.B(b, 1), B2 = q.B(b, 2);
    for (int X = 0; X < 3; ++X) {
      const double* dg = d + kInGrad + 3 * X;
      g[8 * X + b] = d[kInC + X] * N + dg[0] * B0 + dg[1] * B1 + dg[2] * B2;
    }
    g[24 + b] = d[kInC + 3] * N;
    for (int r = 0; r < 3; ++r) {
      const double* dF = d + kInF + 3 * r;
      g[32 + 3 * b + r] = dF[0] * B0 + dF[1] * B1 + dF[2] * B2;
    }
    const double* dJ = d + kInGradJ;
    g[56 + b] = dJ[0] * B0 + dJ[1] * B1 + dJ[2] * B2;
  }
}

void fully_implicit(const ElementGeometry& geom, const ElementState& state,
                    const ElementMaterial& m, double dt, ElementContribution& out,
                    int element_id) {
  using D = Dual<double, kNumInputs>;
  Eigen::Matrix<double, kNumOutputs, kCols, Eigen::RowMajor> G;
  Eigen::Matrix<double, kElementDofs, kCols> K = Eigen::Matrix<double, kElementDofs, kCols>::Zero();
  Eigen::Matrix<double, 8, kCols> tmp;

  for (int qi = 0; qi < 8; ++qi) {
    const QpGeometry& q = geom.qp[qi];
    const PointValues v = interpolate(q, state);
    check_jacobian(v.F, element_id, qi);

    PointInputs<D> in;
    for (int X = 0; X < 4; ++X) in.c[X] = D::variable(v.c[X], kInC + X);
    for (int X = 0; X < 3; ++X)
      for (int k = 0; k < 3; ++k) in.grad[X](k) = D::variable(v.grad[X](k), kInGrad + 3 * X + k);
    for (int i = 0; i < 3; ++i)
      for (int J = 0; J < 3; ++J) in.F(i, J) = D::variable(v.F(i, J), kInF + 3 * i + J);
    for (int k = 0; k < 3; ++k) in.gradJ(k) = D::variable(v.gradJ(k), kInGradJ + k);

    const PointOutputs<D> o = evaluate_point(in, v.c_old, m, dt, false, true, true);
    out.growth_clamped = out.growth_clamped || o.clamped;

    for (int X = 0; X < 4; ++X) add_species_residual(out.residual, q, o, X);
    add_mechanics_residual(out.residual, q, o);

    for (int X = 0; X < 4; ++X) {
      chain_to_dofs(o.s[X].d.data(), q, G.row(kOutS + X).data());
      for (int k = 0; k < 3; ++k)
        chain_to_dofs(o.q[X](k).d.data(), q, G.row(kOutQ + 3 * X + k).data());
    }
    for (int i = 0; i < 3; ++i)
      for (int J = 0; J < 3; ++J)
        chain_to_dofs(o.P(i, J).d.data(), q, G.row(kOutP + 3 * i + J).data());

    for (int X = 0; X < 4; ++X)
      K.middleRows<8>(8 * X).noalias() +=
          q.dV * (q.N * G.row(kOutS + X) + q.B * G.middleRows<3>(kOutQ + 3 * X));
    for (int i = 0; i < 3; ++i) {
      tmp.noalias() = q.dV * (q.B * G.middleRows<3>(kOutP + 3 * i));
      for (int a = 0; a < 8; ++a) K.row(32 + 3 * a + i) += tmp.row(a);
    }
  }
  out.stiffness = K.leftCols<kElementDofs>();
  out.d_residual_d_J_nodal = K.rightCols<8>();
}

void semi_implicit(const ElementGeometry& geom, const ElementState& state,
                   const ElementMaterial& m, double dt, Field field, ElementContribution& out,
                   int element_id) {
  using D = Dual<double, 4>;
  const int X = static_cast<int>(field);
  const bool has_grad = X < 3;
  auto Kxx = out.K(static_cast<Block>(X), static_cast<Block>(X));

  for (int qi = 0; qi < 8; ++qi) {
    const QpGeometry& q = geom.qp[qi];
    const PointValues v = interpolate(q, state);
    check_jacobian(v.F_old, element_id, qi);

    PointInputs<D> in;
    for (int Y = 0; Y < 4; ++Y) in.c[Y] = D(v.c_old[Y]);
    for (int Y = 0; Y < 3; ++Y) in.grad[Y] = lift<D>(v.grad_old[Y]);
    in.F = lift<D>(v.F_old);
    in.gradJ = lift<D>(v.gradJ_old);
    in.c[X] = D::variable(v.c[X], 0);
    if (has_grad)
      for (int k = 0; k < 3; ++k) in.grad[X](k) = D::variable(v.grad[X](k), 1 + k);

    const PointOutputs<D> o = evaluate_point(in, v.c_old, m, dt, true, true, false);
    add_species_residual(out.residual, q, o, X);

    // d(s), d(q_k) with respect to the nodal values of the own field.
    Eigen::Matrix<double, 1, 8> gs;
    Eigen::Matrix<double, 3, 8> gq;
    for (int b = 0; b < 8; ++b) {
      gs(b) = o.s[X].d[0] * q.N(b);
      for (int k = 0; k < 3; ++k) gq(k, b) = o.q[X](k).d[0] * q.N(b);
      for (int m2 = 0; m2 < 3; ++m2) {
        gs(b) += o.s[X].d[1 + m2] * q.B(b, m2);
        for (int k = 0; k < 3; ++k) gq(k, b) += o.q[X](k).d[1 + m2] * q.B(b, m2);
      }
    }
    Kxx.noalias() += q.dV * (q.N * gs + q.B * gq);
  }
}

void mechanics(const ElementGeometry& geom, const ElementState& state, const ElementMaterial& m,
               double dt, ElementContribution& out, int element_id) {
  using D = Dual<double, 9>;
  auto Kuu = out.K(Block::u, Block::u);
  Eigen::Matrix<double, 9, 9> A;
  for (int qi = 0; qi < 8; ++qi) {
    const QpGeometry& q = geom.qp[qi];
    const PointValues v = interpolate(q, state);
    check_jacobian(v.F, element_id, qi);

    PointInputs<D> in;
    for (int Y = 0; Y < 4; ++Y) in.c[Y] = D(v.c[Y]);
    for (int i = 0; i < 3; ++i)
      for (int J = 0; J < 3; ++J) in.F(i, J) = D::variable(v.F(i, J), 3 * i + J);
    const PointOutputs<D> o = evaluate_point(in, v.c_old, m, dt, false, false, true);
    out.growth_clamped = out.growth_clamped || o.clamped;
    add_mechanics_residual(out.residual, q, o);

    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 9; ++c) A(r, c) = o.P(r / 3, r % 3).d[c];
    // K(3a+i, 3b+k) = sum_JL A(iJ, kL) B_aJ B_bL
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        const Mat3d Aik = A.block<3, 3>(3 * i, 3 * k);
        const Eigen::Matrix<double, 8, 8> Kik = q.dV * (q.B * Aik * q.B.transpose());
        for (int a = 0; a < 8; ++a)
          for (int b = 0; b < 8; ++b) Kuu(3 * a + i, 3 * b + k) += Kik(a, b);
      }
  }
}

}  // namespace

void hex_residual_tangent(const ElementGeometry& geom, const ElementState& state,
                          const ElementMaterial& material, double dt,
                          const ElementScheme& scheme, ElementContribution& out,
                          int element_id) {
  if (!(dt > 0.0)) throw InvalidArgument("hex_residual_tangent: dt must be positive");
  out.set_zero();
  switch (scheme.kind) {
    case ElementScheme::FullyImplicit:
      fully_implicit(geom, state, material, dt, out, element_id);
      break;
    case ElementScheme::SemiImplicit:
      semi_implicit(geom, state, material, dt, scheme.field, out, element_id);
      break;
    case ElementScheme::Mechanics:
      mechanics(geom, state, material, dt, out, element_id);
      break;
  }
}

Eigen::Matrix<double, kElementDofs, 1> hex_residual(const ElementGeometry& geom,
                                                    const ElementState& state,
                                                    const ElementMaterial& material, double dt,
                                                    const ElementScheme& scheme, int element_id) {
  if (!(dt > 0.0)) throw InvalidArgument("hex_residual: dt must be positive");
  Eigen::Matrix<double, kElementDofs, 1> R = Eigen::Matrix<double, kElementDofs, 1>::Zero();
  const bool semi = scheme.kind == ElementScheme::SemiImplicit;
  const int own = static_cast<int>(scheme.field);
  for (int qi = 0; qi < 8; ++qi) {
    const QpGeometry& q = geom.qp[qi];
    const PointValues v = interpolate(q, state);
    PointInputs<double> in;
    if (semi) {
      in.c = v.c_old;
      for (int Y = 0; Y < 3; ++Y) in.grad[Y] = v.grad_old[Y];
      in.F = v.F_old;
      in.gradJ = v.gradJ_old;
      in.c[own] = v.c[own];
      if (own < 3) in.grad[own] = v.grad[own];
    } else {
      in.c = v.c;
      for (int Y = 0; Y < 3; ++Y) in.grad[Y] = v.grad[Y];
      in.F = v.F;
      in.gradJ = v.gradJ;
    }
    check_jacobian(in.F, element_id, qi);
    const bool species = scheme.kind != ElementScheme::Mechanics;
    const bool stress = scheme.kind != ElementScheme::SemiImplicit;
    const PointOutputs<double> o = evaluate_point(in, v.c_old, material, dt, semi, species, stress);
    if (semi) {
      add_species_residual(R, q, o, own);
    } else {
      if (species)
        for (int X = 0; X < 4; ++X) add_species_residual(R, q, o, X);
      add_mechanics_residual(R, q, o);
    }
  }
  return R;
}

// ---------------------------------------------------------------------------

double InfluxProfile::q(Field f, double time) const {
  if (f != Field::P && f != Field::T) return 0.0;
  const std::vector<double>& v = f == Field::P ? q_P : q_T;
  if (t.empty()) return 0.0;
  if (time <= t.front()) return v.front();
  if (time >= t.back()) return v.back();
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const size_t i = static_cast<size_t>(it - t.begin());
  const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
  return (1.0 - w) * v[i - 1] + w * v[i];
}

void InfluxProfile::validate() const {
  if (t.size() != q_P.size() || t.size() != q_T.size())
    throw InvalidArgument("influx profile: breakpoint arrays differ in length");
  for (size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1]))
      throw InvalidArgument("influx profile: times must be strictly increasing");
}

InfluxProfile InfluxProfile::damage_and_recovery(double peak_P, double peak_T) {
  InfluxProfile p;
  p.t = {0.0, 30.0, 100.0, 370.0};
  p.q_P = {0.0, peak_P, peak_P, 0.0};
  p.q_T = {0.0, peak_T, peak_T, 0.0};
  return p;
}

FluxContribution flux_surface_residual_tangent(const Eigen::Matrix<double, 4, 3>& X,
                                               const Eigen::Matrix<double, 4, 3>& u,
                                               const Eigen::Matrix<double, 4, 1>& c0,
                                               double q_in, double p_en) {
  using D = Dual<double, 16>;
  FluxContribution out;
  out.residual.setZero();
  out.K_cc.setZero();
  out.K_cu.setZero();

  Eigen::Matrix<D, 4, 3> x;
  Eigen::Matrix<D, 4, 1> c;
  for (int a = 0; a < 4; ++a) {
    for (int i = 0; i < 3; ++i) x(a, i) = D::variable(u(a, i), 3 * a + i) + X(a, i);
    c(a) = D::variable(c0(a), 12 + a);
  }
  const double diag2 = (X.row(2) - X.row(0)).squaredNorm() + (X.row(3) - X.row(1)).squaredNorm();

  const QuadRule& rule = gauss_quad_2x2();
  for (size_t qi = 0; qi < rule.points.size(); ++qi) {
    const Quad4Shape s = shape_quad4(rule.points[qi](0), rule.points[qi](1));
    const Vec3d Xxi = X.transpose() * s.dN.col(0);
    const Vec3d Xeta = X.transpose() * s.dN.col(1);
    Vec3d Nref = Xxi.cross(Xeta);
    const double jac = Nref.norm();
    if (!(jac > 1e-12 * diag2)) throw GeometryError("flux quad is degenerate (zero area)");
    Nref /= jac;
    Mat3d Jref;
    Jref << Xxi, Xeta, Nref;

    Vec3<D> xxi(D(0.0), D(0.0), D(0.0)), xeta(D(0.0), D(0.0), D(0.0));
    D cq(0.0);
    for (int a = 0; a < 4; ++a) {
      for (int i = 0; i < 3; ++i) {
        xxi(i) += s.dN(a, 0) * x(a, i);
        xeta(i) += s.dN(a, 1) * x(a, i);
      }
      cq += s.N(a) * c(a);
    }
    Vec3<D> n = xxi.cross(xeta);
    using std::sqrt;
    const D nlen = sqrt(n.dot(n));
    if (!(value_of(nlen) > 0.0)) throw GeometryError("flux quad collapsed in the current configuration");
    n /= nlen;
    Mat3<D> jcur;
    for (int i = 0; i < 3; ++i) {
      jcur(i, 0) = xxi(i);
      jcur(i, 1) = xeta(i);
      jcur(i, 2) = n(i);
    }
    const Mat3<D> F = jcur * lift<D>(Mat3d(Jref.inverse()));
    const D Js = det3(F);
    const D qbar = q_in - p_en * cq / Js;
    const Vec3<D> FinvN = inv3(F) * n;  // F^-T applied inside the dot product
    D nfac(0.0);
    for (int i = 0; i < 3; ++i) nfac += FinvN(i) * Nref(i);
    const D integrand = Js * qbar * nfac * (rule.weights[qi] * jac);
    for (int a = 0; a < 4; ++a) {
      const D r = -integrand * s.N(a);
      out.residual(a) += r.v;
      for (int k = 0; k < 12; ++k) out.K_cu(a, k) += r.d[k];
      for (int b = 0; b < 4; ++b) out.K_cc(a, b) += r.d[12 + b];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::array<double, 8> qp_jacobians(const ElementGeometry& geom,
                                   const Eigen::Matrix<double, 8, 3>& u) {
  std::array<double, 8> J;
  for (int q = 0; q < 8; ++q) {
    const Mat3d F = Mat3d::Identity() + u.transpose() * geom.qp[q].B;
    J[q] = F.determinant();
  }
  return J;
}

Eigen::VectorXd project_nodal_J(const std::vector<ElementGeometry>& geometry, int num_nodes,
                                const std::vector<std::array<double, 8>>& J_qp) {
  if (J_qp.size() != geometry.size())
    throw InvalidArgument("project_nodal_J: one J array per element required");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(num_nodes);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(num_nodes);
  for (size_t e = 0; e < geometry.size(); ++e) {
    const ElementGeometry& g = geometry[e];
    double integral = 0.0;
    for (int q = 0; q < 8; ++q) integral += J_qp[e][q] * g.qp[q].dV;
    for (int n : g.nodes) {
      sum(n) += integral;
      weight(n) += g.volume;
    }
  }
  for (int n = 0; n < num_nodes; ++n)
    sum(n) = weight(n) > 0.0 ? sum(n) / weight(n) : 1.0;
  return sum;
}

}  // namespace isr
