// Growth kinematics, Helmholtz free energy and first Piola-Kirchhoff stress.
//
// The energy is split into a compressible Neo-Hookean ground matrix acting on
// the elastic part C* = Ug^-1 C Ug^-1 and two exponential collagen families
// acting on the total C through generalized structural tensors. Fiber
// stiffness scales linearly with the reference ECM concentration. Everything
// is templated on the scalar so element kernels can push Dual numbers
// through it.
#pragma once

#include <cmath>
#include <string>

#include "isr/error.hpp"
#include "isr/mesh.hpp"
#include "isr/tensor.hpp"

namespace isr {

enum class GrowthModel { StressFreeAnisotropic, IsotropicMatrix };

const char* growth_model_name(GrowthModel model);

struct StructuralParams {
  double mu = 0.02;         // MPa
  double lambda = 10.0;     // MPa
  double k1_bar = 0.112;    // MPa
  double k2 = 20.61;        // -
  double kappa = 0.1;       // - in [0, 1/3]
  double alpha = 41.0;      // degrees
  double c_E_eq = 7.0e-9;   // mol/mm^3
  double rho_S_eq = 3.7e5;  // cells/mm^3
  GrowthModel growth_model = GrowthModel::IsotropicMatrix;

  /// Throws InvalidArgument naming the first violated bound.
  void validate() const;
};

/// Growth stretches below this value are clamped so Ug stays invertible.
inline constexpr double kGrowthStretchFloor = 0.5;

template <class T>
struct GrowthState {
  T theta;
  Mat3<T> Ug;
  T Jg;
  Vec3d gamma = Vec3d::Zero();
  bool clamped = false;
};

/// H = kappa I + (1 - 3 kappa) a0 (x) a0. Requires |a0| = 1 within 1e-10.
Mat3d structural_tensor(const Vec3d& a0, double kappa);

/// Unit normal of the plane spanned by the two fiber families.
Vec3d growth_direction(const Vec3d& a01, const Vec3d& a02);

/// E = H : C - 1 (Macaulay bracket applied by the energy, not here).
template <class T>
T fiber_strain(const Mat3<T>& C, const Mat3d& H) {
  T e(-1.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) e += H(i, j) * C(i, j);
  return e;
}

template <class T>
GrowthState<T> growth_from_density(const T& rho0_S, const StructuralParams& p,
                                   const Vec3d& gamma) {
  GrowthState<T> g;
  g.gamma = gamma;
  const T ratio = rho0_S / p.rho_S_eq;
  using std::cbrt;
  g.theta = p.growth_model == GrowthModel::StressFreeAnisotropic ? ratio : T(cbrt(ratio));
  if (g.theta < kGrowthStretchFloor) {
    g.theta = T(kGrowthStretchFloor);
    g.clamped = true;
  }
  g.Ug = Mat3<T>::Identity();
  if (p.growth_model == GrowthModel::StressFreeAnisotropic) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g.Ug(i, j) += (g.theta - 1.0) * gamma(i) * gamma(j);
    g.Jg = g.theta;
  } else {
    for (int i = 0; i < 3; ++i) g.Ug(i, i) = g.theta;
    g.Jg = g.theta * g.theta * g.theta;
  }
  return g;
}

namespace detail {
template <class T>
void require_positive_jacobian(const T& J) {
  if (!(value_of(J) > 0.0))
    throw InvertedElementError(-1, "non-positive deformation Jacobian det F = " +
                                       std::to_string(value_of(J)));
}
}  // namespace detail

/// psi = psi_iso(C*, Ug) + psi_ani(C, H1, H2, c0_E), in MPa.
template <class T>
T free_energy(const Mat3<T>& F, const GrowthState<T>& g, const T& c0_E, const Mat3d& H1,
              const Mat3d& H2, const StructuralParams& p) {
  using std::exp;
  using std::log;
  const T J = det3(F);
  detail::require_positive_jacobian(J);
  const Mat3<T> Fs = F * inv3(g.Ug);
  const Mat3<T> Cs = Fs.transpose() * Fs;
  const T Js = J / g.Jg;
  const T lnJs = log(Js);
  T psi = 0.5 * p.mu * (trace3(Cs) - 3.0) - p.mu * lnJs +
          0.25 * p.lambda * (Js * Js - 1.0 - 2.0 * lnJs);

  const Mat3<T> C = F.transpose() * F;
  const T k1 = p.k1_bar * c0_E / p.c_E_eq;
  for (const Mat3d* H : {&H1, &H2}) {
    const T E = macaulay(fiber_strain(C, *H));
    psi += k1 / (2.0 * p.k2) * (exp(p.k2 * E * E) - 1.0);
  }
  return psi;
}

/// P = d psi / dF at fixed Ug and k1.
template <class T>
Mat3<T> first_piola(const Mat3<T>& F, const GrowthState<T>& g, const T& c0_E, const Mat3d& H1,
                    const Mat3d& H2, const StructuralParams& p) {
  using std::exp;
  const T J = det3(F);
  detail::require_positive_jacobian(J);
  const Mat3<T> Ug_inv = inv3(g.Ug);
  const Mat3<T> Fs = F * Ug_inv;
  const Mat3<T> Fs_invT = inv3(Fs).transpose();
  const T Js = J / g.Jg;
  const T coef = 0.5 * p.lambda * (Js * Js - 1.0) - p.mu;
  Mat3<T> Ps = p.mu * Fs + coef * Fs_invT;
  Mat3<T> P = Ps * Ug_inv;  // Ug symmetric

  const Mat3<T> C = F.transpose() * F;
  const T k1 = p.k1_bar * c0_E / p.c_E_eq;
  for (const Mat3d* H : {&H1, &H2}) {
    const T E = macaulay(fiber_strain(C, *H));
    if (!(E > 0.0)) continue;
    const T s = 2.0 * k1 * E * exp(p.k2 * E * E);
    P += s * (F * H->template cast<T>());
  }
  return P;
}

struct StressTangent {
  Mat3d P;
  /// A(3 i + J, 3 k + L) = dP_iJ / dF_kL.
  Eigen::Matrix<double, 9, 9> A;
  Mat3d dP_drho;
  Mat3d dP_dcE;
  bool growth_clamped = false;
};

/// Stress and all sensitivities at one material point, fibers taken from
/// `fibers` with the dispersion and growth model of `p`.
StressTangent stress_and_tangent(const Mat3d& F, double rho0_S, double c0_E,
                                 const FiberPair& fibers, const StructuralParams& p);

/// Growth direction to use for `p`: the fiber-plane normal for the
/// anisotropic model, zero (unused) for the isotropic one.
Vec3d growth_direction_for(const FiberPair& fibers, const StructuralParams& p);

}  // namespace isr
