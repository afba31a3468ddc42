// Scaling functions, reaction terms and Lagrangian transport fluxes of the
// four wall species. All quantities with a superscript-0 meaning live in the
// reference configuration: c0 = J c.
#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "isr/tensor.hpp"

namespace isr {

struct SpeciesParams {
  // PDGF
  double D_P = 0.1;      // mm^2/day
  double eta_P = 1e-6;   // mm^3/cell/day
  double eps_P = 1e-7;   // mm^3/cell/day
  double c_P_th = 1e-15; // mol/mm^3
  double l_P = 1e16;     // mm^3/mol
  // TGF-beta
  double D_T = 0.1;
  double eps_T = 1e-7;
  double c_T_th = 1e-16;
  double l_T = 1e16;
  // ECM
  double eta_E = 1e-7;       // mol/cell/day
  double eps_E = 1e21;       // mm^3/mol/day
  double c_E_eq = 7.0e-9;    // mol/mm^3
  double c_E_th = 7.0007e-9; // mol/mm^3
  // SMC
  double chi_C = 1e11;       // mm^5/mol/day
  double chi_H = 1e6;        // mm^5/mol/day
  double eta_S = 1e14;       // mm^3/cell/day (per-layer value in the artery)
  double rho_S_eq = 3.7e5;   // cells/mm^3

  void validate() const;
};

/// Exponent bound inside the logistic gates; l = 1e16 overflows otherwise.
inline constexpr double kLogisticExponentClamp = 500.0;

namespace detail {
template <class T>
T clamp_exponent(const T& x) {
  if (x > kLogisticExponentClamp) return T(kLogisticExponentClamp);
  if (x < -kLogisticExponentClamp) return T(-kLogisticExponentClamp);
  return x;
}
}  // namespace detail

/// PDGF gate, increasing in c_P (spatial concentration).
template <class T>
T f_P(const T& c_P, const SpeciesParams& p) {
  using std::exp;
  return 1.0 / (1.0 + exp(detail::clamp_exponent(T(-p.l_P * (c_P - p.c_P_th)))));
}

/// TGF-beta gate, decreasing in c_T (spatial concentration).
template <class T>
T f_T(const T& c_T, const SpeciesParams& p) {
  using std::exp;
  return 1.0 / (1.0 + exp(detail::clamp_exponent(T(p.l_T * (c_T - p.c_T_th)))));
}

template <class T>
struct SpeciesPointState {
  T c0_P, c0_T, c0_E, rho0_S;
  Vec3<T> grad_c0_P, grad_c0_T, grad_c0_E;
  Vec3<T> grad_J;
  T J;
  Mat3<T> Cinv;
};

template <class T>
T pdgf_reaction(const SpeciesPointState<T>& s, const SpeciesParams& p) {
  return p.eta_P / s.J * s.rho0_S * s.c0_T -
         p.eps_P / s.J * f_T(T(s.c0_T / s.J), p) * s.rho0_S * s.c0_P;
}

template <class T>
T tgf_reaction(const SpeciesPointState<T>& s, const SpeciesParams& p) {
  return -p.eps_T / s.J * s.rho0_S * s.c0_T;
}

template <class T>
T ecm_reaction(const SpeciesPointState<T>& s, const SpeciesParams& p) {
  return p.eta_E * s.rho0_S * (1.0 - s.c0_E / (s.J * p.c_E_th)) -
         p.eps_E / s.J * s.c0_P * s.c0_E;
}

template <class T>
T smc_reaction(const SpeciesPointState<T>& s, const SpeciesParams& p) {
  return p.eta_S / (s.J * s.J) * s.c0_P * s.rho0_S * (1.0 - s.c0_E / (s.J * p.c_E_th)) *
         f_T(T(s.c0_T / s.J), p);
}

/// D C^-1 (Grad c0 - c0/J Grad J): reference flux with d c0/dt = Div(q) + ...
template <class T>
Vec3<T> gf_diffusive_flux(const T& c0, const Vec3<T>& grad_c0, const T& J, const Vec3<T>& grad_J,
                          const Mat3<T>& Cinv, double D) {
  const Vec3<T> g = grad_c0 - (c0 / J) * grad_J;
  return D * (Cinv * g);
}

/// (chemotactic, haptotactic) reference fluxes with d rho0/dt = Div(sum) + ...
template <class T>
std::pair<Vec3<T>, Vec3<T>> smc_flux_coefficients(const SpeciesPointState<T>& s,
                                                  const SpeciesParams& p) {
  const T sat = 1.0 - s.c0_E / (s.J * p.c_E_th);
  const Vec3<T> gP = s.grad_c0_P - (s.c0_P / s.J) * s.grad_J;
  const Vec3<T> gE = s.grad_c0_E - (s.c0_E / s.J) * s.grad_J;
  const T chemo_coef = -p.chi_C / s.J * sat * s.rho0_S;
  const T hapto_coef = p.chi_H / s.J * f_P(T(s.c0_P / s.J), p) * s.rho0_S;
  return {chemo_coef * (s.Cinv * gP), hapto_coef * (s.Cinv * gE)};
}

}  // namespace isr
