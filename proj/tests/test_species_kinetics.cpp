#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "isr/error.hpp"
#include "isr/species_kinetics.hpp"
#include "oracles.hpp"

using namespace isr;

namespace {

SpeciesPointState<double> rest_state(const SpeciesParams& p) {
  SpeciesPointState<double> s;
  s.c0_P = 0.0;
  s.c0_T = 0.0;
  s.c0_E = p.c_E_eq;
  s.rho0_S = p.rho_S_eq;
  s.grad_c0_P = s.grad_c0_T = s.grad_c0_E = s.grad_J = Vec3d::Zero();
  s.J = 1.0;
  s.Cinv = Mat3d::Identity();
  return s;
}

}  // namespace

TEST_CASE("scaling functions") {
  const SpeciesParams p;
  CHECK(f_P(p.c_P_th, p) == doctest::Approx(0.5));
  CHECK(f_T(p.c_T_th, p) == doctest::Approx(0.5));
  CHECK(f_P(0.0, p) == doctest::Approx(1.0 / (1.0 + std::exp(10.0))).epsilon(1e-12));
  CHECK(f_P(0.0, p) == doctest::Approx(4.54e-5).epsilon(1e-3));
  CHECK(f_T(0.0, p) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
  CHECK(f_T(0.0, p) == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(f_P(1e-12, p) == doctest::Approx(1.0));
  CHECK(f_T(1e-12, p) < 1e-200);

  double prev_P = 0.0, prev_T = 1.0;
  for (int i = -50; i <= 50; ++i) {
    const double c = p.c_P_th * (1.0 + 0.05 * i);
    const double fp = f_P(c, p), ft = f_T(c * 0.1, p);
    CHECK(fp >= prev_P);
    CHECK(ft <= prev_T);
    prev_P = fp;
    prev_T = ft;
  }
  // Bounded for any finite input, including ones that overflow exp().
  for (double c : {-1.0, -1e-10, 1e-3, 1.0, std::numeric_limits<double>::max()}) {
    CHECK(f_P(c, p) >= 0.0);
    CHECK(f_P(c, p) <= 1.0);
    CHECK(std::isfinite(f_T(c, p)));
  }
}

TEST_CASE("PDGF reaction") {
  const SpeciesParams p;
  SpeciesPointState<double> s = rest_state(p);
  CHECK(pdgf_reaction(s, p) == 0.0);

  s.c0_T = 1e-18;  // f_T close to 0.73 at this level
  s.c0_P = 2e-16;
  const double fT = 1.0 / (1.0 + std::exp(p.l_T * (s.c0_T - p.c_T_th)));
  const double expected = p.eta_P * p.rho_S_eq * s.c0_T - p.eps_P * fT * p.rho_S_eq * s.c0_P;
  CHECK(std::abs(pdgf_reaction(s, p) - expected) / std::abs(expected) < 1e-12);

  s.c0_P = 0.0;
  const double r1 = pdgf_reaction(s, p);
  s.J = 2.0;
  CHECK(pdgf_reaction(s, p) == doctest::Approx(0.5 * r1).epsilon(1e-14));
}

TEST_CASE("TGF-beta reaction") {
  const SpeciesParams p;
  SpeciesPointState<double> s = rest_state(p);
  CHECK(tgf_reaction(s, p) == 0.0);
  s.c0_T = 1e-16;
  CHECK(tgf_reaction(s, p) == doctest::Approx(-3.7e-18).epsilon(1e-12));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    s.c0_T = 1e-15 * u(rng);
    s.rho0_S = 1e6 * u(rng);
    s.J = 0.5 + u(rng);
    CHECK(tgf_reaction(s, p) <= 0.0);
  }
}

TEST_CASE("ECM reaction") {
  const SpeciesParams p;
  SpeciesPointState<double> s = rest_state(p);
  // Resting state: small positive secretion toward the threshold.
  CHECK(ecm_reaction(s, p) == doctest::Approx(p.eta_E * p.rho_S_eq * (1.0 - p.c_E_eq / p.c_E_th)).epsilon(1e-12));
  CHECK(ecm_reaction(s, p) > 0.0);

  s.J = 1.3;
  s.c0_E = s.J * p.c_E_th;
  CHECK(std::abs(ecm_reaction(s, p)) < 1e-25);

  s = rest_state(p);
  const double no_pdgf = ecm_reaction(s, p);
  s.c0_P = 1e-16;
  CHECK(ecm_reaction(s, p) < no_pdgf);
  CHECK(ecm_reaction(s, p) - no_pdgf == doctest::Approx(-p.eps_E * 1e-16 * p.c_E_eq));
}

TEST_CASE("ECM point ODE against the closed form") {
  // Reduced ODE dc/dt = eta_E rho (1 - c / c_th) from c = 0, backward Euler
  // with two Richardson levels. A slow secretion coefficient keeps the
  // transient resolvable.
  SpeciesParams p;
  p.eta_E = 2e-13;
  SpeciesPointState<double> s = rest_state(p);
  const double k = p.eta_E * p.rho_S_eq / p.c_E_th;
  auto integrate = [&](double dt, double t_end) {
    double c = 0.0;
    const long n = std::lround(t_end / dt);
    for (long i = 0; i < n; ++i) {
      // Linear in c: c_new = c + dt * (a - b c_new)
      s.c0_E = 0.0;
      const double a = ecm_reaction(s, p);
      s.c0_E = 1.0;
      const double b = a - ecm_reaction(s, p);
      c = (c + dt * a) / (1.0 + dt * b);
    }
    return c;
  };
  for (double t : {5.0, 20.0, 60.0}) {
    const double exact = p.c_E_th * (1.0 - std::exp(-k * t));
    const double c1 = integrate(0.1, t), c2 = integrate(0.05, t), c4 = integrate(0.025, t);
    const double r12 = 2.0 * c2 - c1, r24 = 2.0 * c4 - c2;
    const double extrapolated = (4.0 * r24 - r12) / 3.0;
    CHECK(std::abs(extrapolated - exact) / exact < 1e-6);
  }
}

TEST_CASE("SMC reaction") {
  const SpeciesParams p;
  SpeciesPointState<double> s = rest_state(p);
  CHECK(smc_reaction(s, p) == 0.0);
  s.c0_P = 1e-15;
  s.c0_E = 0.5 * p.c_E_eq;
  CHECK(smc_reaction(s, p) > 0.0);
  s.c0_E = s.J * p.c_E_th;
  CHECK(std::abs(smc_reaction(s, p)) < 1e-300);
  s.c0_E = 0.5 * p.c_E_eq;
  const double proliferating = smc_reaction(s, p);
  s.c0_T = 1e-14;  // far above c_T_th
  CHECK(smc_reaction(s, p) >= 0.0);
  CHECK(smc_reaction(s, p) < 1e-30 * proliferating);
}

TEST_CASE("diffusive flux") {
  const Vec3d g(0.3, -0.2, 0.7);
  CHECK((gf_diffusive_flux<double>(1e-15, g, 1.0, Vec3d::Zero(), Mat3d::Identity(), 0.1) - 0.1 * g).norm() < 1e-16);

  // Pure dilation F = 2I: C^-1 = I/4.
  const Vec3d q = gf_diffusive_flux<double>(8e-15, Vec3d::UnitX(), 8.0, Vec3d::Zero(),
                                            Mat3d::Identity() / 4.0, 0.1);
  CHECK(q(0) == doctest::Approx(0.025));
  CHECK(q(1) == 0.0);
  CHECK(q(2) == 0.0);

  // Spatially uniform c: c0 = J c with Grad c0 = c Grad J gives no flux.
  const Vec3d gradJ(0.1, 0.2, -0.05);
  const double c = 3e-16, J = 1.2;
  const Mat3d Cinv = Vec3d(0.9, 1.1, 0.8).asDiagonal();
  CHECK(gf_diffusive_flux<double>(J * c, c * gradJ, J, gradJ, Cinv, 0.1).norm() < 1e-30);
}

TEST_CASE("SMC taxis fluxes") {
  const SpeciesParams p;
  SpeciesPointState<double> s = rest_state(p);
  s.c0_P = 2e-15;
  s.c0_E = 0.6 * p.c_E_eq;
  s.grad_c0_P = Vec3d(1e-15, 0.0, 0.0);
  s.grad_c0_E = Vec3d(0.0, 1e-9, 0.0);

  // F = I: Eulerian Keller-Segel forms.
  auto [chemo, hapto] = smc_flux_coefficients(s, p);
  const Vec3d chemo_e = -p.chi_C * (1.0 - s.c0_E / p.c_E_th) * s.rho0_S * s.grad_c0_P;
  const Vec3d hapto_e = p.chi_H * f_P(s.c0_P, p) * s.rho0_S * s.grad_c0_E;
  CHECK((chemo - chemo_e).norm() <= 1e-14 * chemo_e.norm());
  CHECK((hapto - hapto_e).norm() <= 1e-14 * hapto_e.norm());

  // Saturated ECM stops chemotaxis.
  s.c0_E = s.J * p.c_E_th;
  CHECK(smc_flux_coefficients(s, p).first.norm() == 0.0);

  // Uniform spatial fields give no taxis.
  s.J = 1.1;
  s.grad_J = Vec3d(0.2, -0.1, 0.3);
  s.c0_P = 1.1 * 1e-15;
  s.c0_E = 1.1 * 5e-9;
  s.grad_c0_P = 1e-15 * s.grad_J;
  s.grad_c0_E = 5e-9 * s.grad_J;
  auto [c2, h2] = smc_flux_coefficients(s, p);
  CHECK(c2.norm() < 1e-20 * std::abs(p.chi_C * s.rho0_S * 1e-15));
  CHECK(h2.norm() < 1e-20 * std::abs(p.chi_H * s.rho0_S * 5e-9));
}

TEST_CASE("resting initial state") {
  const SpeciesParams p;
  const SpeciesPointState<double> s = rest_state(p);
  CHECK(pdgf_reaction(s, p) == 0.0);
  CHECK(tgf_reaction(s, p) == 0.0);
  CHECK(smc_reaction(s, p) == 0.0);
  CHECK(ecm_reaction(s, p) == p.eta_E * p.rho_S_eq * (1.0 - p.c_E_eq / p.c_E_th));
}

TEST_CASE("Eulerian and Lagrangian forms agree on manufactured fields") {
  SpeciesParams p;
  std::vector<Vec3d> points;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 6; ++i) points.emplace_back(u(rng), u(rng), u(rng));
  for (double t : {0.0, 1.7}) {
    const oracle::ManufacturedErrors e = oracle::manufactured_check(points, t, p);
    CHECK(e.transport < 1e-10);
    CHECK(e.reaction < 1e-10);
    CHECK(e.smc_reaction < 1e-10);
    CHECK(e.time_rate < 1e-10);
  }
}

TEST_CASE("species parameter validation and defaults") {
  SpeciesParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.D_P == 0.1);
  CHECK(p.eta_P == 1e-6);
  CHECK(p.eps_P == 1e-7);
  CHECK(p.c_P_th == 1e-15);
  CHECK(p.l_P == 1e16);
  CHECK(p.D_T == 0.1);
  CHECK(p.eps_T == 1e-7);
  CHECK(p.c_T_th == 1e-16);
  CHECK(p.l_T == 1e16);
  CHECK(p.eta_E == 1e-7);
  CHECK(p.eps_E == 1e21);
  CHECK(p.c_E_eq == 7.0e-9);
  CHECK(p.c_E_th == 7.0007e-9);
  CHECK(p.chi_C == 1e11);
  CHECK(p.chi_H == 1e6);
  CHECK(p.eta_S == 1e14);
  CHECK(p.rho_S_eq == 3.7e5);

  p.c_E_th = 0.5 * p.c_E_eq;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = SpeciesParams{};
  p.D_P = -1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
