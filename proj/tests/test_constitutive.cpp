#include <doctest.h>

#include <cmath>
#include <random>

#include "isr/constitutive.hpp"
#include "isr/error.hpp"
#include "oracles.hpp"

using namespace isr;

namespace {

Mat3d diag(double a, double b, double c) { return Vec3d(a, b, c).asDiagonal(); }

}  // namespace

TEST_CASE("structural tensor") {
  CHECK((structural_tensor(Vec3d::UnitX(), 0.0) - diag(1, 0, 0)).norm() < 1e-15);
  const Vec3d a = Vec3d(1, 2, 3).normalized();
  CHECK((structural_tensor(a, 1.0 / 3.0) - Mat3d::Identity() / 3.0).norm() < 1e-15);
  CHECK((structural_tensor(Vec3d::UnitY(), 0.1) - diag(0.1, 0.8, 0.1)).norm() < 1e-15);
  for (double k : {0.0, 0.05, 0.1, 0.24, 1.0 / 3.0}) CHECK(structural_tensor(a, k).trace() == doctest::Approx(1.0));
  CHECK_THROWS_AS(structural_tensor(Vec3d(1, 1, 0), 0.1), InvalidArgument);
}

TEST_CASE("fiber strain and Macaulay gate") {
  const Mat3d H = structural_tensor(Vec3d::UnitX(), 0.0);
  CHECK(fiber_strain<double>(Mat3d::Identity(), structural_tensor(Vec3d(0, 0.6, 0.8), 0.2)) ==
        doctest::Approx(0.0).epsilon(1e-15));
  CHECK(fiber_strain<double>(diag(1.21, 1, 1), H) == doctest::Approx(0.21));
  const double Ec = fiber_strain<double>(diag(0.81, 1, 1), H);
  CHECK(Ec == doctest::Approx(-0.19));
  CHECK(macaulay(Ec) == 0.0);

  // Fiber compression leaves the anisotropic energy untouched.
  StructuralParams p;
  p.kappa = 0.0;
  p.mu = 1e-12;  // isolate the fiber part as far as possible
  const GrowthState<double> g = growth_from_density(p.rho_S_eq, p, Vec3d::Zero());
  const double psi_iso_only =
      free_energy<double>(Mat3d(diag(0.9, 1, 1)), g, 0.0, H, H, p);
  const double psi_with_fibers =
      free_energy<double>(Mat3d(diag(0.9, 1, 1)), g, p.c_E_eq, H, H, p);
  CHECK(psi_with_fibers == doctest::Approx(psi_iso_only).epsilon(1e-15));
}

TEST_CASE("growth from density") {
  StructuralParams p;
  for (GrowthModel m : {GrowthModel::IsotropicMatrix, GrowthModel::StressFreeAnisotropic}) {
    p.growth_model = m;
    const auto g = growth_from_density(p.rho_S_eq, p, Vec3d::UnitZ());
    CHECK(g.theta == doctest::Approx(1.0));
    CHECK(g.Jg == doctest::Approx(1.0));
    CHECK((g.Ug - Mat3d::Identity()).norm() < 1e-15);
  }
  p.growth_model = GrowthModel::IsotropicMatrix;
  auto g = growth_from_density(8.0 * p.rho_S_eq, p, Vec3d::Zero());
  CHECK(g.theta == doctest::Approx(2.0));
  CHECK(g.Jg == doctest::Approx(8.0));
  CHECK((g.Ug - 2.0 * Mat3d::Identity()).norm() < 1e-14);

  p.growth_model = GrowthModel::StressFreeAnisotropic;
  g = growth_from_density(1.5 * p.rho_S_eq, p, Vec3d::UnitZ());
  CHECK(g.Ug.determinant() == doctest::Approx(1.5));
  CHECK(g.Jg == doctest::Approx(1.5));
  Eigen::SelfAdjointEigenSolver<Mat3d> es(g.Ug);
  CHECK(es.eigenvalues()(0) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(2) == doctest::Approx(1.5));

  g = growth_from_density(0.1 * p.rho_S_eq, p, Vec3d::UnitZ());
  CHECK(g.clamped);
  CHECK(g.theta == kGrowthStretchFloor);
}

TEST_CASE("growth direction") {
  CHECK((growth_direction(Vec3d::UnitX(), Vec3d::UnitY()) - Vec3d::UnitZ()).norm() < 1e-15);
  const FiberPair f = oracle::fibers_at(41.0, Vec3d::UnitX(), Vec3d::UnitY());
  const Vec3d g1 = growth_direction(f.a1, f.a2);
  CHECK(std::abs(std::abs(g1(2)) - 1.0) < 1e-14);
  const Vec3d g2 = growth_direction(f.a2, f.a1);
  CHECK((g1 + g2).norm() < 1e-14);
  StructuralParams p;
  p.growth_model = GrowthModel::StressFreeAnisotropic;
  const auto u1 = growth_from_density(1.3 * p.rho_S_eq, p, g1);
  const auto u2 = growth_from_density(1.3 * p.rho_S_eq, p, g2);
  CHECK((u1.Ug - u2.Ug).norm() < 1e-15);
  CHECK_THROWS_AS(growth_direction(Vec3d::UnitX(), -Vec3d::UnitX()), InvalidArgument);
}

TEST_CASE("free energy") {
  StructuralParams p;
  const Mat3d H1 = structural_tensor(Vec3d::UnitX(), 0.0);
  const GrowthState<double> g = growth_from_density(p.rho_S_eq, p, Vec3d::Zero());
  CHECK(free_energy<double>(Mat3d::Identity(), g, p.c_E_eq, H1, H1, p) == doctest::Approx(0.0));

  // No ECM, no fibers: the energy equals the matrix part alone.
  const Mat3d F = diag(1.3, 0.9, 1.1);
  StructuralParams no_fiber = p;
  no_fiber.k1_bar = 0.0;
  CHECK(free_energy<double>(F, g, 0.0, H1, H1, p) ==
        doctest::Approx(free_energy<double>(F, g, p.c_E_eq, H1, H1, no_fiber)).epsilon(1e-14));

  // Independent scalar evaluation at F = diag(1.1, 1, 1), kappa = 0, fibers along X.
  p.kappa = 0.0;
  const double l = 1.1, J = l, I1 = l * l + 2.0;
  const double iso = 0.5 * p.mu * (I1 - 3.0) - p.mu * std::log(J) + 0.25 * p.lambda * (J * J - 1.0 - 2.0 * std::log(J));
  const double E = l * l - 1.0;
  const double ani = 2.0 * p.k1_bar / (2.0 * p.k2) * (std::exp(p.k2 * E * E) - 1.0);
  const double psi = free_energy<double>(Mat3d(diag(l, 1, 1)), g, p.c_E_eq, H1, H1, p);
  CHECK(psi > 0.0);
  CHECK(psi == doctest::Approx(iso + ani).epsilon(1e-13));

  CHECK_THROWS_AS(free_energy<double>(Mat3d(diag(-1, 1, 1)), g, p.c_E_eq, H1, H1, p), InvertedElementError);
}

TEST_CASE("stress at the reference state vanishes") {
  StructuralParams p;
  for (GrowthModel m : {GrowthModel::IsotropicMatrix, GrowthModel::StressFreeAnisotropic}) {
    p.growth_model = m;
    p.kappa = m == GrowthModel::StressFreeAnisotropic ? 0.0 : 0.1;
    const FiberPair f = oracle::fibers_at(41.0, Vec3d::UnitX(), Vec3d::UnitY());
    const StressTangent st = stress_and_tangent(Mat3d::Identity(), p.rho_S_eq, p.c_E_eq, f, p);
    CHECK(st.P.norm() < 1e-15);
  }
}

TEST_CASE("finite-difference oracle for stress and tangents") {
  std::mt19937_64 rng(20240611);
  for (GrowthModel m : {GrowthModel::IsotropicMatrix, GrowthModel::StressFreeAnisotropic}) {
    for (int i = 0; i < 40; ++i) {
      const oracle::MaterialSample s = oracle::random_sample(rng, m);
      const oracle::TangentErrors e = oracle::check_tangent(s);
      CHECK(e.P < 1e-5);
      CHECK(e.A < 1e-5);
      CHECK(e.d_rho < 1e-5);
      CHECK(e.d_cE < 1e-5);
    }
  }
}

TEST_CASE("anisotropic pure growth is stress free") {
  StructuralParams p;
  p.growth_model = GrowthModel::StressFreeAnisotropic;
  p.kappa = 0.0;
  const FiberPair f = oracle::fibers_at(41.0, Vec3d::UnitX(), Vec3d::UnitY());
  const Vec3d gamma = growth_direction_for(f, p);
  const auto g = growth_from_density(1.4 * p.rho_S_eq, p, gamma);
  const Mat3d F = g.Ug;
  const Mat3d H1 = structural_tensor(f.a1, 0.0), H2 = structural_tensor(f.a2, 0.0);
  CHECK(fiber_strain<double>(Mat3d(F.transpose() * F), H1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(fiber_strain<double>(Mat3d(F.transpose() * F), H2) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(free_energy<double>(F, g, p.c_E_eq, H1, H2, p) == doctest::Approx(0.0).epsilon(1e-14));
  const StressTangent st = stress_and_tangent(F, 1.4 * p.rho_S_eq, p.c_E_eq, f, p);
  CHECK(st.P.norm() < 1e-14);
}

TEST_CASE("isotropic growth with dispersed fibers leaves residual stress") {
  StructuralParams p;
  p.growth_model = GrowthModel::IsotropicMatrix;
  p.kappa = 0.1;
  const FiberPair f = oracle::fibers_at(41.0, Vec3d::UnitX(), Vec3d::UnitY());
  const double rho = 1.5 * p.rho_S_eq;
  const auto g = growth_from_density(rho, p, Vec3d::Zero());
  const StressTangent st = stress_and_tangent(g.Ug, rho, p.c_E_eq, f, p);  // C = Ug^2
  CHECK(st.P.norm() > 1e-6);
}

TEST_CASE("volume split and energy sign") {
  std::mt19937_64 rng(7);
  for (GrowthModel m : {GrowthModel::IsotropicMatrix, GrowthModel::StressFreeAnisotropic}) {
    for (int i = 0; i < 50; ++i) {
      const oracle::MaterialSample s = oracle::random_sample(rng, m);
      const Vec3d gamma = growth_direction_for(s.fibers, s.params);
      const auto g = growth_from_density(s.rho0_S, s.params, gamma);
      const double J = s.F.determinant();
      const double Js = (s.F * g.Ug.inverse()).determinant();
      CHECK(std::abs(J - Js * g.Jg) / J < 1e-12);
      CHECK(std::abs(g.Ug.determinant() - g.Jg) < 1e-12);

      // Ug = I: Neo-Hookean plus exponential fibers is non-negative.
      CHECK(oracle::energy(s, s.F, s.params.rho_S_eq, s.c0_E) >= 0.0);
    }
  }
}

TEST_CASE("parameter validation") {
  StructuralParams p;
  CHECK_NOTHROW(p.validate());
  p.kappa = 0.4;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = StructuralParams{};
  p.mu = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = StructuralParams{};
  p.k2 = -1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("structural defaults") {
  const StructuralParams p;
  CHECK(p.mu == 0.02);
  CHECK(p.lambda == 10.0);
  CHECK(p.k1_bar == 0.112);
  CHECK(p.k2 == 20.61);
  CHECK(p.kappa == 0.1);
  CHECK(p.alpha == 41.0);
  CHECK(p.c_E_eq == 7.0e-9);
  CHECK(p.rho_S_eq == 3.7e5);
}
