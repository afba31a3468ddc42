#include "isr/constitutive.hpp"

#include <cmath>

namespace isr {

const char* growth_model_name(GrowthModel model) {
  return model == GrowthModel::StressFreeAnisotropic ? "anisotropic" : "isotropic";
}

void StructuralParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("structural parameter out of range: ") + what);
  };
  require(mu > 0.0, "mu > 0");
  require(lambda > 0.0, "lambda > 0");
  require(k1_bar >= 0.0, "k1_bar >= 0");
  require(k2 > 0.0, "k2 > 0");
  require(kappa >= 0.0 && kappa <= 1.0 / 3.0, "0 <= kappa <= 1/3");
  require(c_E_eq > 0.0, "c_E_eq > 0");
  require(rho_S_eq > 0.0, "rho_S_eq > 0");
}

Mat3d structural_tensor(const Vec3d& a0, double kappa) {
  if (std::abs(a0.norm() - 1.0) > 1e-10)
    throw InvalidArgument("structural_tensor: fiber direction is not a unit vector");
  return kappa * Mat3d::Identity() + (1.0 - 3.0 * kappa) * a0 * a0.transpose();
}

Vec3d growth_direction(const Vec3d& a01, const Vec3d& a02) {
  const Vec3d n = a01.cross(a02);
  const double len = n.norm();
  if (len < 1e-10 * a01.norm() * a02.norm())
    throw InvalidArgument("growth_direction: fiber directions are parallel");
  return n / len;
}

Vec3d growth_direction_for(const FiberPair& fibers, const StructuralParams& p) {
  if (p.growth_model == GrowthModel::StressFreeAnisotropic)
    return growth_direction(fibers.a1, fibers.a2);
  return Vec3d::Zero();
}

StressTangent stress_and_tangent(const Mat3d& F, double rho0_S, double c0_E,
                                 const FiberPair& fibers, const StructuralParams& p) {
  using D = Dual<double, 11>;
  const Mat3d H1 = structural_tensor(fibers.a1, p.kappa);
  const Mat3d H2 = structural_tensor(fibers.a2, p.kappa);
  const Vec3d gamma = growth_direction_for(fibers, p);

  Mat3<D> Fd;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) Fd(i, j) = D::variable(F(i, j), 3 * i + j);
  const D rho = D::variable(rho0_S, 9);
  const D cE = D::variable(c0_E, 10);

  const GrowthState<D> g = growth_from_density(rho, p, gamma);
  const Mat3<D> P = first_piola(Fd, g, cE, H1, H2, p);

  StressTangent out;
  out.growth_clamped = g.clamped;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      out.P(i, j) = P(i, j).v;
      for (int k = 0; k < 9; ++k) out.A(3 * i + j, k) = P(i, j).d[k];
      out.dP_drho(i, j) = P(i, j).d[9];
      out.dP_dcE(i, j) = P(i, j).d[10];
    }
  return out;
}

}  // namespace isr
