#include "isr/species_kinetics.hpp"

#include <string>

#include "isr/error.hpp"

namespace isr {

void SpeciesParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("species parameter out of range: ") + what);
  };
  require(D_P >= 0.0 && D_T >= 0.0, "diffusivities >= 0");
  require(eta_P >= 0.0 && eps_P >= 0.0 && eps_T >= 0.0, "growth-factor rates >= 0");
  require(eta_E >= 0.0 && eps_E >= 0.0, "ECM rates >= 0");
  require(eta_S >= 0.0 && chi_C >= 0.0 && chi_H >= 0.0, "SMC coefficients >= 0");
  require(c_P_th >= 0.0 && c_T_th >= 0.0, "thresholds >= 0");
  require(l_P >= 0.0 && l_T >= 0.0, "steepness >= 0");
  require(c_E_eq > 0.0, "c_E_eq > 0");
  require(c_E_th >= c_E_eq, "c_E_th >= c_E_eq");
  require(rho_S_eq > 0.0, "rho_S_eq > 0");
}

}  // namespace isr
