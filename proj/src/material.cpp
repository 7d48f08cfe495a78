#include "ehdg/material.hpp"

#include <string>

namespace ehdg {

MaterialLaw make_material(double E, double nu) {
  if (!(E > 0)) {
    throw MaterialError("Young's modulus must be positive, got E = " + std::to_string(E));
  }
  if (!(nu > 0 && nu < 0.5)) {
    throw MaterialError("Poisson ratio must satisfy 0 < nu < 0.5, got nu = " + std::to_string(nu));
  }
  MaterialLaw m;
  m.E = E;
  m.nu = nu;
  m.lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  m.mu = E / (2.0 * (1.0 + nu));
  return m;
}

}  // namespace ehdg
