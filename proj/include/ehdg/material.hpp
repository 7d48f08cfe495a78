// Isotropic plane-strain material law: Lame constants from (E, nu), the
// stiffness action on strains and its inverse (the compliance) on stresses.
#pragma once

#include "ehdg/types.hpp"

namespace ehdg {

struct MaterialLaw {
  double E = 1.0;
  double nu = 0.3;
  double lambda = 0.0;
  double mu = 0.0;

  // (1/2mu) (sigma - lambda/(2mu + 2 lambda) tr(sigma) I); stays bounded as
  // nu -> 1/2, which is what keeps the solver usable near incompressibility.
  SymTensor apply_compliance(const SymTensor& sigma) const {
    const double c = lambda / (2.0 * mu + 2.0 * lambda);
    const double t = c * sigma.trace();
    return {(sigma.xx - t) / (2.0 * mu), (sigma.yy - t) / (2.0 * mu), sigma.xy / (2.0 * mu)};
  }

  // 2 mu eps + lambda tr(eps) I
  SymTensor apply_stiffness(const SymTensor& eps) const {
    const double t = lambda * eps.trace();
    return {2.0 * mu * eps.xx + t, 2.0 * mu * eps.yy + t, 2.0 * mu * eps.xy};
  }
};

// Validates 0 < nu < 1/2 and E > 0; throws MaterialError otherwise.
MaterialLaw make_material(double E, double nu);

}  // namespace ehdg
