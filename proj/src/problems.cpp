#include "ehdg/problems.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ehdg {

Problem problem_from_displacement(const VectorC2& u, const MaterialLaw& material, int id) {
  Problem p;
  p.id = id;
  p.material = material;
  p.exact_u = u;

  const double mu = material.mu, lam = material.lambda;
  auto sigma_at = [u, mu, lam](const Vec2& x) -> SymTensor {
    const Jet2 j1 = u.x.eval(x), j2 = u.y.eval(x);
    const double tr = lam * (j1.dx + j2.dy);
    return {2.0 * mu * j1.dx + tr, 2.0 * mu * j2.dy + tr, mu * (j1.dy + j2.dx)};
  };
  auto force_at = [u, mu, lam](const Vec2& x) -> Vec2 {
    const Jet2 j1 = u.x.eval(x), j2 = u.y.eval(x);
    // -div sigma componentwise from the displacement Hessians.
    const double dx = (2.0 * mu + lam) * j1.dxx + lam * j2.dxy + mu * (j1.dyy + j2.dxy);
    const double dy = mu * (j1.dxy + j2.dxx) + lam * j1.dxy + (2.0 * mu + lam) * j2.dyy;
    return {-dx, -dy};
  };
  p.exact_sigma = {sigma_at, [force_at](const Vec2& x) { return Vec2(-force_at(x)); },
                   u.smoothness(), StressTag::Polynomial};
  p.f = force_at;
  p.g = [u](const Vec2& x) { return u.value(x); };
  return p;
}

Problem manufactured_problem(int id, double E, double nu) {
  const MaterialLaw material = make_material(E, nu);
  if (id == 1) {
    ScalarC2 u1{[](const Jet2& x, const Jet2& y) {
                  return 10.0 * (y - y * y) * sin(std::numbers::pi * x) * (1.0 - x) *
                         (1.0 - 0.5 * y);
                },
                Smoothness::Entire};
    return problem_from_displacement({u1, scalar_constant(0.0)}, material, 1);
  }
  if (id == 2) {
    auto base = [](const Jet2& x, const Jet2& y) {
      return -(x * x) * pow(x - 1.0, 2) * y * (y - 1.0) * (2.0 * y - 1.0);
    };
    ScalarC2 u1{base, Smoothness::Entire};
    ScalarC2 u2{[base](const Jet2& x, const Jet2& y) {
                  // u2(x,y) = -u1(y,x); the swapped jets carry their seeds, so
                  // the derivative slots come out right without bookkeeping.
                  return -1.0 * base(y, x);
                },
                Smoothness::Entire};
    return problem_from_displacement({u1, u2}, material, 2);
  }
  throw UsageError("unknown problem id " + std::to_string(id) + " (expected 1 or 2)");
}

}  // namespace ehdg
