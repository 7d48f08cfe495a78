// Manufactured elasticity problems on the unit square: a prescribed
// displacement field, the stress it induces under the material law, and the
// matching body force and boundary data. Everything downstream of exact_u is
// derived through jet arithmetic, so stress values and the force (which needs
// the Hessian of u) stay consistent by construction.
#pragma once

#include <functional>

#include "ehdg/fields.hpp"
#include "ehdg/material.hpp"

namespace ehdg {

struct Problem {
  int id = 0;
  MaterialLaw material;
  VectorC2 exact_u;
  StressC2 exact_sigma;               // value from grad(u); div == -f
  std::function<Vec2(const Vec2&)> f;  // body force -div(sigma)
  std::function<Vec2(const Vec2&)> g;  // Dirichlet data, u restricted to the boundary
};

// Builds the stress/force/boundary closures for any smooth displacement and
// material; the manufactured problems below are thin wrappers. Exposed so
// tests can run patch tests with polynomial displacements.
Problem problem_from_displacement(const VectorC2& u, const MaterialLaw& material, int id = 0);

// id 1: u = (10 (y - y^2) sin(pi x) (1 - x)(1 - y/2), 0)
// id 2: u1 = -x^2 (x-1)^2 y (y-1)(2y-1), u2(x,y) = -u1(y,x)
Problem manufactured_problem(int id, double E, double nu);

}  // namespace ehdg
