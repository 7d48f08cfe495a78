// Polynomial basis construction: P_k / Q_k scalars (centered and scaled
// monomials), the vector / symmetric-tensor products with fixed directions,
// rigid motions, and orthonormal Legendre bases on edges.
#pragma once

#include <vector>

#include "ehdg/fields.hpp"
#include "ehdg/types.hpp"

namespace ehdg {

// Monomial exponent pairs: total-degree graded for P_k, tensor grid for Q_k.
std::vector<std::array<int, 2>> p_exponents(int k);
std::vector<std::array<int, 2>> q_exponents(int k);

// ((x-cx)/s)^a ((y-cy)/s)^b
ScalarC2 monomial(int a, int b, const Vec2& center = Vec2(0, 0), double scale = 1.0);

// Affine scalar c0 + c1 x + c2 y (used for the edge functions lambda_i).
ScalarC2 affine(double cx, double cy, double c0);

struct PolyBases {
  int k = 0;
  std::vector<ScalarC2> scalar;   // dim (k+1)(k+2)/2, or (k+1)^2 for Q_k
  std::vector<VectorC2> vec;      // scalar x {e1, e2}
  std::vector<StressC2> stress;   // scalar x {E1, E2, E3}, E3 = [[0,1],[1,0]]/sqrt(2)
  std::vector<VectorC2> rigid;    // (1,0), (0,1), (-y,x)
};

// tensor=false builds P_k spaces, tensor=true builds Q_k spaces.
PolyBases polynomial_bases(int k, const Vec2& center = Vec2(0, 0), double scale = 1.0,
                           bool tensor = false);

// Symmetric-tensor monomial in direction dir (0,1,2), with analytic divergence.
StressC2 stress_monomial(int a, int b, int dir, const Vec2& center = Vec2(0, 0),
                         double scale = 1.0);

// Shifted Legendre polynomial, orthonormal in L2(0,1).
double shifted_legendre(int j, double s);

// Vector polynomials on one edge parameterized by s in [0,1]:
// member m = legendre(m/2) * e_{m%2}; dimension 2(k+1).
struct EdgeBasis {
  int k = 0;
  int dim() const { return 2 * (k + 1); }
  Vec2 eval(int m, double s) const {
    Vec2 v(0, 0);
    v[m % 2] = shifted_legendre(m / 2, s);
    return v;
  }
};

}  // namespace ehdg
