// Quadrature rules: Gauss-Legendre segments, conical-product triangle rules
// (S3-symmetrized for the public rule), and composite rules on vertex-graded
// subdivisions for integrands that are only directionally continuous at
// element vertices (the rational bubble terms).
#pragma once

#include <array>
#include <vector>

#include "ehdg/types.hpp"

namespace ehdg {

struct SegmentRule {
  std::vector<double> points;  // in (0,1)
  std::vector<double> weights;
  int exactness_degree = 0;
};

struct QuadratureRule {
  std::vector<Vec2> points;  // strictly interior, reference triangle (0,0)-(1,0)-(0,1)
  std::vector<double> weights;
  int exactness_degree = 0;
};

// Exact reference-triangle moment of x^a y^b: a! b! / (a+b+2)!.
double tri_moment(int a, int b);

// Gauss-Legendre on (0,1), exact for polynomials of degree <= degree.
SegmentRule edge_quadrature(int degree);

// Symmetric interior rule, exactness verified against monomial moments at
// construction. Degrees 1..30.
QuadratureRule triangle_quadrature(int degree);

// Raw conical-product rule (interior, positive, exact; not symmetric).
// Internal workhorse for composite rules.
QuadratureRule triangle_conical(int degree);

// Composite rule on a subdivision graded toward the three reference vertices:
// `levels` rounds of splitting every cell that still touches an original
// vertex. Integrands smooth away from the vertices converge geometrically.
QuadratureRule graded_triangle_rule(int degree, int levels);

// Map a reference rule onto the physical triangle (v0,v1,v2); weights are
// scaled by |det J| so that they sum to the physical area.
QuadratureRule map_rule(const QuadratureRule& ref, const Vec2& v0, const Vec2& v1, const Vec2& v2);

}  // namespace ehdg
