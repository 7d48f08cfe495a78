// Edge bubbles B_i and vertex liftings xi_i: the non-polynomial ingredients
// of the enriched stress spaces, plus numerical checkers for the defining
// conditions (H.1)-(H.3) and (L.1)-(L.3).
#pragma once

#include "ehdg/fields.hpp"
#include "ehdg/polygon.hpp"

namespace ehdg {

// Rational denominators vanish at vertices; points within 1e-12 of one are
// rejected rather than clamped (rules never place points there).
void guard_vertices(const ReferencePolygon& poly, const Vec2& p);

// Edge bubble for edge i (0-based; edge i joins vertices i and i+1).
// Triangles and quadrilaterals use the global rational product
//   B_i = (prod_k lambda_k) * prod_{j != i} lambda_j / (lambda_j + lambda_i);
// 5+ edges use the composite bubble supported on the star subtriangle of
// edge i and extended by zero (C1 across the internal star edges).
ScalarC2 triangle_bubble(int i, const ReferencePolygon& poly);

// Vertex lifting for vertex i: on a triangle the barycentric coordinate
// lambda_{i+1}; otherwise piecewise linear on the star subtriangles with
// xi_i(v_j) = delta_ij and xi_i(center) = 0.
ScalarC2 lifting_xi(int i, const ReferencePolygon& poly);

struct EdgeConditionReport {
  double boundary_max = 0;      // max |B| over all edge Gauss points
  double other_normal_max = 0;  // max |dB/dn_j| for j != i
  // On edge i the outward normal derivative is c * lambda_{i-1} lambda_{i+1}
  // for a constant c < 0 (it is -1 on the unit square, -|grad lambda_i| on a
  // triangle); the checker estimates c and reports the residual.
  double ratio_constant = 0;
  double ratio_deviation = 0;
  bool pass = false;
};
EdgeConditionReport check_bubble_conditions(const ScalarC2& B, int i, const ReferencePolygon& poly,
                                            int quad_degree = 12, double tol = 1e-10);

struct LiftingConditionReport {
  double vertex_max = 0;      // max |xi(v_j) - delta_ij|
  double edge_linearity = 0;  // max deviation from the linear interpolant on edges
  double normal_spread = 0;   // max variation of dxi/dn_j along any one edge
  bool pass = false;
};
LiftingConditionReport check_lifting_conditions(const ScalarC2& xi, int i,
                                                const ReferencePolygon& poly,
                                                int quad_degree = 12, double tol = 1e-10);

}  // namespace ehdg
