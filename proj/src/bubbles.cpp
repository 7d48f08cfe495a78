#include "ehdg/bubbles.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ehdg/basis.hpp"

namespace ehdg {

void guard_vertices(const ReferencePolygon& poly, const Vec2& p) {
  for (const Vec2& v : poly.vertices)
    if ((p - v).norm() < 1e-12)
      throw DomainError("evaluation point coincides with a vertex (rational denominator)");
}

namespace {

Jet2 lambda_jet(const ReferencePolygon& poly, int i, const Jet2& x, const Jet2& y) {
  const auto& c = poly.lam[poly.mod(i)];
  return c[0] * x + c[1] * y + Jet2::cst(c[2]);
}

// The Guzman-Neilan rational edge bubble, valid on triangles and squares.
ScalarC2 global_bubble(int i, const ReferencePolygon& poly) {
  return {[i, poly](const Jet2& x, const Jet2& y) {
            guard_vertices(poly, Vec2(x.v, y.v));
            Jet2 b = Jet2::cst(1.0);
            const Jet2 li = lambda_jet(poly, i, x, y);
            for (int j = 0; j < poly.ne(); ++j) {
              const Jet2 lj = lambda_jet(poly, j, x, y);
              b = b * lj;
              if (j != i) b = b * (lj / (lj + li));
            }
            return b;
          },
          Smoothness::Entire};
}

}  // namespace

ScalarC2 triangle_bubble(int i, const ReferencePolygon& poly) {
  i = poly.mod(i);
  if (poly.ne() <= 4) return global_bubble(i, poly);
  // Composite: the bubble of the outer edge of star subtriangle S_i, zero on
  // the other subtriangles. Conditions (H) make the extension C1.
  const ReferencePolygon sub =
      make_polygon({poly.center, poly.vertices[i], poly.vertex(i + 1)});
  const ScalarC2 inner = global_bubble(1, sub);  // edge 1 of sub is (v_i, v_{i+1})
  return {[i, poly, inner](const Jet2& x, const Jet2& y) {
            const Vec2 p(x.v, y.v);
            guard_vertices(poly, p);
            if (poly.subtriangle_of(p) != i) return Jet2::cst(0.0);
            return inner.jet(x, y);
          },
          Smoothness::PiecewiseStar};
}

ScalarC2 lifting_xi(int i, const ReferencePolygon& poly) {
  i = poly.mod(i);
  if (poly.ne() == 3) {
    const auto& c = poly.lam[poly.mod(i + 1)];
    return affine(c[0], c[1], c[2]);
  }
  for (int j : {poly.mod(i - 1), i}) {
    const Vec2 a = poly.center, b = poly.vertices[j], c = poly.vertex(j + 1);
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    if (det <= 0) throw GeometryError("element is not star-shaped w.r.t. its center");
  }
  // Affine function of the chord through v_{i-1} and v_{i+1}, scaled to 1 at
  // v_i and truncated at its zero line. The gradient kink sits exactly where
  // the function vanishes, so xi^2 is C1 on K and Airy images of xi^2-products
  // keep continuous tractions across the cut. A star-subtriangle hat kinks
  // along the center--v_i spine where it is nonzero, which leaks traction
  // jumps into every enrichment built on it (on the reference square both
  // constructions coincide: the chord is the diagonal through the center).
  const Vec2 a = poly.vertex(i - 1), b = poly.vertex(i + 1);
  const Vec2 d = b - a;
  Eigen::Vector3d coeff(d.y(), -d.x(), d.x() * a.y() - d.y() * a.x());
  const double at_vi =
      coeff[0] * poly.vertices[i].x() + coeff[1] * poly.vertices[i].y() + coeff[2];
  if (at_vi == 0) throw GeometryError("degenerate element: collinear consecutive vertices");
  coeff /= at_vi;
  for (int j = 0; j < poly.ne(); ++j) {
    if (j == poly.mod(i - 1) || j == i || j == poly.mod(i + 1)) continue;
    const Vec2& v = poly.vertices[j];
    if (coeff[0] * v.x() + coeff[1] * v.y() + coeff[2] > 1e-9) {
      throw GeometryError("vertex lifting requires the chord v_{i-1}--v_{i+1} to cut the element");
    }
  }
  return {[coeff](const Jet2& x, const Jet2& y) {
            if (coeff[0] * x.v + coeff[1] * y.v + coeff[2] <= 0) return Jet2::cst(0.0);
            return coeff[0] * x + coeff[1] * y + Jet2::cst(coeff[2]);
          },
          Smoothness::PiecewiseStar};
}

EdgeConditionReport check_bubble_conditions(const ScalarC2& B, int i, const ReferencePolygon& poly,
                                            int quad_degree, double tol) {
  i = poly.mod(i);
  EdgeConditionReport rep;
  // First pass on edge i: estimate the proportionality constant by weighted
  // least squares, then measure the residual.
  {
    const QuadratureRule r = edge_rule(poly, i, quad_degree);
    double num = 0, den = 0;
    std::vector<double> dn(r.points.size()), base(r.points.size());
    for (size_t q = 0; q < r.points.size(); ++q) {
      const Jet2 j = B.eval(r.points[q]);
      dn[q] = j.grad().dot(poly.normals[i]);
      base[q] = poly.lambda(i - 1, r.points[q]) * poly.lambda(i + 1, r.points[q]);
      num += r.weights[q] * dn[q] * base[q];
      den += r.weights[q] * base[q] * base[q];
    }
    rep.ratio_constant = num / den;
    for (size_t q = 0; q < r.points.size(); ++q) {
      rep.ratio_deviation =
          std::max(rep.ratio_deviation, std::abs(dn[q] - rep.ratio_constant * base[q]));
      rep.boundary_max = std::max(rep.boundary_max, std::abs(B.value(r.points[q])));
    }
  }
  for (int j = 0; j < poly.ne(); ++j) {
    if (j == i) continue;
    const QuadratureRule r = edge_rule(poly, j, quad_degree);
    for (const Vec2& p : r.points) {
      const Jet2 jet = B.eval(p);
      rep.boundary_max = std::max(rep.boundary_max, std::abs(jet.v));
      rep.other_normal_max =
          std::max(rep.other_normal_max, std::abs(jet.grad().dot(poly.normals[j])));
    }
  }
  rep.pass = rep.boundary_max < tol && rep.other_normal_max < tol && rep.ratio_deviation < tol &&
             rep.ratio_constant < 0;
  return rep;
}

LiftingConditionReport check_lifting_conditions(const ScalarC2& xi, int i,
                                                const ReferencePolygon& poly, int quad_degree,
                                                double tol) {
  i = poly.mod(i);
  LiftingConditionReport rep;
  std::vector<double> at_vertex(poly.ne());
  for (int j = 0; j < poly.ne(); ++j) {
    at_vertex[j] = xi.value(poly.vertices[j]);
    rep.vertex_max = std::max(rep.vertex_max, std::abs(at_vertex[j] - (j == i ? 1.0 : 0.0)));
  }
  const SegmentRule seg = edge_quadrature(quad_degree);
  for (int j = 0; j < poly.ne(); ++j) {
    double lo = 1e300, hi = -1e300;
    for (size_t q = 0; q < seg.points.size(); ++q) {
      const double s = seg.points[q];
      const Vec2 p = poly.edge_point(j, s);
      const Jet2 jet = xi.eval(p);
      const double interp = (1.0 - s) * at_vertex[j] + s * at_vertex[poly.mod(j + 1)];
      rep.edge_linearity = std::max(rep.edge_linearity, std::abs(jet.v - interp));
      const double dn = jet.grad().dot(poly.normals[j]);
      lo = std::min(lo, dn);
      hi = std::max(hi, dn);
    }
    rep.normal_spread = std::max(rep.normal_spread, hi - lo);
  }
  rep.pass = rep.vertex_max < tol && rep.edge_linearity < tol && rep.normal_spread < tol;
  return rep;
}

}  // namespace ehdg
