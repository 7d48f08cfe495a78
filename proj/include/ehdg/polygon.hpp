#pragma once

#include <vector>

#include "ehdg/quadrature.hpp"
#include "ehdg/types.hpp"

namespace ehdg {

// A fixed convex reference element with counter-clockwise vertices.
// Edge i runs from vertex i to vertex i+1 (indices modulo ne).
// lambda_i is the affine function vanishing on edge i, positive inside,
// scaled so its maximum over the element closure is 1.
struct ReferencePolygon {
  std::vector<Vec2> vertices;
  Vec2 center;                             // vertex average; star point for subtriangles
  std::vector<Eigen::Vector3d> lam;        // lam[i] = (a,b,c): a*x + b*y + c
  std::vector<Vec2> normals;               // outward unit normals
  std::vector<double> edge_lengths;

  int ne() const { return static_cast<int>(vertices.size()); }
  const Vec2& vertex(int i) const { return vertices[mod(i)]; }
  double lambda(int i, const Vec2& p) const {
    const auto& c = lam[mod(i)];
    return c[0] * p.x() + c[1] * p.y() + c[2];
  }
  Vec2 lambda_grad(int i) const { return Vec2(lam[mod(i)][0], lam[mod(i)][1]); }
  Vec2 edge_point(int i, double s) const {
    return vertices[mod(i)] + s * (vertex(i + 1) - vertices[mod(i)]);
  }
  double area() const;
  double diameter() const;

  // Star subtriangle i has vertices (center, v_i, v_{i+1}) and contains edge i.
  // Returns the index of the subtriangle containing p (barycentric tolerance
  // -1e-13); throws GeometryError if p is outside the element.
  int subtriangle_of(const Vec2& p) const;

  int mod(int i) const {
    const int n = ne();
    return ((i % n) + n) % n;
  }
};

ReferencePolygon make_polygon(std::vector<Vec2> vertices);  // CCW, convex
ReferencePolygon make_triangle_ref();        // (0,0), (1,0), (0,1)
ReferencePolygon make_square_ref();          // unit square, v1 = (0,1)
ReferencePolygon make_regular_polygon(int ne);  // unit circumradius, v1 on +x axis

// Volume rule assembled subtriangle by subtriangle so that composite (piecewise)
// integrands are sampled away from the internal star edges. grade_levels > 0
// refines geometrically toward the subtriangle corners for rational integrands.
QuadratureRule polygon_quadrature(const ReferencePolygon& poly, int degree, int grade_levels = 0);

// Gauss rule on edge i; points in the plane, weights summing to the edge length.
QuadratureRule edge_rule(const ReferencePolygon& poly, int i, int degree);

}  // namespace ehdg
