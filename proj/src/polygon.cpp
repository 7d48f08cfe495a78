#include "ehdg/polygon.hpp"

#include <cmath>
#include <string>

namespace ehdg {

double ReferencePolygon::area() const {
  double a = 0;
  for (int i = 0; i < ne(); ++i) {
    const Vec2 &p = vertices[i], &q = vertex(i + 1);
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double ReferencePolygon::diameter() const {
  double d = 0;
  for (int i = 0; i < ne(); ++i)
    for (int j = i + 1; j < ne(); ++j) d = std::max(d, (vertices[i] - vertices[j]).norm());
  return d;
}

int ReferencePolygon::subtriangle_of(const Vec2& p) const {
  for (int i = 0; i < ne(); ++i) {
    const Vec2 &a = center, &b = vertices[i], &c = vertex(i + 1);
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    const double l1 = ((p.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (p.y() - a.y())) / det;
    const double l2 = ((b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y())) / det;
    const double l0 = 1.0 - l1 - l2;
    if (l0 >= -1e-13 && l1 >= -1e-13 && l2 >= -1e-13) return i;
  }
  throw GeometryError("point (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                      ") lies outside the reference element");
}

ReferencePolygon make_polygon(std::vector<Vec2> vertices) {
  ReferencePolygon poly;
  poly.vertices = std::move(vertices);
  const int n = poly.ne();
  poly.center = Vec2::Zero();
  for (const Vec2& v : poly.vertices) poly.center += v / n;
  poly.lam.resize(n);
  poly.normals.resize(n);
  poly.edge_lengths.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vec2 &a = poly.vertices[i], &b = poly.vertex(i + 1);
    const Vec2 d = b - a;
    poly.edge_lengths[i] = d.norm();
    poly.normals[i] = Vec2(d.y(), -d.x()) / poly.edge_lengths[i];
    // Inward distance to the edge line, then scale so max over vertices is 1
    // (the max over a convex closure is attained at a vertex).
    Eigen::Vector3d c(-poly.normals[i].x(), -poly.normals[i].y(), poly.normals[i].dot(a));
    double peak = 0;
    for (const Vec2& v : poly.vertices)
      peak = std::max(peak, c[0] * v.x() + c[1] * v.y() + c[2]);
    if (peak <= 0) throw GeometryError("degenerate or non-convex vertex list");
    poly.lam[i] = c / peak;
  }
  return poly;
}

ReferencePolygon make_triangle_ref() {
  return make_polygon({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)});
}

ReferencePolygon make_square_ref() {
  return make_polygon({Vec2(0, 1), Vec2(0, 0), Vec2(1, 0), Vec2(1, 1)});
}

ReferencePolygon make_regular_polygon(int ne) {
  if (ne < 3 || ne > 12) throw CapacityError("regular polygon needs 3..12 edges");
  std::vector<Vec2> verts(ne);
  for (int i = 0; i < ne; ++i) {
    const double t = 2.0 * M_PI * i / ne;
    verts[i] = Vec2(std::cos(t), std::sin(t));
  }
  return make_polygon(std::move(verts));
}

QuadratureRule polygon_quadrature(const ReferencePolygon& poly, int degree, int grade_levels) {
  const QuadratureRule base =
      grade_levels > 0 ? graded_triangle_rule(degree, grade_levels) : triangle_conical(degree);
  QuadratureRule out;
  out.exactness_degree = degree;
  for (int i = 0; i < poly.ne(); ++i) {
    const QuadratureRule part = map_rule(base, poly.center, poly.vertices[i], poly.vertex(i + 1));
    out.points.insert(out.points.end(), part.points.begin(), part.points.end());
    out.weights.insert(out.weights.end(), part.weights.begin(), part.weights.end());
  }
  return out;
}

QuadratureRule edge_rule(const ReferencePolygon& poly, int i, int degree) {
  const SegmentRule seg = edge_quadrature(degree);
  QuadratureRule out;
  out.exactness_degree = degree;
  out.points.reserve(seg.points.size());
  out.weights.reserve(seg.points.size());
  for (size_t q = 0; q < seg.points.size(); ++q) {
    out.points.push_back(poly.edge_point(i, seg.points[q]));
    out.weights.push_back(seg.weights[q] * poly.edge_lengths[poly.mod(i)]);
  }
  return out;
}

}  // namespace ehdg
