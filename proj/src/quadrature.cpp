#include "ehdg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace ehdg {

namespace {

// Golub-Welsch: nodes/weights of the Gauss rule for the weight with Jacobi
// matrix diag(a) + offdiag(sqrt(b)); mu0 is the total mass of the weight.
void golub_welsch(const std::vector<double>& a, const std::vector<double>& b, double mu0,
                  std::vector<double>& nodes, std::vector<double>& weights) {
  const int n = static_cast<int>(a.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = a[i];
    if (i + 1 < n) {
      const double s = std::sqrt(b[i + 1]);
      J(i, i + 1) = s;
      J(i + 1, i) = s;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

// Gauss-Legendre on (-1,1).
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  std::vector<double> a(n, 0.0), b(n, 0.0);
  for (int k = 1; k < n; ++k) b[k] = k * k / (4.0 * k * k - 1.0);
  golub_welsch(a, b, 2.0, x, w);
}

// Gauss-Jacobi on (-1,1) with weight (1-x); used for the collapsed direction
// of the conical product rule.
void gauss_jacobi_10(int n, std::vector<double>& x, std::vector<double>& w) {
  std::vector<double> a(n), b(n, 0.0);
  a[0] = -1.0 / 3.0;
  for (int k = 1; k < n; ++k) {
    a[k] = -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0));
    b[k] = k * (k + 1.0) / ((2.0 * k + 1.0) * (2.0 * k + 1.0));
  }
  golub_welsch(a, b, 2.0, x, w);
}

void verify_triangle_exactness(const QuadratureRule& rule) {
  double wsum = 0;
  for (double w : rule.weights) {
    if (w <= 0) throw QuadratureError("triangle rule has a non-positive weight");
    wsum += w;
  }
  if (std::abs(wsum - 0.5) > 1e-13) throw QuadratureError("triangle rule weights do not sum to the reference area");
  for (int a = 0; a + 0 <= rule.exactness_degree; ++a) {
    for (int b = 0; a + b <= rule.exactness_degree; ++b) {
      double q = 0;
      for (size_t i = 0; i < rule.points.size(); ++i)
        q += rule.weights[i] * std::pow(rule.points[i].x(), a) * std::pow(rule.points[i].y(), b);
      const double exact = tri_moment(a, b);
      if (std::abs(q - exact) > 1e-12 * std::abs(exact))
        throw QuadratureError("triangle rule failed moment verification");
    }
  }
}

}  // namespace

double tri_moment(int a, int b) {
  return std::exp(std::lgamma(a + 1.0) + std::lgamma(b + 1.0) - std::lgamma(a + b + 3.0));
}

SegmentRule edge_quadrature(int degree) {
  if (degree < 0 || degree > 100) throw CapacityError("edge quadrature degree out of range");
  const int n = degree / 2 + 1;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  SegmentRule r;
  r.exactness_degree = 2 * n - 1;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.points[i] = 0.5 * (x[i] + 1.0);
    r.weights[i] = 0.5 * w[i];
  }
  return r;
}

QuadratureRule triangle_conical(int degree) {
  if (degree < 1 || degree > 60) throw CapacityError("triangle quadrature degree out of range");
  const int n = degree / 2 + 1;
  std::vector<double> xi, wxi, eta, weta;
  gauss_legendre(n, xi, wxi);
  gauss_jacobi_10(n, eta, weta);
  QuadratureRule r;
  r.exactness_degree = degree;
  r.points.reserve(n * n);
  r.weights.reserve(n * n);
  // x = xi*(1-eta), y = eta with xi, eta mapped from (-1,1) to (0,1);
  // the Jacobi weight absorbs the (1-eta) Jacobian factor.
  for (int j = 0; j < n; ++j) {
    const double e = 0.5 * (eta[j] + 1.0);
    const double we = 0.25 * weta[j];
    for (int i = 0; i < n; ++i) {
      const double s = 0.5 * (xi[i] + 1.0);
      const double ws = 0.5 * wxi[i];
      r.points.emplace_back(s * (1.0 - e), e);
      r.weights.push_back(ws * we);
    }
  }
  return r;
}

QuadratureRule triangle_quadrature(int degree) {
  if (degree < 1 || degree > 30) throw CapacityError("triangle quadrature degree out of range (1..30)");
  // Degrees >= 10 are the ones used on integrands with rational edge
  // functions, whose derivatives are direction-dependent at vertices; grade
  // the cells toward the corners there so such integrals come out to ~1e-11
  // instead of ~1e-7. Low degrees keep the compact conical rules (degree 1 is
  // the one-point centroid rule).
  const QuadratureRule base =
      degree >= 10 ? graded_triangle_rule(degree, 4) : triangle_conical(degree);
  QuadratureRule r;
  r.exactness_degree = degree;
  // Average over the six barycentric permutations; exactness is preserved and
  // the rule becomes S3-symmetric. Orbit points that coincide (e.g. the
  // centroid) are merged so that degree 1 yields the one-point centroid rule.
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::map<std::pair<long long, long long>, double> merged;
  std::map<std::pair<long long, long long>, Vec2> rep;
  for (size_t q = 0; q < base.points.size(); ++q) {
    const double l[3] = {1.0 - base.points[q].x() - base.points[q].y(), base.points[q].x(),
                         base.points[q].y()};
    for (const auto& p : perms) {
      const Vec2 pt(l[p[1]], l[p[2]]);
      const std::pair<long long, long long> key(std::llround(pt.x() * 1e13),
                                                std::llround(pt.y() * 1e13));
      merged[key] += base.weights[q] / 6.0;
      rep.emplace(key, pt);
    }
  }
  for (const auto& [key, w] : merged) {
    r.points.push_back(rep.at(key));
    r.weights.push_back(w);
  }
  verify_triangle_exactness(r);
  return r;
}

QuadratureRule map_rule(const QuadratureRule& ref, const Vec2& v0, const Vec2& v1, const Vec2& v2) {
  const double det = (v1.x() - v0.x()) * (v2.y() - v0.y()) - (v2.x() - v0.x()) * (v1.y() - v0.y());
  if (det <= 0) throw GeometryError("degenerate or misoriented triangle in rule mapping");
  QuadratureRule r;
  r.exactness_degree = ref.exactness_degree;
  r.points.resize(ref.points.size());
  r.weights.resize(ref.weights.size());
  for (size_t i = 0; i < ref.points.size(); ++i) {
    const double x = ref.points[i].x(), y = ref.points[i].y();
    r.points[i] = v0 + x * (v1 - v0) + y * (v2 - v0);
    r.weights[i] = ref.weights[i] * det;
  }
  return r;
}

QuadratureRule graded_triangle_rule(int degree, int levels) {
  if (levels < 0 || levels > 40) throw CapacityError("grading depth out of range");
  struct Cell {
    Vec2 a, b, c;
  };
  const Vec2 V0(0, 0), V1(1, 0), V2(0, 1);
  std::vector<Cell> cells = {{V0, V1, V2}};
  auto touches_corner = [&](const Cell& t) {
    for (const Vec2* v : {&t.a, &t.b, &t.c})
      for (const Vec2* c : {&V0, &V1, &V2})
        if ((*v - *c).squaredNorm() < 1e-28) return true;
    return false;
  };
  for (int lev = 0; lev < levels; ++lev) {
    std::vector<Cell> next;
    next.reserve(cells.size() + 9);
    for (const Cell& t : cells) {
      if (!touches_corner(t)) {
        next.push_back(t);
        continue;
      }
      const Vec2 mab = 0.5 * (t.a + t.b), mbc = 0.5 * (t.b + t.c), mca = 0.5 * (t.c + t.a);
      next.push_back({t.a, mab, mca});
      next.push_back({mab, t.b, mbc});
      next.push_back({mca, mbc, t.c});
      next.push_back({mab, mbc, mca});
    }
    cells.swap(next);
  }
  const QuadratureRule base = triangle_conical(degree);
  QuadratureRule r;
  r.exactness_degree = degree;
  r.points.reserve(cells.size() * base.points.size());
  r.weights.reserve(cells.size() * base.points.size());
  for (const Cell& t : cells) {
    // det of the submap relative to the reference cell: 2 * cell area.
    const double det =
        (t.b.x() - t.a.x()) * (t.c.y() - t.a.y()) - (t.c.x() - t.a.x()) * (t.b.y() - t.a.y());
    for (size_t i = 0; i < base.points.size(); ++i) {
      const double x = base.points[i].x(), y = base.points[i].y();
      r.points.emplace_back(t.a + x * (t.b - t.a) + y * (t.c - t.a));
      r.weights.push_back(base.weights[i] * det);
    }
  }
  return r;
}

}  // namespace ehdg
