#include "ehdg/local_system.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>
#include <utility>

#include "ehdg/basis.hpp"

namespace ehdg {

namespace {

constexpr double kQuadCheckTol = 1e-8;  // relative drift of the enrichment Gram rows
// Sector grading depth for the enrichment Grams; their error decays like
// 4^-levels while the point count grows only linearly.
constexpr int kGradeLevels = 14;
const std::array<Vec2, 3> kRefVerts = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};

using Mat3 = Eigen::Matrix3d;
using Gram3 = std::array<std::array<Eigen::MatrixXd, 3>, 3>;

StressSamples sample_stress(const std::vector<StressC2>& fields, const std::vector<Vec2>& pts,
                            bool with_div) {
  const int n = static_cast<int>(pts.size());
  const int m = static_cast<int>(fields.size());
  StressSamples s;
  s.xx.resize(n, m);
  s.yy.resize(n, m);
  s.xy.resize(n, m);
  if (with_div) {
    s.div_x.resize(n, m);
    s.div_y.resize(n, m);
  }
  for (int j = 0; j < m; ++j) {
    for (int q = 0; q < n; ++q) {
      const SymTensor t = fields[static_cast<std::size_t>(j)].value(pts[static_cast<std::size_t>(q)]);
      s.xx(q, j) = t.xx;
      s.yy(q, j) = t.yy;
      s.xy(q, j) = t.xy;
      if (with_div) {
        const Vec2 d = fields[static_cast<std::size_t>(j)].div(pts[static_cast<std::size_t>(q)]);
        s.div_x(q, j) = d.x();
        s.div_y(q, j) = d.y();
      }
    }
  }
  return s;
}

VectorSamples sample_vector(const std::vector<VectorC2>& fields, const std::vector<Vec2>& pts) {
  const int n = static_cast<int>(pts.size());
  const int m = static_cast<int>(fields.size());
  VectorSamples s;
  s.x.resize(n, m);
  s.y.resize(n, m);
  for (int j = 0; j < m; ++j) {
    for (int q = 0; q < n; ++q) {
      const Vec2 v = fields[static_cast<std::size_t>(j)].value(pts[static_cast<std::size_t>(q)]);
      s.x(q, j) = v.x();
      s.y(q, j) = v.y();
    }
  }
  return s;
}

Eigen::VectorXd rule_weights(const QuadratureRule& rule) {
  return Eigen::Map<const Eigen::VectorXd>(rule.weights.data(),
                                           static_cast<Eigen::Index>(rule.weights.size()));
}

// Component cross-Grams p^T W q over (xx, yy, xy); rows may be restricted to
// the trailing `row_tail` fields (the enrichment block).
Gram3 fold_stress_grams(const StressSamples& s, const Eigen::VectorXd& w, int row_tail) {
  const Eigen::MatrixXd* comp[3] = {&s.xx, &s.yy, &s.xy};
  const bool square = row_tail < 0;
  Gram3 g;
  for (int p = 0; p < 3; ++p) {
    const Eigen::MatrixXd rows = square ? *comp[p] : comp[p]->rightCols(row_tail).eval();
    for (int q = 0; q < 3; ++q) {
      if (square && q < p) {
        g[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] =
            g[static_cast<std::size_t>(q)][static_cast<std::size_t>(p)].transpose();
        continue;
      }
      g[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] =
          rows.transpose() * (w.asDiagonal() * *comp[q]);
    }
  }
  return g;
}

// Congruence coefficients: mapped components (xx, yy, xy) of J sigma J^T/det
// are T times the reference components.
Mat3 congruence_matrix(const Mat2& jac, double det) {
  const double a = jac(0, 0), b = jac(0, 1), c = jac(1, 0), d = jac(1, 1);
  Mat3 t;
  t << a * a, b * b, 2.0 * a * b,
       c * c, d * d, 2.0 * c * d,
       a * c, b * d, a * d + b * c;
  return t / det;
}

// Quadratic-form coefficients of the physical compliance pairing pulled back
// to reference components: integrand_ij = (T v_i)^T N (T v_j) with N the
// component metric of the compliance (the off-diagonal entry counts twice,
// minus the trace-pair coupling), times det for the volume scaling.
Mat3 compliance_coeffs(const Mat2& jac, double det, const MaterialLaw& mat) {
  const double cc = mat.lambda / (2.0 * mat.mu + 2.0 * mat.lambda);
  Mat3 n = Mat3::Zero();
  n(0, 0) = n(1, 1) = 1.0;
  n(2, 2) = 2.0;
  n(0, 0) -= cc;
  n(1, 1) -= cc;
  n(0, 1) -= cc;
  n(1, 0) -= cc;
  n /= 2.0 * mat.mu;
  const Mat3 t = congruence_matrix(jac, det);
  const Mat3 m = det * (t.transpose() * n * t);
  return 0.5 * (m + m.transpose());
}

Eigen::MatrixXd recombine(const Gram3& g, const Mat3& coef) {
  Eigen::MatrixXd out = coef(0, 0) * g[0][0];
  for (int p = 0; p < 3; ++p) {
    for (int q = 0; q < 3; ++q) {
      if (p == 0 && q == 0) continue;
      out += coef(p, q) * g[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
    }
  }
  return out;
}

double max_asymmetry(const Eigen::MatrixXd& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace

ElementGeometry element_geometry(const std::array<Vec2, 3>& v, const std::array<bool, 3>& flip) {
  ElementGeometry g;
  g.v = v;
  g.flip = flip;
  g.jac.col(0) = v[1] - v[0];
  g.jac.col(1) = v[2] - v[0];
  g.det = g.jac.determinant();
  if (!(g.det > 0)) {
    throw GeometryError("element vertices are not counter-clockwise (det = " +
                        std::to_string(g.det) + ")");
  }
  g.inv = g.jac.inverse();
  g.diameter = 0;
  for (int i = 0; i < 3; ++i) {
    const Vec2 d = v[static_cast<std::size_t>((i + 1) % 3)] - v[static_cast<std::size_t>(i)];
    g.edge_len[static_cast<std::size_t>(i)] = d.norm();
    g.normal[static_cast<std::size_t>(i)] = Vec2(d.y(), -d.x()).normalized();
    g.diameter = std::max(g.diameter, d.norm());
  }
  return g;
}

ElementGeometry element_geometry(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
  std::array<Vec2, 3> v;
  std::array<bool, 3> flip;
  for (int i = 0; i < 3; ++i) {
    v[static_cast<std::size_t>(i)] = mesh.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
    flip[static_cast<std::size_t>(i)] =
        mesh.element_edge_signs[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] < 0;
  }
  return element_geometry(v, flip);
}

ReferenceTables build_reference_tables(int k, SpaceVariant variant, int quad_degree) {
  ReferenceTables t;
  const ReferencePolygon ref = make_triangle_ref();
  t.spaces = enriched_stress_basis(ref, k, variant);
  t.quad_degree = quad_degree > 0 ? quad_degree : 2 * k + 8;
  const int ne = t.spaces.n_enrichment();

  t.vol = triangle_quadrature(t.quad_degree);
  const Eigen::VectorXd wv = rule_weights(t.vol);
  const StressSamples vs = sample_stress(t.spaces.stress, t.vol.points, true);
  t.vol_u = sample_vector(t.spaces.displacement, t.vol.points);
  t.gram_vol = fold_stress_grams(vs, wv, -1);
  const Eigen::MatrixXd* dcomp[2] = {&vs.div_x, &vs.div_y};
  const Eigen::MatrixXd* ucomp[2] = {&t.vol_u.x, &t.vol_u.y};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      t.gram_div_u[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
          dcomp[a]->transpose() * (wv.asDiagonal() * *ucomp[b]);
    }
  }

  if (ne > 0) {
    const QuadratureRule deep = polygon_quadrature(ref, t.quad_degree, kGradeLevels);
    const QuadratureRule shadow = polygon_quadrature(ref, t.quad_degree + 4, kGradeLevels + 1);
    t.gram_enr = fold_stress_grams(sample_stress(t.spaces.stress, deep.points, false),
                                   rule_weights(deep), ne);
    t.gram_shadow = fold_stress_grams(sample_stress(t.spaces.stress, shadow.points, false),
                                      rule_weights(shadow), ne);
  }

  t.edge = edge_quadrature(t.quad_degree);
  const int np = static_cast<int>(t.edge.points.size());
  const int nl = k + 1;
  Eigen::MatrixXd wleg(np, nl);  // Legendre factor with the rule weights folded in
  Eigen::VectorXd we(np);
  for (int q = 0; q < np; ++q) {
    we(q) = t.edge.weights[static_cast<std::size_t>(q)];
    for (int j = 0; j < nl; ++j) {
      wleg(q, j) = we(q) * shifted_legendre(j, t.edge.points[static_cast<std::size_t>(q)]);
    }
  }

  for (int le = 0; le < 3; ++le) {
    for (int fl = 0; fl < 2; ++fl) {
      Vec2 a = kRefVerts[static_cast<std::size_t>(le)];
      Vec2 b = kRefVerts[static_cast<std::size_t>((le + 1) % 3)];
      if (fl) std::swap(a, b);
      std::vector<Vec2> pts(t.edge.points.size());
      for (std::size_t q = 0; q < pts.size(); ++q) pts[q] = a + t.edge.points[q] * (b - a);
      const StressSamples es = sample_stress(t.spaces.stress, pts, false);
      const VectorSamples eu = sample_vector(t.spaces.displacement, pts);
      auto& sl = t.stress_leg[static_cast<std::size_t>(le)][static_cast<std::size_t>(fl)];
      sl[0] = es.xx.transpose() * wleg;
      sl[1] = es.yy.transpose() * wleg;
      sl[2] = es.xy.transpose() * wleg;
      auto& ul = t.u_leg[static_cast<std::size_t>(le)][static_cast<std::size_t>(fl)];
      ul[0] = eu.x.transpose() * wleg;
      ul[1] = eu.y.transpose() * wleg;
      if (fl == 0) {
        const Eigen::MatrixXd m = eu.x.transpose() * (we.asDiagonal() * eu.x) +
                                  eu.y.transpose() * (we.asDiagonal() * eu.y);
        t.uu_edge[static_cast<std::size_t>(le)] = 0.5 * (m + m.transpose());
      }
    }
  }
  return t;
}

LocalSystem assemble_local(const ElementGeometry& elem, const ReferenceTables& tables,
                           const MaterialLaw& material,
                           const std::function<Vec2(const Vec2&)>& f, double alpha,
                           bool check_quadrature) {
  LocalSystem sys;
  sys.n_sigma = tables.n_sigma();
  sys.n_u = tables.n_u();
  sys.n_hat = tables.n_hat();
  const int nm = tables.spaces.trace.dim();
  const int nl = nm / 2;
  const int ne = tables.spaces.n_enrichment();

  const Mat3 coef = compliance_coeffs(elem.jac, elem.det, material);
  sys.A = recombine(tables.gram_vol, coef);
  if (ne > 0) {
    const Eigen::MatrixXd rows = recombine(tables.gram_enr, coef);
    if (check_quadrature) {
      const Eigen::MatrixXd shadow = recombine(tables.gram_shadow, coef);
      const double scale = std::max(sys.A.cwiseAbs().maxCoeff(), rows.cwiseAbs().maxCoeff());
      const double drift = (rows - shadow).cwiseAbs().maxCoeff();
      if (drift > kQuadCheckTol * scale) {
        throw QuadratureError("enrichment Gram drifts by " + std::to_string(drift / scale) +
                              " under quadrature refinement; raise the quadrature degree");
      }
    }
    sys.A.bottomRows(ne) = rows;
    sys.A.rightCols(ne) = rows.transpose();
  }

  const double a = elem.jac(0, 0), b = elem.jac(0, 1), c = elem.jac(1, 0), d = elem.jac(1, 1);
  sys.B = a * tables.gram_div_u[0][0] + b * tables.gram_div_u[1][0] +
          c * tables.gram_div_u[0][1] + d * tables.gram_div_u[1][1];

  sys.C = Eigen::MatrixXd::Zero(sys.n_sigma, sys.n_hat);
  sys.R = Eigen::MatrixXd::Zero(sys.n_u, sys.n_hat);
  sys.M = Eigen::MatrixXd::Zero(sys.n_hat, sys.n_hat);
  sys.S = Eigen::MatrixXd::Zero(sys.n_u, sys.n_u);
  const Mat3 t = congruence_matrix(elem.jac, elem.det);
  for (int le = 0; le < 3; ++le) {
    const int fl = elem.flip[static_cast<std::size_t>(le)] ? 1 : 0;
    const Vec2 n = elem.normal[static_cast<std::size_t>(le)];
    const double len = elem.edge_len[static_cast<std::size_t>(le)];
    const auto& sl = tables.stress_leg[static_cast<std::size_t>(le)][static_cast<std::size_t>(fl)];
    const auto& ul = tables.u_leg[static_cast<std::size_t>(le)][static_cast<std::size_t>(fl)];

    // Traction components as combinations of the reference stress components.
    const Eigen::RowVector3d cx = n.x() * t.row(0) + n.y() * t.row(2);
    const Eigen::RowVector3d cy = n.x() * t.row(2) + n.y() * t.row(1);
    const Eigen::MatrixXd tr_x = len * (cx(0) * sl[0] + cx(1) * sl[1] + cx(2) * sl[2]);
    const Eigen::MatrixXd tr_y = len * (cy(0) * sl[0] + cy(1) * sl[1] + cy(2) * sl[2]);
    for (int j = 0; j < nl; ++j) {
      sys.C.col(le * nm + 2 * j) = tr_x.col(j);
      sys.C.col(le * nm + 2 * j + 1) = tr_y.col(j);
      sys.R.col(le * nm + 2 * j) = alpha * len * ul[0].col(j);
      sys.R.col(le * nm + 2 * j + 1) = alpha * len * ul[1].col(j);
    }
    sys.S += alpha * len * tables.uu_edge[static_cast<std::size_t>(le)];
    // Trace basis members are orthonormal in L2(0,1), so the edge mass block
    // is alpha*|e| times the identity.
    sys.M.block(le * nm, le * nm, nm, nm) = alpha * len * Eigen::MatrixXd::Identity(nm, nm);
  }

  sys.load = Eigen::VectorXd::Zero(sys.n_u);
  if (f) {
    const Eigen::VectorXd wv = rule_weights(tables.vol) * elem.det;
    Eigen::VectorXd fx(wv.size()), fy(wv.size());
    for (Eigen::Index q = 0; q < wv.size(); ++q) {
      const Vec2 val = f(elem.map(tables.vol.points[static_cast<std::size_t>(q)]));
      fx(q) = val.x();
      fy(q) = val.y();
    }
    sys.load = tables.vol_u.x.transpose() * (wv.asDiagonal() * fx) +
               tables.vol_u.y.transpose() * (wv.asDiagonal() * fy);
  }

  sys.symmetry_defect = std::max({max_asymmetry(sys.A), max_asymmetry(sys.S),
                                  max_asymmetry(sys.M)});
  sys.A = ((sys.A + sys.A.transpose()) * 0.5).eval();
  sys.S = ((sys.S + sys.S.transpose()) * 0.5).eval();
  sys.M = ((sys.M + sys.M.transpose()) * 0.5).eval();
  return sys;
}

void condense(LocalSystem& local, const std::string& label) {
  const std::string where = label.empty() ? "" : " (" + label + ")";
  Eigen::LLT<Eigen::MatrixXd> allt(local.A);
  if (allt.info() != Eigen::Success) {
    throw ConditioningError("stress Gram is not positive definite" + where);
  }
  const Eigen::MatrixXd ab = allt.solve(local.B);
  const Eigen::MatrixXd ac = allt.solve(local.C);

  // Displacement Schur block B^T A^{-1} B + S; SPD because a displacement in
  // its kernel would be L2-orthogonal to div(Sigma) >= P_{k-1} and vanish on
  // the boundary at once, which forces it to zero on a triangle.
  const Eigen::MatrixXd d = local.B.transpose() * ab + local.S;
  Eigen::LLT<Eigen::MatrixXd> dllt(d);
  if (dllt.info() != Eigen::Success) {
    throw ConditioningError("interior displacement block is singular" + where);
  }

  local.w_of_trace = dllt.solve(local.R + local.B.transpose() * ac);
  local.s_of_trace = ac - ab * local.w_of_trace;
  local.w0 = dllt.solve(local.load);
  local.s0 = -ab * local.w0;

  Eigen::MatrixXd h = local.M + local.C.transpose() * local.s_of_trace -
                      local.R.transpose() * local.w_of_trace;
  local.schur = (h + h.transpose()) * 0.5;
  local.reduced = local.R.transpose() * local.w0 - local.C.transpose() * local.s0;
  local.condensed = true;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> recover_interior(const LocalSystem& local,
                                                             const Eigen::VectorXd& trace) {
  if (!local.condensed) throw UsageError("recover_interior needs a condensed local system");
  return {local.s0 + local.s_of_trace * trace, local.w0 + local.w_of_trace * trace};
}

}  // namespace ehdg
