#include "ehdg/element_spaces.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <utility>

#include "ehdg/bubbles.hpp"
#include "ehdg/quadrature.hpp"
#include "ehdg/sample_space.hpp"

namespace ehdg {

namespace {

constexpr double kGramSigmaMin = 1e-8;
constexpr double kGramConditionBound = 1e8;
constexpr double kTraceResidualTol = 1e-10;

ScalarC2 spow(const ScalarC2& a, int n) {
  if (n == 0) return scalar_constant(1.0);
  if (n == 1) return a;
  return {[f = a.jet, n](const Jet2& x, const Jet2& y) { return pow(f(x, y), n); },
          a.smoothness};
}

ScalarC2 lambda_field(const ReferencePolygon& poly, int i) {
  const Eigen::Vector3d& l = poly.lam[static_cast<std::size_t>(poly.mod(i))];
  return affine(l[0], l[1], l[2]);
}

bool is_reference_square(const ReferencePolygon& poly) {
  if (poly.ne() != 4) return false;
  const ReferencePolygon ref = make_square_ref();
  for (int i = 0; i < 4; ++i) {
    if ((poly.vertices[static_cast<std::size_t>(i)] - ref.vertices[static_cast<std::size_t>(i)])
            .norm() > 1e-12) {
      return false;
    }
  }
  return true;
}

// Enrichment of the P_k stress space on a polygon: per edge e (0-based,
// skipping the first), Airy images of lifting/edge-function products plus the
// edge bubble; the closing edge gets the shortened lists and a second bubble
// product once k >= 2. Exponent windows are clamped at zero. When `counts` is
// given it receives the per-edge partition of the returned list.
std::vector<ScalarC2> polygon_potentials(const ReferencePolygon& poly, int k,
                                         std::vector<int>* counts = nullptr) {
  const int ne = poly.ne();
  std::vector<ScalarC2> phi;
  if (counts) counts->assign(static_cast<std::size_t>(ne), 0);
  for (int e = 1; e <= ne - 2; ++e) {
    const std::size_t before = phi.size();
    const ScalarC2 xi2 = spow(lifting_xi(poly.mod(e + 1), poly), 2);
    const ScalarC2 ln = lambda_field(poly, e + 1);
    const ScalarC2 lp = lambda_field(poly, e);
    for (int b = std::max(k + 3 - 2 * e, 0); b <= k; ++b) phi.push_back(xi2 * spow(ln, b));
    for (int b = std::max(k + 2 - 2 * e, 0); b <= k - 1; ++b) {
      phi.push_back(xi2 * (lp * spow(ln, b)));
    }
    phi.push_back(triangle_bubble(e, poly));
    if (counts) (*counts)[static_cast<std::size_t>(e)] = static_cast<int>(phi.size() - before);
  }
  const std::size_t before_last = phi.size();
  if (k == 1) {
    phi.push_back(triangle_bubble(ne - 1, poly));
  } else {
    const ScalarC2 xi2 = spow(lifting_xi(0, poly), 2);
    const ScalarC2 l0 = lambda_field(poly, 0);
    const ScalarC2 lp = lambda_field(poly, ne - 1);
    for (int b = std::max(k + 5 - 2 * ne, 0); b <= k - 2; ++b) {
      phi.push_back(xi2 * spow(l0, 2 + b));
    }
    for (int b = std::max(k + 4 - 2 * ne, 0); b <= k - 3; ++b) {
      phi.push_back(xi2 * (lp * spow(l0, 2 + b)));
    }
    phi.push_back(triangle_bubble(ne - 1, poly));
    phi.push_back(triangle_bubble(ne - 1, poly) * l0);
  }
  if (counts) {
    (*counts)[static_cast<std::size_t>(ne - 1)] = static_cast<int>(phi.size() - before_last);
  }
  return phi;
}

// Q_k square enrichment, lifting flavor: products of the corner lifting
// squared with powers of the two far edge functions.
std::vector<ScalarC2> square_rational_potentials(const ReferencePolygon& poly, int k) {
  const ScalarC2 b1 = triangle_bubble(1, poly);
  const ScalarC2 b2 = triangle_bubble(2, poly);
  const ScalarC2 b3 = triangle_bubble(3, poly);
  const ScalarC2 x = lambda_field(poly, 0);
  const ScalarC2 omx = lambda_field(poly, 2);  // 1 - x
  const ScalarC2 omy = lambda_field(poly, 3);  // 1 - y
  const ScalarC2 xi2 = spow(lifting_xi(3, poly), 2);
  if (k == 1) return {b1, b2, b3, xi2, xi2 * omx, xi2 * omy};
  if (k == 2) {
    return {b1,        b2,        b3,        b3 * x,          xi2 * omx,
            xi2 * omy, xi2 * (omx * omy), xi2 * spow(omx, 2), xi2 * spow(omy, 2)};
  }
  return {b1,
          b2,
          b3,
          b3 * x,
          xi2 * spow(omx, k - 1),
          xi2 * spow(omy, k - 1),
          xi2 * (spow(omx, k - 1) * omy),
          xi2 * (omx * spow(omy, k - 1)),
          xi2 * spow(omx, k),
          xi2 * spow(omy, k)};
}

// Q_k square enrichment, exponential flavor (k >= 2): entire functions, no
// piecewise liftings involved.
std::vector<ScalarC2> square_exponential_potentials(const ReferencePolygon& poly, int k) {
  const ScalarC2 b1 = triangle_bubble(1, poly);
  const ScalarC2 b2 = triangle_bubble(2, poly);
  const ScalarC2 b3 = triangle_bubble(3, poly);
  const ScalarC2 x = affine(1, 0, 0);
  const ScalarC2 omx = affine(-1, 0, 1);
  const ScalarC2 omy = affine(0, -1, 1);
  const ScalarC2 xy2 = spow(monomial(1, 1), 2);
  // (x y e^{1-y})^2 and (x y e^{1-x})^2
  const ScalarC2 ey2{[](const Jet2& xj, const Jet2& yj) {
                       const Jet2 g = xj * yj * exp(1.0 - yj);
                       return g * g;
                     },
                     Smoothness::Entire};
  const ScalarC2 ex2{[](const Jet2& xj, const Jet2& yj) {
                       const Jet2 g = xj * yj * exp(1.0 - xj);
                       return g * g;
                     },
                     Smoothness::Entire};
  if (k == 2) {
    return {b1,
            b2,
            b3,
            b3 * x,
            xy2 * omx,
            xy2 * omy,
            xy2 * (omx * omy),
            ey2 * spow(omx, 2),
            ex2 * spow(omy, 2)};
  }
  return {b1,
          b2,
          b3,
          b3 * x,
          xy2 * spow(omx, k - 1),
          xy2 * spow(omy, k - 1),
          xy2 * (spow(omx, k - 1) * omy),
          xy2 * (omx * spow(omy, k - 1)),
          ey2 * spow(omx, k),
          ex2 * spow(omy, k)};
}

void require_square(const ReferencePolygon& shape, SpaceVariant variant) {
  if (!is_reference_square(shape)) {
    throw UsageError("variant " + variant_name(variant) +
                     " is defined on the reference unit square only");
  }
}

// Divergence-closing fields for a polygon, k >= 2: each monomial stress
// x^{k+1-a} y^a E_c is corrected by Airy terms so its normal trace drops back
// into P_k on every edge. The correction coefficients solve a small
// least-squares system built from the offending Legendre trace modes.
std::vector<StressC2> polygon_fill_v(const ReferencePolygon& poly, int k) {
  const int ne = poly.ne();
  std::vector<StressC2> correctors;
  for (int e = 0; e < ne; ++e) {
    const ScalarC2 xi2 = spow(lifting_xi(poly.mod(e + 1), poly), 2);
    const ScalarC2 ln = lambda_field(poly, e + 1);
    const ScalarC2 lp = lambda_field(poly, e);
    correctors.push_back(airy(xi2 * spow(ln, k + 1)));
    correctors.push_back(airy(xi2 * (lp * spow(ln, k))));
  }

  // Trace moments against Legendre modes k+1..k+2 on each edge, per component.
  const SegmentRule seg = edge_quadrature(2 * k + 8);
  const int n_modes = 2;
  const int rows = 2 * n_modes * ne;
  const auto moments = [&](const StressC2& sigma) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(rows);
    for (int e = 0; e < ne; ++e) {
      for (std::size_t q = 0; q < seg.points.size(); ++q) {
        const double s = seg.points[q];
        const Vec2 tr = sigma.traction(poly.edge_point(e, s), poly.normals[e]);
        for (int m = 0; m < n_modes; ++m) {
          const double leg = shifted_legendre(k + 1 + m, s) * seg.weights[q];
          r(4 * e + 2 * m + 0) += leg * tr.x();
          r(4 * e + 2 * m + 1) += leg * tr.y();
        }
      }
    }
    return r;
  };

  Eigen::MatrixXd a(rows, 2 * ne);
  for (int j = 0; j < 2 * ne; ++j) a.col(j) = moments(correctors[static_cast<std::size_t>(j)]);

  std::vector<StressC2> fields;
  for (int comp = 0; comp < 2; ++comp) {
    for (int ax = 0; ax <= k; ++ax) {
      // Degree-(k+1) monomial block in the xx (comp 0) or yy (comp 1) slot.
      // The yy family mirrors the exponents so that both divergence families
      // stay nonzero and together span the full degree-k vector space.
      const StressC2 base = comp == 0 ? stress_monomial(k + 1 - ax, ax, 0)
                                      : stress_monomial(ax, k + 1 - ax, 1);
      double residual = 0;
      const Eigen::VectorXd coef = least_squares(a, -moments(base), &residual);
      if (residual > kTraceResidualTol) {
        throw ConditioningError("divergence-fill trace correction did not close: residual " +
                                std::to_string(residual));
      }
      std::vector<std::pair<double, StressC2>> terms{{1.0, base}};
      for (int j = 0; j < 2 * ne; ++j) {
        if (std::abs(coef(j)) > 1e-14) {
          terms.emplace_back(coef(j), correctors[static_cast<std::size_t>(j)]);
        }
      }
      fields.push_back(stress_combination(std::move(terms)));
    }
  }
  return fields;
}

}  // namespace

SpaceVariant parse_variant(const std::string& name) {
  if (name == "hdg") return SpaceVariant::Hdg;
  if (name == "hdg-m") return SpaceVariant::HdgM;
  if (name == "q-rational") return SpaceVariant::QRational;
  if (name == "q-exponential") return SpaceVariant::QExponential;
  throw UsageError("unknown space variant '" + name +
                   "' (expected hdg, hdg-m, q-rational, or q-exponential)");
}

std::string variant_name(SpaceVariant v) {
  switch (v) {
    case SpaceVariant::Hdg:
      return "hdg";
    case SpaceVariant::HdgM:
      return "hdg-m";
    case SpaceVariant::QRational:
      return "q-rational";
    case SpaceVariant::QExponential:
      return "q-exponential";
  }
  throw UsageError("invalid space variant");
}

std::vector<int> fill_m_edge_counts(const ReferencePolygon& shape, int k) {
  if (k < 1) throw UsageError("enriched spaces require k >= 1");
  std::vector<int> counts;
  (void)polygon_potentials(shape, k, &counts);
  return counts;
}

StressC2 combine_stress(const std::vector<StressC2>& basis, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != static_cast<Eigen::Index>(basis.size())) {
    throw UsageError("combine_stress: coefficient count does not match the basis");
  }
  std::vector<std::pair<double, StressC2>> terms;
  for (Eigen::Index j = 0; j < coeffs.size(); ++j) {
    if (coeffs(j) != 0.0) terms.emplace_back(coeffs(j), basis[static_cast<std::size_t>(j)]);
  }
  return stress_combination(std::move(terms));
}

VectorC2 combine_displacement(const std::vector<VectorC2>& basis, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != static_cast<Eigen::Index>(basis.size())) {
    throw UsageError("combine_displacement: coefficient count does not match the basis");
  }
  Smoothness sm = Smoothness::Entire;
  auto terms = std::make_shared<std::vector<std::pair<double, VectorC2>>>();
  for (Eigen::Index j = 0; j < coeffs.size(); ++j) {
    if (coeffs(j) == 0.0) continue;
    sm = join(sm, basis[static_cast<std::size_t>(j)].smoothness());
    terms->emplace_back(coeffs(j), basis[static_cast<std::size_t>(j)]);
  }
  const ScalarC2 cx{[terms](const Jet2& x, const Jet2& y) {
                      Jet2 r = Jet2::cst(0.0);
                      for (const auto& [c, f] : *terms) r = r + c * f.x.jet(x, y);
                      return r;
                    },
                    sm};
  const ScalarC2 cy{[terms](const Jet2& x, const Jet2& y) {
                      Jet2 r = Jet2::cst(0.0);
                      for (const auto& [c, f] : *terms) r = r + c * f.y.jet(x, y);
                      return r;
                    },
                    sm};
  return {cx, cy};
}

StressC2 stress_combination(std::vector<std::pair<double, StressC2>> terms) {
  Smoothness sm = Smoothness::Entire;
  StressTag tag = StressTag::Polynomial;
  for (const auto& [c, f] : terms) {
    (void)c;
    sm = join(sm, f.smoothness);
    if (f.tag == StressTag::Enrichment) tag = StressTag::Enrichment;
  }
  auto shared = std::make_shared<std::vector<std::pair<double, StressC2>>>(std::move(terms));
  return {[shared](const Vec2& p) {
            SymTensor t;
            for (const auto& [c, f] : *shared) t += f.value(p) * c;
            return t;
          },
          [shared](const Vec2& p) {
            Vec2 d(0, 0);
            for (const auto& [c, f] : *shared) d += c * f.div(p);
            return d;
          },
          sm, tag};
}

std::vector<StressC2> fill_m_fields(const ReferencePolygon& shape, int k, SpaceVariant variant) {
  if (k < 1) throw UsageError("enriched spaces require k >= 1");
  std::vector<ScalarC2> potentials;
  switch (variant) {
    case SpaceVariant::Hdg:
      return {};
    case SpaceVariant::HdgM:
      potentials = polygon_potentials(shape, k);
      break;
    case SpaceVariant::QRational:
      require_square(shape, variant);
      potentials = square_rational_potentials(shape, k);
      break;
    case SpaceVariant::QExponential:
      require_square(shape, variant);
      if (k < 2) {
        throw UsageError("the exponential square enrichment requires k >= 2");
      }
      potentials = square_exponential_potentials(shape, k);
      break;
  }
  std::vector<StressC2> fields;
  fields.reserve(potentials.size());
  for (const ScalarC2& phi : potentials) fields.push_back(airy(phi));
  return fields;
}

std::vector<StressC2> fill_v_fields(const ReferencePolygon& shape, int k, SpaceVariant variant) {
  if (k < 1) throw UsageError("enriched spaces require k >= 1");
  switch (variant) {
    case SpaceVariant::Hdg:
      return {};
    case SpaceVariant::QRational:
    case SpaceVariant::QExponential:
      require_square(shape, variant);
      return {stress_monomial(k + 1, k - 1, 0), stress_monomial(k + 1, k, 0),
              stress_monomial(k, k + 1, 1)};
    case SpaceVariant::HdgM:
      if (k < 2) {
        throw UsageError("the polygon divergence fill is defined for k >= 2 only");
      }
      return polygon_fill_v(shape, k);
  }
  throw UsageError("invalid space variant");
}

ElementSpaces polynomial_element_spaces(const ReferencePolygon& shape, int k, bool tensor) {
  if (k < 1) throw UsageError("element spaces require k >= 1");
  ElementSpaces sp;
  sp.k = k;
  sp.variant = SpaceVariant::Hdg;
  sp.shape = shape;

  // Center/scale the monomials on the element so translated elements produce
  // identical local matrices.
  const PolyBases bases = polynomial_bases(k, shape.center, shape.diameter(), tensor);
  sp.stress = bases.stress;
  sp.n_stress_poly = static_cast<int>(sp.stress.size());
  sp.displacement = bases.vec;
  sp.rigid = bases.rigid;
  sp.trace = EdgeBasis{k};
  return sp;
}

ElementSpaces enriched_stress_basis(const ReferencePolygon& shape, int k, SpaceVariant variant) {
  if (k < 1) throw UsageError("enriched spaces require k >= 1");
  const bool tensor = variant == SpaceVariant::QRational || variant == SpaceVariant::QExponential;
  ElementSpaces sp = polynomial_element_spaces(shape, k, tensor);
  sp.variant = variant;

  const std::vector<StressC2> raw = fill_m_fields(shape, k, variant);
  if (!raw.empty()) {
    const QuadratureRule rule = polygon_quadrature(shape, 2 * k + 12, 4);
    const Eigen::MatrixXd p = volume_samples(sp.stress, rule);
    const Eigen::MatrixXd e = volume_samples(raw, rule);
    const Eigen::MatrixXd proj =
        (p.transpose() * p).ldlt().solve(p.transpose() * e);
    const Eigen::MatrixXd reduced = e - p * proj;
    for (int j = 0; j < reduced.cols(); ++j) {
      const double norm = reduced.col(j).norm();
      if (!(norm > 1e-13)) {
        throw ConditioningError("enrichment field " + std::to_string(j) +
                                " is numerically polynomial (residual norm " +
                                std::to_string(norm) + ")");
      }
      std::vector<std::pair<double, StressC2>> terms{{1.0 / norm, raw[static_cast<std::size_t>(j)]}};
      for (int i = 0; i < proj.rows(); ++i) {
        if (std::abs(proj(i, j)) > 1e-15) {
          terms.emplace_back(-proj(i, j) / norm, sp.stress[static_cast<std::size_t>(i)]);
        }
      }
      sp.stress.push_back(stress_combination(std::move(terms)));
    }

    // Conditioning certificate for the assembled basis.
    Eigen::MatrixXd all = volume_samples(sp.stress, rule);
    for (int j = 0; j < all.cols(); ++j) {
      const double norm = all.col(j).norm();
      if (norm > 0) all.col(j) /= norm;
    }
    const Eigen::VectorXd sv = all.jacobiSvd().singularValues();
    const double smin = sv(sv.size() - 1) * sv(sv.size() - 1);
    const double cond = (sv(0) * sv(0)) / smin;
    if (smin < kGramSigmaMin || cond > kGramConditionBound) {
      throw ConditioningError("conditioned stress Gram is near-singular: sigma_min " +
                              std::to_string(smin) + ", condition " + std::to_string(cond));
    }
  }
  return sp;
}

}  // namespace ehdg
