// Tests for the decomposition verifier: deficit indices, ordered kernels,
// structural verification, fill certification, the local projection, and the
// stability constants. Reference numbers come from hand-derivable closed
// forms or from the finite-difference / adaptive-integration oracles.
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "ehdg/basis.hpp"
#include "ehdg/bubbles.hpp"
#include "ehdg/element_spaces.hpp"
#include "ehdg/fields.hpp"
#include "ehdg/mdecomp.hpp"
#include "ehdg/polygon.hpp"
#include "ehdg/sample_space.hpp"
#include "ehdg/types.hpp"
#include "oracles.hpp"

using namespace ehdg;

namespace {

ScalarC2 lambda_affine(const ReferencePolygon& poly, int i) {
  const Eigen::Vector3d& c = poly.lam[static_cast<std::size_t>(i)];
  return affine(c(0), c(1), c(2));
}

// [[c x, 0], [0, 0]], divergence (c, 0).
StressC2 xx_linear(double c) {
  return {[c](const Vec2& p) { return SymTensor{c * p.x(), 0.0, 0.0}; },
          [c](const Vec2&) { return Vec2(c, 0.0); },
          Smoothness::Entire,
          StressTag::Polynomial};
}

int im_closed_form(int ne, int k) {
  const int theta = std::min(k, 2 * ne - 4);
  return 2 * (theta + 1) * ne - (theta + 3) * (theta + 4) / 2;
}

// Per-edge deficit at 1-based edge position i; the minima are deliberately
// not clamped at zero.
int im_edge_closed_form(int ne, int k, int i) {
  int v = std::min(k + 1, 2 * i - 4) + std::min(k + 1, 2 * i - 3);
  if (i == 1) v += 3;
  if (i == ne) v -= 3;
  return v;
}

// Stress field from three component closures; the divergence comes from the
// component jets.
StressC2 stress_from_components(const ScalarC2& sxx, const ScalarC2& syy, const ScalarC2& sxy) {
  return {[=](const Vec2& p) { return SymTensor{sxx.value(p), syy.value(p), sxy.value(p)}; },
          [=](const Vec2& p) {
            const Deriv2 dxx = eval_with_derivatives(sxx, p);
            const Deriv2 dyy = eval_with_derivatives(syy, p);
            const Deriv2 dxy = eval_with_derivatives(sxy, p);
            return Vec2(dxx.grad.x() + dxy.grad.y(), dxy.grad.x() + dyy.grad.y());
          },
          join(join(sxx.smoothness, syy.smoothness), sxy.smoothness),
          StressTag::Polynomial};
}

// Normal traces of Airy fields sampled on all edges via central differences
// of the potentials: a rank route independent of the jet arithmetic.
Eigen::MatrixXd fd_airy_traction_samples(
    const std::vector<std::function<double(double, double)>>& potentials,
    const ReferencePolygon& poly) {
  const int pts = 6;
  Eigen::MatrixXd m(poly.ne() * pts * 2, static_cast<Eigen::Index>(potentials.size()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index r = 0;
    for (int e = 0; e < poly.ne(); ++e) {
      const Vec2 n = poly.normals[static_cast<std::size_t>(e)];
      for (int q = 0; q < pts; ++q) {
        const Vec2 p = poly.edge_point(e, (q + 0.5) / pts);
        const auto h = oracle::fd_hess(potentials[static_cast<std::size_t>(j)], p.x(), p.y());
        // sigma = (phi_yy, phi_xx, -phi_xy)
        m(r++, j) = h[1] * n.x() - h[2] * n.y();
        m(r++, j) = -h[2] * n.x() + h[0] * n.y();
      }
    }
  }
  return m;
}

Eigen::VectorXd pseudo_coeffs(int n, unsigned seed) {
  std::mt19937 gen(seed);
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) {
    c(i) = 2.0 * (static_cast<double>(gen()) / static_cast<double>(std::mt19937::max())) - 1.0;
  }
  return c;
}

double stress_l2_error(const StressC2& a, const StressC2& b, const ReferencePolygon& shape) {
  const StressC2 diff = stress_combination({{1.0, a}, {-1.0, b}});
  const QuadratureRule rule = polygon_quadrature(shape, 16, 2);
  return volume_samples(std::vector<StressC2>{diff}, rule).col(0).norm();
}

StressC2 smooth_test_stress() {
  const ScalarC2 sxx{[](const Jet2& x, const Jet2& y) { return sin(1.1 * x + 0.6 * y) + 2.0; }};
  const ScalarC2 syy{[](const Jet2& x, const Jet2& y) { return cos(0.8 * x - 0.4 * y); }};
  const ScalarC2 sxy{[](const Jet2& x, const Jet2& y) { return 0.5 * exp(0.4 * x - 0.3 * y); }};
  return stress_from_components(sxx, syy, sxy);
}

VectorC2 smooth_test_displacement() {
  return {{[](const Jet2& x, const Jet2& y) { return sin(0.9 * x) * cos(0.7 * y); }},
          {[](const Jet2& x, const Jet2& y) { return exp(0.3 * x + 0.2 * y); }}};
}

bool has_note(const std::vector<std::string>& notes, const std::string& needle) {
  for (const std::string& n : notes) {
    if (n.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("sampled subspace ranks reproduce hand counts on both routes") {
  const ReferencePolygon tri = make_triangle_ref();

  CHECK(subspace_rank({xx_linear(1.0), xx_linear(2.0)}, tri, SampleForm::Volume, 8) == 1);
  CHECK(subspace_rank(polynomial_element_spaces(tri, 2, false).stress, tri, SampleForm::Volume,
                      12) == 18);

  const ScalarC2 l0 = lambda_affine(tri, 0), l1 = lambda_affine(tri, 1);
  CHECK(subspace_rank({airy(l0 * l0), airy(l0 * l0 * l1)}, tri, SampleForm::EdgeTrace, 12) == 2);
  CHECK(subspace_rank({airy(l0 * l0), airy(3.0 * (l0 * l0))}, tri, SampleForm::EdgeTrace, 12) == 1);

  // Same trace ranks through finite differences of the potentials.
  const Eigen::Vector3d c0 = tri.lam[0], c1 = tri.lam[1];
  const std::function<double(double, double)> pot1 = [c0](double x, double y) {
    const double l = c0(0) * x + c0(1) * y + c0(2);
    return l * l;
  };
  const std::function<double(double, double)> pot2 = [c0, c1](double x, double y) {
    const double l = c0(0) * x + c0(1) * y + c0(2);
    return l * l * (c1(0) * x + c1(1) * y + c1(2));
  };
  const std::function<double(double, double)> pot3 = [c0](double x, double y) {
    const double l = c0(0) * x + c0(1) * y + c0(2);
    return 3.0 * l * l;
  };
  CHECK(oracle::qr_rank(fd_airy_traction_samples({pot1, pot2}, tri), 1e-4) == 2);
  CHECK(oracle::qr_rank(fd_airy_traction_samples({pot1, pot3}, tri), 1e-4) == 1);
}

TEST_CASE("deficit indices: triangle and square worked counts") {
  const ReferencePolygon tri = make_triangle_ref();
  const MDecompReport r1 = compute_indices(polynomial_element_spaces(tri, 1, false));
  CHECK(r1.dim_sigma == 9);
  CHECK(r1.dim_v == 6);
  CHECK(r1.dim_m == 12);
  CHECK(r1.dim_sigma_s == 7);
  CHECK(r1.dim_gamma_sigma_s == 7);
  CHECK(r1.dim_v_rm == 3);
  CHECK(r1.dim_gamma_v_rm == 3);
  CHECK(r1.i_m == 2);
  CHECK(r1.i_s == 4);
  CHECK(r1.theta == 1);
  CHECK(r1.per_edge == std::vector<int>{0, 1, 1});

  const ReferencePolygon sq = make_square_ref();
  const MDecompReport q1 = compute_indices(polynomial_element_spaces(sq, 1, true));
  CHECK(q1.i_m == 6);
  CHECK(q1.i_s == 3);
  const MDecompReport q3 = compute_indices(polynomial_element_spaces(sq, 3, true));
  CHECK(q3.i_m == 10);
  CHECK(q3.i_s == 3);
}

TEST_CASE("deficit indices agree with the closed forms across shapes and degrees") {
  const std::vector<ReferencePolygon> shapes = {make_triangle_ref(), make_square_ref(),
                                                make_regular_polygon(5)};
  for (const ReferencePolygon& shape : shapes) {
    const int ne = shape.ne();
    for (int k = 1; k <= 4; ++k) {
      CAPTURE(ne);
      CAPTURE(k);
      const MDecompReport rep = compute_indices(polynomial_element_spaces(shape, k, false));
      CHECK(rep.i_m == im_closed_form(ne, k));
      CHECK(rep.i_s == 2 * (k + 1));
      CHECK(rep.theta == std::min(k, 2 * ne - 4));
      CHECK(rep.i_m >= 0);
      CHECK(rep.i_s >= 0);
      REQUIRE(static_cast<int>(rep.per_edge.size()) == ne);
      CHECK(std::accumulate(rep.per_edge.begin(), rep.per_edge.end(), 0) == rep.i_m);
      for (int e = 0; e < ne; ++e) {
        CAPTURE(e);
        CHECK(rep.per_edge[static_cast<std::size_t>(e)] == im_edge_closed_form(ne, k, e + 1));
      }
      // Empty notes == the ordered-kernel dimensions matched their closed
      // forms at every level.
      CHECK(rep.notes.empty());
    }
  }

  const int q_im[] = {6, 9, 10, 10};
  const ReferencePolygon sq = make_square_ref();
  for (int k = 1; k <= 4; ++k) {
    CAPTURE(k);
    const MDecompReport rep = compute_indices(polynomial_element_spaces(sq, k, true));
    CHECK(rep.i_m == q_im[k - 1]);
    CHECK(rep.i_s == 3);
  }
}

TEST_CASE("ordered divergence-free kernels on the triangle at k = 1") {
  const ReferencePolygon tri = make_triangle_ref();
  const ElementSpaces base = polynomial_element_spaces(tri, 1, false);
  const OrderedKernels ok = ordered_kernels(base);
  REQUIRE(ok.levels.size() == 4);
  CHECK(ok.levels[0].cols() == 7);
  CHECK(ok.levels[1].cols() == 3);
  CHECK(ok.levels[2].cols() == 0);
  CHECK(ok.levels[3].cols() == 0);
  CHECK(ok.gamma_ranks == std::vector<int>{4, 3, 0});
  CHECK(ok.notes.empty());

  // A level-1 member really is divergence-free with zero traction on edge 0.
  REQUIRE(ok.levels[1].rows() == 9);
  const StressC2 member = combine_stress(base.stress, ok.levels[1].col(0));
  const Vec2 n0 = tri.normals[0];
  for (double s : {0.15, 0.5, 0.85}) {
    const Vec2 p = tri.edge_point(0, s);
    const SymTensor t = member.value(p);
    const Vec2 traction(t.xx * n0.x() + t.xy * n0.y(), t.xy * n0.x() + t.yy * n0.y());
    CHECK(traction.norm() < 1e-9);
    CHECK(member.div(p).norm() < 1e-9);
  }
}

TEST_CASE("structural verification: plain space fails only the index, enriched spaces pass") {
  const ReferencePolygon tri = make_triangle_ref();

  const MDecompReport plain = verify_mdecomposition(polynomial_element_spaces(tri, 1, false));
  CHECK(plain.structure_checked);
  CHECK(plain.pass_traces_in_m);
  CHECK(plain.pass_strain_subspace);
  CHECK(plain.pass_divergence_subspace);
  CHECK_FALSE(plain.pass_index_zero);
  CHECK(plain.i_m == 2);
  CHECK_FALSE(plain.pass_kernel_sum);
  CHECK(plain.cross_gram_norm < 1e-9);
  CHECK_FALSE(plain.pass());

  const MDecompReport tri1 =
      verify_mdecomposition(enriched_stress_basis(tri, 1, SpaceVariant::HdgM));
  CHECK(tri1.pass());
  CHECK(tri1.i_m == 0);
  CHECK(tri1.pass_index_zero);
  CHECK(tri1.max_trace_residual < 1e-9);
  CHECK(tri1.dim_sigma == 11);

  const ReferencePolygon sq = make_square_ref();
  const MDecompReport q2 =
      verify_mdecomposition(enriched_stress_basis(sq, 2, SpaceVariant::QExponential));
  CHECK(q2.pass());
}

TEST_CASE("kernel trace sum: passing spaces split the trace space orthogonally") {
  struct Case {
    ReferencePolygon shape;
    int k;
    SpaceVariant variant;
  };
  const ReferencePolygon tri = make_triangle_ref();
  const ReferencePolygon sq = make_square_ref();
  const ReferencePolygon pent = make_regular_polygon(5);
  const std::vector<Case> cases = {
      {tri, 1, SpaceVariant::HdgM},        {tri, 2, SpaceVariant::HdgM},
      {tri, 3, SpaceVariant::HdgM},        {sq, 1, SpaceVariant::QRational},
      {sq, 2, SpaceVariant::QRational},    {sq, 2, SpaceVariant::QExponential},
      {sq, 3, SpaceVariant::QExponential}, {pent, 1, SpaceVariant::HdgM},
      {pent, 2, SpaceVariant::HdgM},
  };
  for (const Case& c : cases) {
    const int ne = c.shape.ne();
    CAPTURE(ne);
    CAPTURE(c.k);
    const std::string vn = variant_name(c.variant);
    CAPTURE(vn);
    const MDecompReport rep = verify_mdecomposition(enriched_stress_basis(c.shape, c.k, c.variant));
    CHECK(rep.pass());
    CHECK(rep.pass_kernel_sum);
    CHECK(rep.dim_m == rep.dim_gamma_sigma_s + rep.dim_gamma_v_rm);
    CHECK(rep.cross_gram_norm < 1e-9);
    CHECK(rep.i_m == 0);
    CHECK(std::accumulate(rep.per_edge.begin(), rep.per_edge.end(), 0) == rep.i_m);
  }
}

TEST_CASE("fill certification: triangle lists, square divergence fill, failure reporting") {
  const ReferencePolygon tri = make_triangle_ref();
  const ScalarC2 l0 = lambda_affine(tri, 0), l1 = lambda_affine(tri, 1),
                 l2 = lambda_affine(tri, 2);
  const ScalarC2 b0 = triangle_bubble(0, tri), b1 = triangle_bubble(1, tri),
                 b2 = triangle_bubble(2, tri);
  const ElementSpaces base2 = polynomial_element_spaces(tri, 2, false);

  {
    const std::vector<StressC2> fill = {airy(b1), airy(b2), airy(b2 * l0)};
    const std::vector<int> counts = {0, 1, 2};
    const MDecompReport rep = verify_fill_properties(fill, base2, FillKind::TraceFill, &counts);
    CHECK(rep.fill_m.checked);
    CHECK(rep.fill_m.kind == "trace-fill");
    CHECK(rep.fill_m.dim == 3);
    CHECK(rep.fill_m.pass_trace);
    CHECK(rep.fill_m.pass_divergence);
    CHECK(rep.fill_m.pass_independent);
    CHECK(rep.fill_m.pass_dimension);
    CHECK(rep.fill_m.per_edge_checked);
    CHECK(rep.fill_m.pass_per_edge);
    CHECK(rep.pass());
  }
  {
    // Rotated list: each bubble paired with the barycentric of the next edge.
    const std::vector<StressC2> alt = {airy(b0 * l1), airy(b1 * l2), airy(b2 * l0)};
    for (int k : {2, 3}) {
      CAPTURE(k);
      const MDecompReport rep = verify_fill_properties(alt, polynomial_element_spaces(tri, k, false),
                                                       FillKind::TraceFill);
      CHECK(rep.fill_m.dim == 3);
      CHECK(rep.fill_m.pass());
      CHECK(rep.pass());
    }
  }
  {
    const ReferencePolygon sq = make_square_ref();
    const MDecompReport rep =
        verify_fill_properties(fill_v_fields(sq, 1, SpaceVariant::QRational),
                               polynomial_element_spaces(sq, 1, true), FillKind::DivergenceFill);
    CHECK(rep.fill_v.checked);
    CHECK(rep.fill_v.kind == "divergence-fill");
    CHECK(rep.fill_v.dim == 3);
    CHECK(rep.fill_v.pass_trace);
    CHECK(rep.fill_v.pass_divergence);
    CHECK(rep.fill_v.pass_independent);
    CHECK(rep.fill_v.pass_dimension);
    CHECK(rep.i_s == 3);
    CHECK(rep.pass());
  }
  {
    // A repeated member is reported as a dimension failure, not thrown.
    const std::vector<StressC2> dup = {airy(b2), airy(b2), airy(b2 * l0)};
    const MDecompReport rep = verify_fill_properties(dup, base2, FillKind::TraceFill);
    CHECK(rep.fill_m.checked);
    CHECK_FALSE(rep.fill_m.pass_dimension);
    CHECK_FALSE(rep.pass());
  }
  {
    // A member with nonzero divergence fails the divergence property.
    const std::vector<StressC2> leaky = {airy(b1), airy(b2), xx_linear(1.0)};
    const MDecompReport rep = verify_fill_properties(leaky, base2, FillKind::TraceFill);
    CHECK_FALSE(rep.fill_m.pass_divergence);
    CHECK_FALSE(rep.pass());
  }
}

TEST_CASE("one-stop reports for the enriched variants") {
  const ReferencePolygon tri = make_triangle_ref();
  const ReferencePolygon sq = make_square_ref();
  const ReferencePolygon pent = make_regular_polygon(5);

  const MDecompReport t1 = mdecomp_report(tri, 1, SpaceVariant::HdgM);
  CHECK(t1.pass());
  CHECK(t1.shape == "triangle");
  CHECK(t1.variant == "hdg-m");
  CHECK(t1.k == 1);
  CHECK(t1.fill_m.checked);
  CHECK(t1.fill_m.per_edge_checked);
  CHECK(t1.fill_m.pass());
  CHECK_FALSE(t1.fill_v.checked);
  CHECK(!t1.certificates.empty());
  CHECK(has_note(t1.notes, "skipped for k = 1"));

  const MDecompReport t2 = mdecomp_report(tri, 2, SpaceVariant::HdgM);
  CHECK(t2.pass());
  CHECK(t2.fill_m.pass());
  CHECK(t2.fill_v.checked);
  CHECK(t2.fill_v.pass());
  CHECK(has_note(t2.notes, "mirrored monomial"));
  bool merged = false;
  for (const RankCertificate& c : t2.certificates) {
    merged = merged || c.label.rfind("fill base: ", 0) == 0;
  }
  CHECK(merged);

  const MDecompReport p2 = mdecomp_report(pent, 2, SpaceVariant::HdgM);
  CHECK(p2.pass());
  CHECK(p2.shape == "pentagon");
  CHECK(p2.fill_m.per_edge_checked);
  CHECK(p2.fill_v.checked);

  const MDecompReport q1 = mdecomp_report(sq, 1, SpaceVariant::QRational);
  CHECK(q1.pass());
  CHECK(q1.fill_m.checked);
  CHECK_FALSE(q1.fill_m.per_edge_checked);
  CHECK(q1.fill_v.checked);

  const MDecompReport qe = mdecomp_report(sq, 2, SpaceVariant::QExponential);
  CHECK(qe.pass());

  const MDecompReport plain = mdecomp_report(tri, 2, SpaceVariant::Hdg);
  CHECK_FALSE(plain.pass());
  CHECK_FALSE(plain.fill_m.checked);
  CHECK(plain.i_m == 3);
}

TEST_CASE("local projection reproduces discrete data and rigid motions") {
  const ReferencePolygon tri = make_triangle_ref();
  const ElementSpaces sp = enriched_stress_basis(tri, 1, SpaceVariant::HdgM);

  const Eigen::VectorXd cs = pseudo_coeffs(static_cast<int>(sp.stress.size()), 11);
  const Eigen::VectorXd cu = pseudo_coeffs(static_cast<int>(sp.displacement.size()), 12);
  const StressC2 sd = combine_stress(sp.stress, cs);
  const VectorC2 ud = combine_displacement(sp.displacement, cu);

  const ProjectionDiagnostic d = hdg_project(sd, ud, sp);
  CHECK((d.sigma_coeffs - cs).norm() <= 1e-9 * cs.norm());
  CHECK((d.u_coeffs - cu).norm() <= 1e-9 * cu.norm());
  CHECK(d.residual_sigma < 1e-10);
  CHECK(d.residual_u < 1e-10);
  CHECK(d.residual_trace < 1e-10);
  CHECK(d.dim_sigma_sbb == 0);
  CHECK(d.sbb_divergence_norm == 0.0);
  CHECK(d.sbb_trace_norm == 0.0);

  // Zero stress plus a rigid displacement comes back unchanged.
  Eigen::VectorXd cr(3);
  cr << 0.7, -0.3, 0.4;
  const VectorC2 ur = combine_displacement(sp.rigid, cr);
  const ProjectionDiagnostic dr = hdg_project(stress_combination({}), ur, sp);
  CHECK(dr.sigma_coeffs.norm() < 1e-10);
  const VectorC2 pu = combine_displacement(sp.displacement, dr.u_coeffs);
  for (const Vec2& p : {Vec2(0.2, 0.2), Vec2(0.5, 0.1), Vec2(0.1, 0.6)}) {
    CHECK((pu.value(p) - ur.value(p)).norm() < 1e-10);
  }

  // The unenriched space has no square local system to solve.
  CHECK_THROWS_AS(hdg_project(sd, ud, polynomial_element_spaces(tri, 1, false)),
                  ConditioningError);
}

TEST_CASE("local projection of smooth fields: idempotence and mesh-rate decay") {
  const StressC2 sig = smooth_test_stress();
  const VectorC2 u = smooth_test_displacement();

  const ReferencePolygon tri = make_triangle_ref();
  const ElementSpaces sp = enriched_stress_basis(tri, 1, SpaceVariant::HdgM);
  const ProjectionDiagnostic d = hdg_project(sig, u, sp);
  CHECK(d.residual_sigma < 1e-10);
  CHECK(d.residual_u < 1e-10);
  CHECK(d.residual_trace < 1e-10);

  const StressC2 ps = combine_stress(sp.stress, d.sigma_coeffs);
  const VectorC2 pv = combine_displacement(sp.displacement, d.u_coeffs);
  const ProjectionDiagnostic d2 = hdg_project(ps, pv, sp);
  CHECK((d2.sigma_coeffs - d.sigma_coeffs).norm() <=
        1e-12 * std::max(1.0, d.sigma_coeffs.norm()));
  CHECK((d2.u_coeffs - d.u_coeffs).norm() <= 1e-12 * std::max(1.0, d.u_coeffs.norm()));

  // Projection error on uniform triangulations of the unit triangle drops at
  // second order in the mesh size for k = 1.
  std::vector<double> errs;
  for (int l = 1; l <= 3; ++l) {
    const int n = 1 << l;
    const double h = 1.0 / n;
    double acc = 0;
    const auto add = [&](const Vec2& a, const Vec2& b, const Vec2& c) {
      const ReferencePolygon elem = make_polygon({a, b, c});
      const ElementSpaces esp = enriched_stress_basis(elem, 1, SpaceVariant::HdgM);
      const ProjectionDiagnostic pd = hdg_project(sig, u, esp);
      const double e = stress_l2_error(sig, combine_stress(esp.stress, pd.sigma_coeffs), elem);
      acc += e * e;
    };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; i + j < n; ++j) {
        const Vec2 p00(i * h, j * h), p10((i + 1) * h, j * h), p01(i * h, (j + 1) * h),
            p11((i + 1) * h, (j + 1) * h);
        add(p00, p10, p01);
        if (i + j < n - 1) add(p10, p11, p01);
      }
    }
    errs.push_back(std::sqrt(acc));
  }
  const double slope = oracle::fit_slope(errs);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.075));
}

TEST_CASE("stability constants: golden values, scaling invariance, degenerate sentinel") {
  const ReferencePolygon tri = make_triangle_ref();
  const StabilityConstants sc =
      stability_constants(enriched_stress_basis(tri, 1, SpaceVariant::HdgM));
  CHECK(sc.dim_sigma_perp == 8);
  CHECK(sc.dim_v_perp == 4);
  for (double c : {sc.c_sigma_perp, sc.c_v_perp, sc.c_strain, sc.c_div}) {
    CHECK(std::isfinite(c));
    CHECK(c > 0.0);
  }
  CHECK(sc.a_v_perp == 1.0);
  CHECK(sc.alpha_norm == 1.0);

  // Oracle route for the displacement-complement constant. The divergence
  // image is the constants, so the complement inside P_1^2 is spanned per
  // component by {x - 1/3, y - 1/3}; on this 2x2 block the boundary Gram is
  // an exact multiple of the volume Gram and the constant comes out as
  // 1 / (2 sqrt(2 + 2 sqrt(2))).
  const Vec2 A(0, 0), B(1, 0), C(0, 1);
  const std::array<std::function<double(double, double)>, 2> pb = {
      [](double x, double) { return x - 1.0 / 3.0; },
      [](double, double y) { return y - 1.0 / 3.0; }};
  Eigen::Matrix2d g, t;
  const std::array<std::pair<Vec2, Vec2>, 3> edges = {std::pair{A, B}, std::pair{B, C},
                                                      std::pair{C, A}};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      g(i, j) = oracle::integrate_triangle(
          [&](double x, double y) { return pb[static_cast<std::size_t>(i)](x, y) *
                                           pb[static_cast<std::size_t>(j)](x, y); },
          A, B, C);
      double acc = 0;
      for (const auto& [ea, eb] : edges) {
        const double len = (eb - ea).norm();
        acc += len * oracle::integrate_segment(
                         [&](double s) {
                           const Vec2 q = ea + s * (eb - ea);
                           return pb[static_cast<std::size_t>(i)](q.x(), q.y()) *
                                  pb[static_cast<std::size_t>(j)](q.x(), q.y());
                         },
                         0.0, 1.0);
      }
      t(i, j) = acc;
    }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> es(t, g);
  REQUIRE(es.info() == Eigen::Success);
  const double c_oracle = 1.0 / std::sqrt(std::sqrt(2.0) * es.eigenvalues()(0));
  const double c_closed = 1.0 / (2.0 * std::sqrt(2.0 + 2.0 * std::sqrt(2.0)));
  CHECK(c_oracle == doctest::Approx(c_closed).epsilon(1e-9));
  CHECK(sc.c_v_perp == doctest::Approx(c_oracle).epsilon(1e-8));

  // Constant fields all share the ratio perimeter/area, so the divergence
  // image constant is sqrt(h * perimeter / area) exactly.
  CHECK(sc.c_div ==
        doctest::Approx(std::sqrt(std::sqrt(2.0) * (2.0 + std::sqrt(2.0)) * 2.0)).epsilon(1e-8));

  // Scaling plus translation leaves the normalized constants unchanged.
  const ReferencePolygon big = make_polygon({Vec2(1, 1), Vec2(5, 1), Vec2(1, 5)});
  const StabilityConstants sb =
      stability_constants(enriched_stress_basis(big, 1, SpaceVariant::HdgM));
  CHECK(sb.c_sigma_perp == doctest::Approx(sc.c_sigma_perp).epsilon(1e-10));
  CHECK(sb.c_v_perp == doctest::Approx(sc.c_v_perp).epsilon(1e-10));
  CHECK(sb.c_strain == doctest::Approx(sc.c_strain).epsilon(1e-10));
  CHECK(sb.c_div == doctest::Approx(sc.c_div).epsilon(1e-10));
  CHECK(sb.a_v_perp == sc.a_v_perp);
  CHECK(sb.alpha_norm == sc.alpha_norm);
  CHECK(sb.dim_sigma_perp == sc.dim_sigma_perp);
  CHECK(sb.dim_v_perp == sc.dim_v_perp);

  // When the displacement space coincides with the divergence image the
  // stabilization degenerates: weight 0 and a sentinel infinity.
  ElementSpaces mixed;
  mixed.k = 1;
  mixed.variant = SpaceVariant::Hdg;
  mixed.shape = tri;
  const PolyBases pb1 = polynomial_bases(1, tri.center, tri.diameter(), false);
  const PolyBases pb0 = polynomial_bases(0, tri.center, tri.diameter(), false);
  mixed.stress = pb1.stress;
  mixed.n_stress_poly = static_cast<int>(pb1.stress.size());
  mixed.displacement = pb0.vec;
  mixed.rigid = pb0.vec;  // translations are the only rigid motions in P_0^2
  mixed.trace = EdgeBasis{1};
  const StabilityConstants sm = stability_constants(mixed);
  CHECK(sm.dim_v_perp == 0);
  CHECK(std::isinf(sm.a_v_perp));
  CHECK(sm.alpha_norm == 0.0);
  CHECK(sm.c_v_perp == 0.0);
  CHECK(std::isfinite(sm.c_sigma_perp));
  CHECK(sm.c_sigma_perp > 0.0);
  CHECK(has_note(sm.notes, "no stabilization"));
}
