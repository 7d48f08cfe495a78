// Element-local HDG algebra: reference-space sample tables shared by all
// elements, the affinely mapped blocks of the local saddle system, and static
// condensation onto the edge-trace unknowns.
//
// Stress bases live on the reference triangle and are pushed to a physical
// element K = F(K_ref) by the det-scaled congruence sigma -> J sigma J^T/det.
// That map preserves symmetry, sends divergence-free fields to
// divergence-free fields (div of the image is J div/det), and maps the
// enriched span onto the intrinsic enrichment of K exactly, because the
// bubble/lifting potentials are built from barycentric data and compose with
// affine maps. Displacements are pushed by plain composition. This keeps all
// per-element work dense linear algebra over tables sampled once.
#pragma once

#include <array>
#include <functional>

#include <Eigen/Dense>

#include "ehdg/element_spaces.hpp"
#include "ehdg/material.hpp"
#include "ehdg/mesh.hpp"
#include "ehdg/quadrature.hpp"

namespace ehdg {

// Physical triangle plus the direction convention of each edge's trace
// parameterization: edge i joins v_i and v_{i+1}; flip[i] means its Legendre
// parameter runs from v_{i+1} instead (the mesh's global lo->hi rule).
struct ElementGeometry {
  std::array<Vec2, 3> v;
  std::array<bool, 3> flip{false, false, false};
  Mat2 jac;  // columns v1-v0, v2-v0; det = 2*area
  Mat2 inv;
  double det = 0;
  std::array<Vec2, 3> normal;  // outward unit normals
  std::array<double, 3> edge_len;
  double diameter = 0;

  Vec2 map(const Vec2& ref) const { return v[0] + jac * ref; }
};

ElementGeometry element_geometry(const std::array<Vec2, 3>& v,
                                 const std::array<bool, 3>& flip = {false, false, false});
ElementGeometry element_geometry(const TriMesh& mesh, int t);

// Column j holds field j sampled at the given points.
struct StressSamples {
  Eigen::MatrixXd xx, yy, xy;      // tensor components
  Eigen::MatrixXd div_x, div_y;    // analytic divergences (when requested)
};
struct VectorSamples {
  Eigen::MatrixXd x, y;
};

// Everything precomputed once per (k, variant, quadrature policy) on the
// reference triangle. Assembly never touches quadrature points again: the
// rules are folded into reference cross-Grams here, and the element blocks
// become scalar recombinations of them under the congruence coefficients.
// The plain rule integrates purely polynomial products exactly; Gram rows
// touching enrichment come instead from a deep sector-graded rule (the
// rational corner behavior converges like 4^-levels on it), with a
// +4-degree/+1-level shadow set backing the per-element stability check.
struct ReferenceTables {
  ElementSpaces spaces;
  int quad_degree = 0;  // plain-rule exactness target (default 2k+8)

  QuadratureRule vol;   // plain reference rule; weights sum to 1/2
  VectorSamples vol_u;  // displacement components at the vol points (load assembly)

  // Volume cross-Grams p^T W q with stress components ordered (xx, yy, xy);
  // [q][p] stores the exact transpose of [p][q].
  std::array<std::array<Eigen::MatrixXd, 3>, 3> gram_vol;     // n_sigma x n_sigma
  std::array<std::array<Eigen::MatrixXd, 3>, 3> gram_enr;     // enrichment rows only
  std::array<std::array<Eigen::MatrixXd, 3>, 3> gram_shadow;  // ditto, shadow rule
  // div_a^T W u_b (divergences are analytic, zero for enrichment).
  std::array<std::array<Eigen::MatrixXd, 2>, 2> gram_div_u;   // n_sigma x n_u

  // Edge products against the scalar Legendre factor L_j(s), j <= k, in the
  // global edge parameter; [local edge][flip][component].
  SegmentRule edge;
  std::array<std::array<std::array<Eigen::MatrixXd, 3>, 2>, 3> stress_leg;  // n_sigma x (k+1)
  std::array<std::array<std::array<Eigen::MatrixXd, 2>, 2>, 3> u_leg;       // n_u x (k+1)
  std::array<Eigen::MatrixXd, 3> uu_edge;  // per-edge u-u mass, parameterization-free

  int n_sigma() const { return static_cast<int>(spaces.stress.size()); }
  int n_u() const { return static_cast<int>(spaces.displacement.size()); }
  int n_hat() const { return 3 * spaces.trace.dim(); }
};

ReferenceTables build_reference_tables(int k, SpaceVariant variant, int quad_degree = 0);

// Blocks of the local weak form for unknowns (sigma coeffs s, u coeffs w) and
// the element's 3*2(k+1) trace coefficients lam:
//   A s + B w - C lam           = 0          (constitutive + integration by parts)
//   B^T s - S w + R lam         = -load      (momentum, negated for symmetry)
//   flux moments: C^T s - R^T w + M lam      (numerical traction against mu)
// condense() eliminates (s, w): schur = M + E^T K^{-1} E with E = [C; -R],
// which is the element energy form and hence positive semidefinite.
struct LocalSystem {
  int n_sigma = 0, n_u = 0, n_hat = 0;
  Eigen::MatrixXd A, B, C, S, R, M;
  Eigen::VectorXd load;
  double symmetry_defect = 0;  // worst block asymmetry seen before averaging

  // Set by condense(): s = s0 + s_of_trace*lam, w = w0 + w_of_trace*lam,
  // flux = schur*lam - reduced.
  bool condensed = false;
  Eigen::MatrixXd schur;
  Eigen::VectorXd reduced;
  Eigen::MatrixXd s_of_trace, w_of_trace;
  Eigen::VectorXd s0, w0;
};

LocalSystem assemble_local(const ElementGeometry& elem, const ReferenceTables& tables,
                           const MaterialLaw& material,
                           const std::function<Vec2(const Vec2&)>& f, double alpha = 1.0,
                           bool check_quadrature = true);

// Static condensation; label goes into the error message should a pivot fail.
void condense(LocalSystem& local, const std::string& label = "");

// Interior coefficients for a given element trace vector (requires condense).
std::pair<Eigen::VectorXd, Eigen::VectorXd> recover_interior(const LocalSystem& local,
                                                             const Eigen::VectorXd& trace);

}  // namespace ehdg
