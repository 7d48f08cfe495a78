// Numerical certification that a stress/displacement space pair together with
// its edge-trace space admits the decomposition the method's local solvability
// and superconvergence rest on. Everything is decided from quadrature-sampled
// Gram matrices: dimension counts, trace-deficit indices, per-edge kernel
// bookkeeping, fill-space properties, the element-local projection, and the
// stability constants.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ehdg/element_spaces.hpp"
#include "ehdg/fields.hpp"
#include "ehdg/polygon.hpp"
#include "ehdg/sample_space.hpp"

namespace ehdg {

struct MDecompReport {
  std::string shape;    // "triangle", "quadrilateral", ..., "11-gon"
  int k = 0;
  std::string variant;  // space variant name, or "custom" for ad-hoc fills

  // Dimension bookkeeping. sigma_s is the divergence-free subspace of the
  // stress space, v_rm the rigid motions inside the displacement space, and
  // the gamma_* entries are the ranks of their boundary-trace images.
  int dim_sigma = 0;
  int dim_v = 0;
  int dim_m = 0;
  int dim_sigma_s = 0;
  int dim_v_rm = 0;
  int dim_gamma_sigma_s = 0;
  int dim_gamma_v_rm = 0;

  // Trace deficit dim M - dim gamma(sigma_s) - dim gamma(v_rm); the space
  // admits the decomposition exactly when this is zero (given the inclusions
  // below). i_s is the divergence deficit dim V - dim div(Sigma).
  int i_m = 0;
  int i_s = 0;
  int theta = 0;             // min(k, 2 ne - 4), the per-edge truncation level
  std::vector<int> per_edge; // edge-by-edge split of i_m, one entry per edge

  // Structural checks: boundary traces of both spaces land in M; strains of
  // the displacement space stay inside the stress space; divergences of the
  // stress space stay inside the displacement space; i_m == 0; and M is the
  // orthogonal direct sum of the two kernel trace images.
  bool structure_checked = false;
  bool pass_traces_in_m = false;
  bool pass_strain_subspace = false;
  bool pass_divergence_subspace = false;
  bool pass_index_zero = false;
  bool pass_kernel_sum = false;

  double max_trace_residual = 0;  // worst relative membership residual seen
  double cross_gram_norm = 0;     // spectral norm between the two trace images

  // Certification of an explicit fill list against the base space it is meant
  // to complete.
  struct FillCheck {
    bool checked = false;
    std::string kind;            // "trace-fill" or "divergence-fill"
    int dim = 0;
    bool pass_trace = false;     // fill traces land in M
    bool pass_divergence = false;// zero divergence (trace-fill) or contained in V
    bool pass_independent = false;  // joint rank additivity with the base images
    bool pass_dimension = false; // list size == sampled rank == the deficit
    bool per_edge_checked = false;
    bool pass_per_edge = false;  // earlier edges annihilated + per-edge complement
    bool pass() const {
      return !checked || (pass_trace && pass_divergence && pass_independent &&
                          pass_dimension && (!per_edge_checked || pass_per_edge));
    }
  };
  FillCheck fill_m;
  FillCheck fill_v;

  std::vector<RankCertificate> certificates;
  std::vector<std::string> notes;

  // Overall verdict. For fill certifications the base space is not required
  // to close the deficit itself (that is what the fill is for), so index-zero
  // and kernel-sum are only demanded when no fill section is present.
  bool pass() const {
    if (!structure_checked) return false;
    const bool inclusions = pass_traces_in_m && pass_strain_subspace && pass_divergence_subspace;
    if (fill_m.checked || fill_v.checked) {
      return inclusions && fill_m.pass() && fill_v.pass();
    }
    return inclusions && pass_index_zero && pass_kernel_sum;
  }
};

enum class FillKind { TraceFill, DivergenceFill };

// Nested divergence-free kernels ordered by edge: level i (0-based) consists
// of the divergence-free stress fields whose normal trace vanishes on edges
// 0..i-1. levels has ne+1 entries (the last one is the zero-trace bubble
// space); gamma_ranks[i] is the rank of the edge-i trace of level i. Columns
// are coefficient vectors relative to base.stress.
struct OrderedKernels {
  std::vector<Eigen::MatrixXd> levels;
  std::vector<int> gamma_ranks;
  std::vector<RankCertificate> certificates;
  std::vector<std::string> notes;  // deviations from the closed-form counts
};

// Element-local projection diagnostic: coefficients of the projected pair in
// the given bases plus the relative residuals of the three defining equation
// blocks (volume stress moments, volume displacement moments, trace matching).
struct ProjectionDiagnostic {
  Eigen::VectorXd sigma_coeffs;
  Eigen::VectorXd u_coeffs;
  double residual_sigma = 0;
  double residual_u = 0;
  double residual_trace = 0;
  // Canonical test subspaces as coefficient bases (columns): strains of the
  // displacement space plus the zero-divergence zero-trace stress bubbles on
  // the stress side, the divergence image on the displacement side.
  Eigen::MatrixXd sigma_tilde;
  Eigen::MatrixXd v_tilde;
  int dim_sigma_sbb = 0;
  double sbb_divergence_norm = 0;  // largest L2 divergence over bubble members
  double sbb_trace_norm = 0;       // largest L2 normal trace over bubble members
};

// Local stability constants, all normalized by powers of the element diameter
// so they are invariant under uniform scaling:
//   c_sigma_perp = sup over the stress complement of h^{-1/2} |tau|_K / |tau n|_bnd
//   c_v_perp     = sup over the displacement complement of h^{-1/2} |v|_K / |v|_bnd
//   c_strain     = sup over strains of h^{1/2} |tau n|_bnd / |tau|_K
//   c_div        = sup over divergence images of h^{1/2} |v|_bnd / |v|_K
// a_v_perp/alpha_norm record the admissible stabilization: 1/1 when the
// displacement complement is nontrivial, infinity/0 when it collapses.
struct StabilityConstants {
  double c_sigma_perp = 0;
  double c_v_perp = 0;
  double c_strain = 0;
  double c_div = 0;
  double a_v_perp = 0;
  double alpha_norm = 0;
  int dim_sigma_perp = 0;
  int dim_v_perp = 0;
  std::vector<std::string> notes;
};

// Dimension counts and deficit indices only (no structural pass flags).
MDecompReport compute_indices(const ElementSpaces& spaces);

// Full structural verification: inclusions, index, kernel trace sum.
MDecompReport verify_mdecomposition(const ElementSpaces& spaces);

// Certify an explicit fill list against an (unenriched) base space. For
// trace fills built edge by edge, pass the per-edge partition of the list to
// enable the earlier-edge-annihilation and per-edge-complement checks.
MDecompReport verify_fill_properties(const std::vector<StressC2>& fill, const ElementSpaces& base,
                                     FillKind kind, const std::vector<int>* edge_counts = nullptr);

OrderedKernels ordered_kernels(const ElementSpaces& base);

// Projection of an exact pair onto the local spaces through the canonical
// test subspaces; alpha is the (scalar) stabilization weight.
ProjectionDiagnostic hdg_project(const StressC2& exact_sigma, const VectorC2& exact_u,
                                 const ElementSpaces& spaces, double alpha = 1.0);

StabilityConstants stability_constants(const ElementSpaces& spaces);

// One-stop report for a shape/degree/variant triple: verifies the enriched
// space and certifies its fill lists. This is what the CLI serializes.
MDecompReport mdecomp_report(const ReferencePolygon& shape, int k, SpaceVariant variant);

}  // namespace ehdg
