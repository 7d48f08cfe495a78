// Enriched local spaces: the stress space P_k(K;S) or Q_k(K;S) plus the Airy
// images of bubble/lifting products that close the trace count on each edge,
// with the matching displacement and edge trace spaces.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "ehdg/basis.hpp"
#include "ehdg/fields.hpp"
#include "ehdg/polygon.hpp"

namespace ehdg {

enum class SpaceVariant {
  Hdg,           // plain P_k stress, no enrichment
  HdgM,          // P_k stress + polygon enrichment (triangle lists fall out as a special case)
  QRational,     // Q_k stress on the unit square, composite-lifting enrichment
  QExponential,  // Q_k stress on the unit square, exponential enrichment (k >= 2)
};

SpaceVariant parse_variant(const std::string& name);  // hdg | hdg-m | q-rational | q-exponential
std::string variant_name(SpaceVariant v);

struct ElementSpaces {
  int k = 1;
  SpaceVariant variant = SpaceVariant::Hdg;
  ReferencePolygon shape;
  // Polynomial block first (n_stress_poly columns), then the conditioned
  // enrichment fields; tags distinguish the two.
  std::vector<StressC2> stress;
  int n_stress_poly = 0;
  std::vector<VectorC2> displacement;
  std::vector<VectorC2> rigid;
  EdgeBasis trace;  // identical structure on every edge

  int n_enrichment() const { return static_cast<int>(stress.size()) - n_stress_poly; }
};

// Raw (unconditioned) enrichment fields: the span added to the polynomial
// stress space. Variant Hdg yields an empty list.
std::vector<StressC2> fill_m_fields(const ReferencePolygon& shape, int k, SpaceVariant variant);

// The companion fill used by mixed-method checks: stress fields whose
// divergences extend div(Sigma) onto all of the displacement space. Exists for
// every k on the Q-square variants, and for k >= 2 on polygons.
std::vector<StressC2> fill_v_fields(const ReferencePolygon& shape, int k, SpaceVariant variant);

// Assembles the full local spaces; enrichment fields are L2(K)-orthogonalized
// against the polynomial block and normalized so the local Gram stays
// well-conditioned.
ElementSpaces enriched_stress_basis(const ReferencePolygon& shape, int k, SpaceVariant variant);

// Plain polynomial spaces, no enrichment: full P_k (or tensor Q_k) stress,
// matching displacement space, rigid motions, degree-k edge traces.
ElementSpaces polynomial_element_spaces(const ReferencePolygon& shape, int k, bool tensor);

// Per-edge sizes of the fill_m_fields list for the polygon variant, in list
// order (edge 0 first). Sums to the total enrichment count.
std::vector<int> fill_m_edge_counts(const ReferencePolygon& shape, int k);

// c1*f1 + c2*f2 + ... as a single field (value and divergence combine).
StressC2 stress_combination(std::vector<std::pair<double, StressC2>> terms);

// Coefficient-vector combinations of basis lists (used to turn solver/verifier
// output back into evaluable fields).
StressC2 combine_stress(const std::vector<StressC2>& basis, const Eigen::VectorXd& coeffs);
VectorC2 combine_displacement(const std::vector<VectorC2>& basis, const Eigen::VectorXd& coeffs);

}  // namespace ehdg
