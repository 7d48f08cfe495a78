#include "ehdg/mdecomp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "ehdg/quadrature.hpp"

namespace ehdg {

namespace {

constexpr double kRankTol = 1e-8;
constexpr double kMembershipTol = 1e-9;     // relative trace-membership residual
constexpr double kDivFreeTol = 1e-8;        // relative L2 divergence of trace fills
constexpr double kCrossGramTol = 1e-9;      // orthogonality of the kernel trace images
constexpr double kInclusionTol = 1e-10;     // residual when re-expressing strains/divergences
constexpr double kStructuralZero = 1e-11;   // column treated as the zero field, rel. to basis
constexpr double kEigenFloor = 1e-13;       // Rayleigh quotient counted as exactly zero

int dim_p2(int m) { return m < 0 ? 0 : (m + 1) * (m + 2) / 2; }
int dim_p1(int m) { return m < 0 ? 0 : m + 1; }

std::string shape_name(int ne) {
  switch (ne) {
    case 3:
      return "triangle";
    case 4:
      return "quadrilateral";
    case 5:
      return "pentagon";
    case 6:
      return "hexagon";
    default:
      return std::to_string(ne) + "-gon";
  }
}

Eigen::MatrixXd hcat(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() == 0) return b;
  if (b.cols() == 0) return a;
  Eigen::MatrixXd m(a.rows(), a.cols() + b.cols());
  m << a, b;
  return m;
}

Eigen::MatrixXd vstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  Eigen::MatrixXd m(a.rows() + b.rows(), a.cols());
  m << a, b;
  return m;
}

// One Gauss rule per edge, rows stacked edge-major with two component rows per
// point, scaled by sqrt(weight * edge length): Euclidean dots realize
// L2(boundary) inner products, and all boundary matrices share this layout.
class BoundarySampler {
 public:
  BoundarySampler(const ReferencePolygon& poly, int degree)
      : poly_(&poly), seg_(edge_quadrature(degree)) {}

  const ReferencePolygon& poly() const { return *poly_; }
  int points_per_edge() const { return static_cast<int>(seg_.points.size()); }
  int edge_rows() const { return 2 * points_per_edge(); }
  int rows() const { return poly_->ne() * edge_rows(); }
  int edge_row_begin(int e) const { return e * edge_rows(); }

  // f(column, edge, s, point) -> Vec2
  template <typename Fn>
  Eigen::MatrixXd build(int ncols, Fn&& f) const {
    Eigen::MatrixXd m(rows(), ncols);
    for (int j = 0; j < ncols; ++j) {
      int r = 0;
      for (int e = 0; e < poly_->ne(); ++e) {
        const double len = poly_->edge_lengths[static_cast<std::size_t>(e)];
        for (int q = 0; q < points_per_edge(); ++q) {
          const double s = seg_.points[q];
          const double w = std::sqrt(seg_.weights[q] * len);
          const Vec2 v = f(j, e, s, poly_->edge_point(e, s));
          m(r++, j) = w * v.x();
          m(r++, j) = w * v.y();
        }
      }
    }
    return m;
  }

  Eigen::MatrixXd stress_traces(const std::vector<StressC2>& fields) const {
    return build(static_cast<int>(fields.size()), [&](int j, int e, double, const Vec2& p) {
      return fields[static_cast<std::size_t>(j)].traction(p, poly_->normals[static_cast<std::size_t>(e)]);
    });
  }

  Eigen::MatrixXd vector_traces(const std::vector<VectorC2>& fields) const {
    return build(static_cast<int>(fields.size()), [&](int j, int, double, const Vec2& p) {
      return fields[static_cast<std::size_t>(j)].value(p);
    });
  }

  // Column e * basis.dim() + m is mode m supported on edge e alone.
  Eigen::MatrixXd trace_basis(const EdgeBasis& basis) const {
    const int per_edge = basis.dim();
    return build(poly_->ne() * per_edge, [&](int j, int e, double s, const Vec2&) {
      return j / per_edge == e ? basis.eval(j % per_edge, s) : Vec2(0, 0);
    });
  }

 private:
  const ReferencePolygon* poly_;
  SegmentRule seg_;
};

// All sample matrices for one space triple, on shared rules.
struct Analysis {
  QuadratureRule rule;
  BoundarySampler sampler;
  Eigen::MatrixXd sigma_vol, v_vol, div, strain;
  Eigen::MatrixXd sigma_trace, v_trace, rigid_trace;
  Eigen::MatrixXd m_basis;
  Eigen::MatrixXd div_kernel;  // coefficient basis of divergence-free stresses
};

Analysis analyze_spaces(const ElementSpaces& sp) {
  Analysis a{polygon_quadrature(sp.shape, 2 * sp.k + 12, 4),
             BoundarySampler(sp.shape, 2 * sp.k + 14),
             {}, {}, {}, {}, {}, {}, {}, {}, {}};
  a.sigma_vol = volume_samples(sp.stress, a.rule);
  a.v_vol = volume_samples(sp.displacement, a.rule);
  a.div = divergence_samples(sp.stress, a.rule);
  a.strain = strain_samples(sp.displacement, a.rule);
  a.sigma_trace = a.sampler.stress_traces(sp.stress);
  a.v_trace = a.sampler.vector_traces(sp.displacement);
  a.rigid_trace = a.sampler.vector_traces(sp.rigid);
  a.m_basis = a.sampler.trace_basis(sp.trace);
  a.div_kernel = sample_nullspace(a.div, kRankTol);
  return a;
}

int rank_tracked(MDecompReport& rep, const Eigen::MatrixXd& m, const std::string& label) {
  RankCertificate cert;
  const int r = sample_rank(m, kRankTol, &cert, label);
  rep.certificates.push_back(cert);
  return r;
}

// Split columns into structural zeros (norm below floor) and live columns.
// sample_rank normalizes columns, so a roundoff-sized column would otherwise
// masquerade as a full-strength direction.
void split_structural_zeros(const Eigen::MatrixXd& m, double floor, std::vector<int>* zero,
                            std::vector<int>* live) {
  for (int j = 0; j < m.cols(); ++j) {
    (m.col(j).norm() <= floor ? zero : live)->push_back(j);
  }
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  return out;
}

Eigen::MatrixXd drop_structural_zeros(const Eigen::MatrixXd& m, double floor) {
  std::vector<int> zero, live;
  split_structural_zeros(m, floor, &zero, &live);
  if (zero.empty()) return m;
  return gather_columns(m, live);
}

double max_column_norm(const Eigen::MatrixXd& m) {
  double s = 0;
  for (int j = 0; j < m.cols(); ++j) s = std::max(s, m.col(j).norm());
  return s;
}

// Worst relative least-squares residual of t's columns against the span of m.
double membership_residual(const Eigen::MatrixXd& m, const Eigen::MatrixXd& t) {
  if (t.cols() == 0) return 0.0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd x = qr.solve(t);
  const Eigen::MatrixXd r = t - m * x;
  const double scale = max_column_norm(t);
  double worst = 0;
  for (int j = 0; j < t.cols(); ++j) {
    const double denom = std::max(t.col(j).norm(), 1e-14 * scale);
    if (denom > 0) worst = std::max(worst, r.col(j).norm() / denom);
  }
  return worst;
}

Eigen::MatrixXd orthonormal_range(const Eigen::MatrixXd& samples, double tol = kRankTol) {
  if (samples.rows() == 0 || samples.cols() == 0) return Eigen::MatrixXd(samples.rows(), 0);
  Eigen::MatrixXd m = samples;
  for (int j = 0; j < m.cols(); ++j) {
    const double n = m.col(j).norm();
    if (n > 0) m.col(j) /= n;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cut = sv.size() > 0 ? tol * sv(0) : 0.0;
  int rank = 0;
  while (rank < sv.size() && sv(rank) > cut) ++rank;
  return svd.matrixU().leftCols(rank);
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return m.jacobiSvd().singularValues()(0);
}

// span(inner) contained in span(container), by rank additivity.
bool contained_in(MDecompReport& rep, const Eigen::MatrixXd& container,
                  const Eigen::MatrixXd& inner, const std::string& label) {
  const int rc = rank_tracked(rep, container, label + " (container)");
  const int rj = rank_tracked(rep, hcat(container, inner), label + " (joint)");
  return rj == rc;
}

MDecompReport base_report(const ElementSpaces& sp) {
  MDecompReport rep;
  rep.shape = shape_name(sp.shape.ne());
  rep.k = sp.k;
  rep.variant = variant_name(sp.variant);
  rep.theta = std::min(sp.k, 2 * sp.shape.ne() - 4);
  rep.dim_sigma = static_cast<int>(sp.stress.size());
  rep.dim_v = static_cast<int>(sp.displacement.size());
  rep.dim_m = sp.shape.ne() * sp.trace.dim();
  return rep;
}

// Nested kernel pass shared by the index computation and the public op. The
// closed-form dimension comparisons only make sense for the full scalar P_k
// stress space, so they are gated on that.
OrderedKernels ordered_kernels_impl(const ElementSpaces& sp, const Analysis& a) {
  OrderedKernels ok;
  const int ne = sp.shape.ne();
  Eigen::MatrixXd level = a.div_kernel;
  for (int e = 0; e < ne; ++e) {
    ok.levels.push_back(level);
    const Eigen::MatrixXd basis_block =
        a.sigma_trace.middleRows(a.sampler.edge_row_begin(e), a.sampler.edge_rows());
    const double floor = kStructuralZero * std::max(1.0, max_column_norm(basis_block));
    const Eigen::MatrixXd edge_samples = basis_block * level;

    std::vector<int> zero, live;
    split_structural_zeros(edge_samples, floor, &zero, &live);
    const Eigen::MatrixXd live_samples = gather_columns(edge_samples, live);

    RankCertificate cert;
    const int r = live_samples.cols() == 0
                      ? 0
                      : sample_rank(live_samples, kRankTol, &cert,
                                    "ordered kernel trace on edge " + std::to_string(e));
    if (live_samples.cols() == 0) cert.label = "ordered kernel trace on edge " + std::to_string(e);
    ok.gamma_ranks.push_back(r);
    ok.certificates.push_back(cert);

    // Next level: columns already structurally zero on this edge carry over
    // untouched; the live ones contribute their nullspace combinations.
    const Eigen::MatrixXd live_level = gather_columns(level, live);
    level = hcat(gather_columns(level, zero), live_level * sample_nullspace(live_samples, kRankTol));
  }
  ok.levels.push_back(level);

  const bool scalar_pk = sp.variant == SpaceVariant::Hdg &&
                         static_cast<int>(sp.stress.size()) == 3 * dim_p2(sp.k);
  if (scalar_pk) {
    const int k = sp.k;
    for (int i = 1; i <= ne + 1; ++i) {
      const int expected = dim_p2(k + 4 - 2 * i) - (i == 1 ? 3 : 0);
      const int got = static_cast<int>(ok.levels[static_cast<std::size_t>(i - 1)].cols());
      if (got != expected) {
        ok.notes.push_back("ordered kernel level " + std::to_string(i) + " has dimension " +
                           std::to_string(got) + "; the closed-form count is " +
                           std::to_string(expected));
      }
    }
    for (int i = 1; i <= ne; ++i) {
      const int expected = dim_p1(k + 4 - 2 * i) + dim_p1(k + 3 - 2 * i) - (i == 1 ? 3 : 0);
      const int got = ok.gamma_ranks[static_cast<std::size_t>(i - 1)];
      if (got != expected) {
        ok.notes.push_back("ordered kernel trace on edge " + std::to_string(i - 1) +
                           " has rank " + std::to_string(got) + "; the closed-form count is " +
                           std::to_string(expected));
      }
    }
  }
  return ok;
}

// Dimension counts, deficit indices, per-edge split. Returns the kernels so
// callers that need them (fill certification) don't recompute.
OrderedKernels fill_indices(MDecompReport& rep, const ElementSpaces& sp, const Analysis& a) {
  rep.dim_sigma_s = static_cast<int>(a.div_kernel.cols());
  rep.dim_v_rm = rank_tracked(rep, volume_samples(sp.rigid, a.rule), "rigid motions");

  const double trace_floor = kStructuralZero * std::max(1.0, max_column_norm(a.sigma_trace));
  rep.dim_gamma_sigma_s = rank_tracked(
      rep, drop_structural_zeros(a.sigma_trace * a.div_kernel, trace_floor),
      "divergence-kernel boundary trace");
  rep.dim_gamma_v_rm = rank_tracked(rep, a.rigid_trace, "rigid-motion boundary trace");
  rep.i_m = rep.dim_m - rep.dim_gamma_sigma_s - rep.dim_gamma_v_rm;
  rep.i_s = rep.dim_v - rank_tracked(rep, a.div, "divergence image");

  OrderedKernels ok = ordered_kernels_impl(sp, a);
  const int ne = sp.shape.ne();
  const Eigen::MatrixXd rigid_last =
      a.rigid_trace.middleRows(a.sampler.edge_row_begin(ne - 1), a.sampler.edge_rows());
  const int r_rigid_last = rank_tracked(rep, rigid_last, "rigid-motion trace on the closing edge");
  rep.per_edge.clear();
  for (int e = 0; e < ne; ++e) {
    rep.per_edge.push_back(sp.trace.dim() - ok.gamma_ranks[static_cast<std::size_t>(e)] -
                           (e == ne - 1 ? r_rigid_last : 0));
  }
  for (const RankCertificate& c : ok.certificates) rep.certificates.push_back(c);
  for (const std::string& n : ok.notes) rep.notes.push_back(n);
  return ok;
}

void verify_structure(MDecompReport& rep, const Analysis& a) {
  rep.max_trace_residual = std::max(membership_residual(a.m_basis, a.sigma_trace),
                                    membership_residual(a.m_basis, a.v_trace));
  rep.pass_traces_in_m = rep.max_trace_residual < kMembershipTol;
  rep.pass_strain_subspace = contained_in(rep, a.sigma_vol, a.strain, "strain inclusion");
  rep.pass_divergence_subspace = contained_in(rep, a.v_vol, a.div, "divergence inclusion");
  rep.pass_index_zero = rep.i_m == 0;

  const double trace_floor = kStructuralZero * std::max(1.0, max_column_norm(a.sigma_trace));
  const Eigen::MatrixXd qs = orthonormal_range(
      drop_structural_zeros(a.sigma_trace * a.div_kernel, trace_floor));
  const Eigen::MatrixXd qr = orthonormal_range(a.rigid_trace);
  rep.cross_gram_norm = spectral_norm(qs.transpose() * qr);
  rep.pass_kernel_sum = rep.dim_gamma_sigma_s + rep.dim_gamma_v_rm == rep.dim_m &&
                        rep.cross_gram_norm < kCrossGramTol;
  rep.structure_checked = true;
}

void certify_fill(MDecompReport& rep, const ElementSpaces& base, const Analysis& a,
                  const OrderedKernels& ok, const std::vector<StressC2>& fill, FillKind kind,
                  const std::vector<int>* edge_counts) {
  MDecompReport::FillCheck& fc = kind == FillKind::TraceFill ? rep.fill_m : rep.fill_v;
  fc.checked = true;
  fc.kind = kind == FillKind::TraceFill ? "trace-fill" : "divergence-fill";
  fc.dim = static_cast<int>(fill.size());

  const Eigen::MatrixXd fill_trace = a.sampler.stress_traces(fill);
  const Eigen::MatrixXd fill_vol = volume_samples(fill, a.rule);
  const Eigen::MatrixXd fill_div = divergence_samples(fill, a.rule);

  const double tres = membership_residual(a.m_basis, fill_trace);
  rep.max_trace_residual = std::max(rep.max_trace_residual, tres);
  fc.pass_trace = tres < kMembershipTol;

  if (kind == FillKind::TraceFill) {
    double worst_div = 0;
    for (int j = 0; j < fill_div.cols(); ++j) {
      worst_div = std::max(worst_div, fill_div.col(j).norm() /
                                          std::max(1.0, fill_vol.col(j).norm()));
    }
    fc.pass_divergence = worst_div < kDivFreeTol;

    // The three trace families (divergence kernel, rigid motions, fill) must
    // be jointly independent; with dim == deficit that makes them span M.
    const double trace_floor = kStructuralZero * std::max(1.0, max_column_norm(a.sigma_trace));
    const Eigen::MatrixXd kimg =
        drop_structural_zeros(a.sigma_trace * a.div_kernel, trace_floor);
    const int r_fill = rank_tracked(rep, fill_trace, "fill boundary trace");
    const int r_joint = rank_tracked(rep, hcat(hcat(kimg, a.rigid_trace), fill_trace),
                                     "kernel/rigid/fill joint boundary trace");
    fc.pass_independent = r_joint == rep.dim_gamma_sigma_s + rep.dim_gamma_v_rm + r_fill;
    const int r_vol = rank_tracked(rep, fill_vol, "fill volume rank");
    fc.pass_dimension = fc.dim == rep.i_m && r_fill == rep.i_m && r_vol == rep.i_m;

    if (edge_counts) {
      const int ne = base.shape.ne();
      if (static_cast<int>(edge_counts->size()) != ne) {
        throw UsageError("per-edge fill counts need one entry per edge");
      }
      if (std::accumulate(edge_counts->begin(), edge_counts->end(), 0) != fc.dim) {
        throw UsageError("per-edge fill counts do not sum to the fill size");
      }
      fc.per_edge_checked = true;
      bool all_pass = true;
      const double fill_scale = max_column_norm(fill_trace);
      int offset = 0;
      for (int e = 0; e < ne; ++e) {
        const int cnt = (*edge_counts)[static_cast<std::size_t>(e)];
        if (cnt == 0) continue;
        const Eigen::MatrixXd block = fill_trace.middleCols(offset, cnt);
        offset += cnt;

        // Members booked on edge e must be structurally zero on every earlier
        // edge...
        double worst_earlier = 0;
        for (int j = 0; j < cnt; ++j) {
          const double earlier = block.col(j).head(a.sampler.edge_row_begin(e)).norm();
          worst_earlier = std::max(
              worst_earlier, earlier / std::max(block.col(j).norm(), 1e-14 * fill_scale));
        }
        const bool annihilated = worst_earlier < kMembershipTol;

        // ...and on edge e itself complement the kernel image (plus the rigid
        // traces on the closing edge).
        const int rb = a.sampler.edge_row_begin(e);
        const int rn = a.sampler.edge_rows();
        const Eigen::MatrixXd basis_block = a.sigma_trace.middleRows(rb, rn);
        const double floor = kStructuralZero * std::max(1.0, max_column_norm(basis_block));
        const Eigen::MatrixXd kimg_e = drop_structural_zeros(
            basis_block * ok.levels[static_cast<std::size_t>(e)], floor);
        Eigen::MatrixXd joint = hcat(kimg_e, block.middleRows(rb, rn));
        int expected = ok.gamma_ranks[static_cast<std::size_t>(e)] + cnt;
        if (e == ne - 1) {
          const Eigen::MatrixXd rigid_e = a.rigid_trace.middleRows(rb, rn);
          joint = hcat(joint, rigid_e);
          expected += sample_rank(rigid_e, kRankTol, nullptr, "rigid trace on closing edge");
        }
        const int r_edge = rank_tracked(rep, joint,
                                        "per-edge fill complement on edge " + std::to_string(e));
        const bool complement = r_edge == expected;
        if (!(annihilated && complement)) {
          all_pass = false;
          rep.notes.push_back("fill block on edge " + std::to_string(e) +
                              (annihilated ? "" : " leaks onto earlier edges") +
                              (complement ? "" : " does not complement the kernel image"));
        }
      }
      fc.pass_per_edge = all_pass;
    }
  } else {
    fc.pass_divergence = contained_in(rep, a.v_vol, fill_div, "fill divergence inclusion");
    RankCertificate cert;
    const int overlap =
        intersection_dim(a.div, fill_div, kRankTol, &cert, "divergence image vs fill");
    rep.certificates.push_back(cert);
    fc.pass_independent = overlap == 0;
    const int r_div = rank_tracked(rep, fill_div, "fill divergence rank");
    const int r_vol = rank_tracked(rep, fill_vol, "fill volume rank");
    fc.pass_dimension = fc.dim == rep.i_s && r_div == rep.i_s && r_vol == fc.dim;
  }
}

}  // namespace

MDecompReport compute_indices(const ElementSpaces& spaces) {
  MDecompReport rep = base_report(spaces);
  const Analysis a = analyze_spaces(spaces);
  fill_indices(rep, spaces, a);
  return rep;
}

MDecompReport verify_mdecomposition(const ElementSpaces& spaces) {
  MDecompReport rep = base_report(spaces);
  const Analysis a = analyze_spaces(spaces);
  fill_indices(rep, spaces, a);
  verify_structure(rep, a);
  return rep;
}

MDecompReport verify_fill_properties(const std::vector<StressC2>& fill, const ElementSpaces& base,
                                     FillKind kind, const std::vector<int>* edge_counts) {
  MDecompReport rep = base_report(base);
  const Analysis a = analyze_spaces(base);
  const OrderedKernels ok = fill_indices(rep, base, a);
  verify_structure(rep, a);
  certify_fill(rep, base, a, ok, fill, kind, edge_counts);
  return rep;
}

OrderedKernels ordered_kernels(const ElementSpaces& base) {
  const Analysis a = analyze_spaces(base);
  return ordered_kernels_impl(base, a);
}

namespace {

// Canonical test subspaces: strains of the displacement space plus the
// zero-divergence zero-trace stress bubbles on one side, the divergence image
// on the other. Coefficient bases relative to the given element bases.
struct Canonical {
  Analysis a;
  Eigen::MatrixXd strain_basis;
  Eigen::MatrixXd sbb_basis;
  Eigen::MatrixXd sigma_tilde;
  Eigen::MatrixXd v_tilde;
};

Eigen::MatrixXd column_space_basis(const Eigen::MatrixXd& x, double tol = 1e-10) {
  if (x.cols() == 0) return Eigen::MatrixXd(x.rows(), 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cut = sv.size() > 0 ? tol * sv(0) : 0.0;
  int rank = 0;
  while (rank < sv.size() && sv(rank) > cut) ++rank;
  return svd.matrixU().leftCols(rank);
}

Canonical canonical_spaces(const ElementSpaces& sp) {
  Canonical c{analyze_spaces(sp), {}, {}, {}, {}};

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> sqr(c.a.sigma_vol);
  const Eigen::MatrixXd x = sqr.solve(c.a.strain);
  const double strain_rel = (c.a.sigma_vol * x - c.a.strain).norm() /
                            std::max(c.a.strain.norm(), 1.0);
  if (strain_rel > kInclusionTol) {
    throw ConditioningError(
        "strain fields escape the stress space (relative residual " +
        std::to_string(strain_rel) + "); the space pair fails its decomposition check");
  }
  c.strain_basis = column_space_basis(x);

  c.sbb_basis = sample_nullspace(vstack(c.a.div, c.a.sigma_trace), kRankTol);
  c.sigma_tilde = hcat(c.strain_basis, c.sbb_basis);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> vqr(c.a.v_vol);
  const Eigen::MatrixXd y = vqr.solve(c.a.div);
  const double div_rel = (c.a.v_vol * y - c.a.div).norm() / std::max(c.a.div.norm(), 1.0);
  if (div_rel > kInclusionTol) {
    throw ConditioningError(
        "divergence fields escape the displacement space (relative residual " +
        std::to_string(div_rel) + "); the space pair fails its decomposition check");
  }
  c.v_tilde = column_space_basis(y);
  return c;
}

}  // namespace

ProjectionDiagnostic hdg_project(const StressC2& exact_sigma, const VectorC2& exact_u,
                                 const ElementSpaces& spaces, double alpha) {
  const Canonical c = canonical_spaces(spaces);
  const int ns = static_cast<int>(spaces.stress.size());
  const int nu = static_cast<int>(spaces.displacement.size());
  const int nm = spaces.shape.ne() * spaces.trace.dim();
  const int r1 = static_cast<int>(c.sigma_tilde.cols());
  const int r2 = static_cast<int>(c.v_tilde.cols());
  if (r1 + r2 + nm != ns + nu) {
    throw ConditioningError("projection system is not square (" + std::to_string(r1) + "+" +
                            std::to_string(r2) + "+" + std::to_string(nm) + " equations for " +
                            std::to_string(ns + nu) +
                            " unknowns); the space pair fails its decomposition check");
  }

  const Eigen::MatrixXd s_ex = volume_samples(std::vector<StressC2>{exact_sigma}, c.a.rule);
  const Eigen::MatrixXd u_ex = volume_samples(std::vector<VectorC2>{exact_u}, c.a.rule);
  const Eigen::MatrixXd bnd =
      c.a.sampler.build(1, [&](int, int e, double, const Vec2& p) -> Vec2 {
        return exact_sigma.traction(p, spaces.shape.normals[static_cast<std::size_t>(e)]) -
               alpha * exact_u.value(p);
      });

  const int n = ns + nu;
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs(n);
  sys.block(0, 0, r1, ns) = c.sigma_tilde.transpose() * (c.a.sigma_vol.transpose() * c.a.sigma_vol);
  rhs.head(r1) = c.sigma_tilde.transpose() * (c.a.sigma_vol.transpose() * s_ex.col(0));
  sys.block(r1, ns, r2, nu) = c.v_tilde.transpose() * (c.a.v_vol.transpose() * c.a.v_vol);
  rhs.segment(r1, r2) = c.v_tilde.transpose() * (c.a.v_vol.transpose() * u_ex.col(0));
  sys.block(r1 + r2, 0, nm, ns) = c.a.m_basis.transpose() * c.a.sigma_trace;
  sys.block(r1 + r2, ns, nm, nu) = -alpha * (c.a.m_basis.transpose() * c.a.v_trace);
  rhs.tail(nm) = c.a.m_basis.transpose() * bnd.col(0);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> solver(sys);
  if (!solver.isInvertible()) {
    throw ConditioningError(
        "singular local projection system; the space pair fails its decomposition check");
  }
  const Eigen::VectorXd z = solver.solve(rhs);

  ProjectionDiagnostic diag;
  diag.sigma_coeffs = z.head(ns);
  diag.u_coeffs = z.tail(nu);
  const double data_scale =
      std::max({s_ex.col(0).norm(), u_ex.col(0).norm(), bnd.col(0).norm(), 1e-300});
  diag.residual_sigma =
      (sys.block(0, 0, r1, ns) * diag.sigma_coeffs - rhs.head(r1)).norm() / data_scale;
  diag.residual_u =
      (sys.block(r1, ns, r2, nu) * diag.u_coeffs - rhs.segment(r1, r2)).norm() / data_scale;
  diag.residual_trace = (sys.block(r1 + r2, 0, nm, n) * z - rhs.tail(nm)).norm() / data_scale;
  diag.sigma_tilde = c.sigma_tilde;
  diag.v_tilde = c.v_tilde;
  diag.dim_sigma_sbb = static_cast<int>(c.sbb_basis.cols());
  if (c.sbb_basis.cols() > 0) {
    diag.sbb_divergence_norm = max_column_norm(c.a.div * c.sbb_basis);
    diag.sbb_trace_norm = max_column_norm(c.a.sigma_trace * c.sbb_basis);
  }
  return diag;
}

namespace {

// Extreme Rayleigh quotients |field|_t^2 / |field|_g^2 over the span of the
// coefficient basis, from the generalized eigenproblem of the restricted
// Gram pair.
std::pair<double, double> rayleigh_extremes(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& g,
                                            const Eigen::MatrixXd& t) {
  const Eigen::MatrixXd gr = basis.transpose() * g * basis;
  const Eigen::MatrixXd tr = basis.transpose() * t * basis;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(tr, gr);
  if (es.info() != Eigen::Success) {
    throw ConditioningError("generalized eigensolve for a stability constant failed");
  }
  const Eigen::VectorXd& ev = es.eigenvalues();
  return {ev(0), ev(ev.size() - 1)};
}

}  // namespace

StabilityConstants stability_constants(const ElementSpaces& spaces) {
  const Canonical c = canonical_spaces(spaces);
  StabilityConstants sc;
  const double h = spaces.shape.diameter();
  const double inf = std::numeric_limits<double>::infinity();

  const Eigen::MatrixXd gs = c.a.sigma_vol.transpose() * c.a.sigma_vol;
  const Eigen::MatrixXd ts = c.a.sigma_trace.transpose() * c.a.sigma_trace;
  const Eigen::MatrixXd gv = c.a.v_vol.transpose() * c.a.v_vol;
  const Eigen::MatrixXd tv = c.a.v_trace.transpose() * c.a.v_trace;

  const Eigen::MatrixXd sigma_perp = sample_nullspace(c.sigma_tilde.transpose() * gs, kRankTol);
  const Eigen::MatrixXd v_perp = sample_nullspace(c.v_tilde.transpose() * gv, kRankTol);
  sc.dim_sigma_perp = static_cast<int>(sigma_perp.cols());
  sc.dim_v_perp = static_cast<int>(v_perp.cols());

  if (sc.dim_sigma_perp == 0) {
    sc.notes.push_back("stress complement is trivial; its constant is reported as 0");
  } else {
    const auto [mn, mx] = rayleigh_extremes(sigma_perp, gs, ts);
    if (mn <= kEigenFloor * std::max(1.0, mx)) {
      sc.c_sigma_perp = inf;
      sc.notes.push_back(
          "a stress-complement member has numerically zero boundary trace; "
          "the decomposition fails and the constant is infinite");
    } else {
      sc.c_sigma_perp = 1.0 / std::sqrt(h * mn);
    }
  }

  if (sc.dim_v_perp == 0) {
    sc.notes.push_back("displacement complement is trivial; its constant is reported as 0");
  } else {
    const auto [mn, mx] = rayleigh_extremes(v_perp, gv, tv);
    if (mn <= kEigenFloor * std::max(1.0, mx)) {
      sc.c_v_perp = inf;
      sc.notes.push_back(
          "a displacement-complement member has numerically zero boundary trace; "
          "the decomposition fails and the constant is infinite");
    } else {
      sc.c_v_perp = 1.0 / std::sqrt(h * mn);
    }
  }

  if (c.strain_basis.cols() > 0) {
    const auto [mn, mx] = rayleigh_extremes(c.strain_basis, gs, ts);
    (void)mn;
    sc.c_strain = std::sqrt(h * mx);
  } else {
    sc.notes.push_back("strain image is trivial; its constant is reported as 0");
  }

  if (c.v_tilde.cols() > 0) {
    const auto [mn, mx] = rayleigh_extremes(c.v_tilde, gv, tv);
    (void)mn;
    sc.c_div = std::sqrt(h * mx);
  } else {
    sc.notes.push_back("divergence image is trivial; its constant is reported as 0");
  }

  if (sc.dim_v_perp > 0) {
    sc.a_v_perp = 1.0;
    sc.alpha_norm = 1.0;
  } else {
    sc.a_v_perp = inf;
    sc.alpha_norm = 0.0;
    sc.notes.push_back(
        "divergence image fills the displacement space; no stabilization is needed "
        "(weight 0, sentinel infinity for its constant)");
  }
  return sc;
}

MDecompReport mdecomp_report(const ReferencePolygon& shape, int k, SpaceVariant variant) {
  const ElementSpaces enriched = enriched_stress_basis(shape, k, variant);
  MDecompReport rep = verify_mdecomposition(enriched);
  if (variant == SpaceVariant::Hdg) return rep;

  const bool tensor = variant == SpaceVariant::QRational || variant == SpaceVariant::QExponential;
  const ElementSpaces base = polynomial_element_spaces(shape, k, tensor);

  const auto merge = [&rep](const MDecompReport& sub) {
    for (RankCertificate cert : sub.certificates) {
      cert.label = "fill base: " + cert.label;
      rep.certificates.push_back(cert);
    }
    for (const std::string& n : sub.notes) rep.notes.push_back("fill base: " + n);
  };

  {
    std::vector<int> counts;
    const std::vector<int>* cp = nullptr;
    if (variant == SpaceVariant::HdgM) {
      counts = fill_m_edge_counts(shape, k);
      cp = &counts;
    }
    const MDecompReport sub =
        verify_fill_properties(fill_m_fields(shape, k, variant), base, FillKind::TraceFill, cp);
    rep.fill_m = sub.fill_m;
    merge(sub);
  }

  if (variant != SpaceVariant::HdgM || k >= 2) {
    const MDecompReport sub =
        verify_fill_properties(fill_v_fields(shape, k, variant), base, FillKind::DivergenceFill);
    rep.fill_v = sub.fill_v;
    merge(sub);
    if (variant == SpaceVariant::HdgM) {
      rep.notes.push_back(
          "divergence fill uses mirrored monomial families (x^{k+1-a} y^a in the xx slot, "
          "x^a y^{k+1-a} in the yy slot); the unmirrored symmetric form is "
          "divergence-rank-deficient and would not close the deficit");
    }
  } else {
    rep.notes.push_back("divergence fill is defined for k >= 2 on polygons; skipped for k = 1");
  }
  return rep;
}

}  // namespace ehdg
