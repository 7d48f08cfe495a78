#include "ehdg/sample_space.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "ehdg/types.hpp"

namespace ehdg {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

}  // namespace

Eigen::MatrixXd volume_samples(const std::vector<StressC2>& fields, const QuadratureRule& rule) {
  const int np = static_cast<int>(rule.points.size());
  Eigen::MatrixXd m(3 * np, static_cast<int>(fields.size()));
  for (int j = 0; j < m.cols(); ++j) {
    for (int q = 0; q < np; ++q) {
      const double s = std::sqrt(rule.weights[q]);
      const SymTensor t = fields[j].value(rule.points[q]);
      m(3 * q + 0, j) = s * t.xx;
      m(3 * q + 1, j) = s * t.yy;
      m(3 * q + 2, j) = s * kSqrt2 * t.xy;
    }
  }
  return m;
}

Eigen::MatrixXd volume_samples(const std::vector<VectorC2>& fields, const QuadratureRule& rule) {
  const int np = static_cast<int>(rule.points.size());
  Eigen::MatrixXd m(2 * np, static_cast<int>(fields.size()));
  for (int j = 0; j < m.cols(); ++j) {
    for (int q = 0; q < np; ++q) {
      const double s = std::sqrt(rule.weights[q]);
      const Vec2 v = fields[j].value(rule.points[q]);
      m(2 * q + 0, j) = s * v.x();
      m(2 * q + 1, j) = s * v.y();
    }
  }
  return m;
}

Eigen::MatrixXd strain_samples(const std::vector<VectorC2>& fields, const QuadratureRule& rule) {
  const int np = static_cast<int>(rule.points.size());
  Eigen::MatrixXd m(3 * np, static_cast<int>(fields.size()));
  for (int j = 0; j < m.cols(); ++j) {
    for (int q = 0; q < np; ++q) {
      const double s = std::sqrt(rule.weights[q]);
      const SymTensor t = fields[j].strain(rule.points[q]);
      m(3 * q + 0, j) = s * t.xx;
      m(3 * q + 1, j) = s * t.yy;
      m(3 * q + 2, j) = s * kSqrt2 * t.xy;
    }
  }
  return m;
}

Eigen::MatrixXd divergence_samples(const std::vector<StressC2>& fields,
                                   const QuadratureRule& rule) {
  const int np = static_cast<int>(rule.points.size());
  Eigen::MatrixXd m(2 * np, static_cast<int>(fields.size()));
  for (int j = 0; j < m.cols(); ++j) {
    for (int q = 0; q < np; ++q) {
      const double s = std::sqrt(rule.weights[q]);
      const Vec2 v = fields[j].div(rule.points[q]);
      m(2 * q + 0, j) = s * v.x();
      m(2 * q + 1, j) = s * v.y();
    }
  }
  return m;
}

namespace {

template <typename TraceFn>
Eigen::MatrixXd stacked_edge_samples(int n_fields, const ReferencePolygon& poly, int degree,
                                     TraceFn&& trace) {
  std::vector<QuadratureRule> rules;
  int rows = 0;
  for (int e = 0; e < poly.ne(); ++e) {
    rules.push_back(edge_rule(poly, e, degree));
    rows += 2 * static_cast<int>(rules.back().points.size());
  }
  Eigen::MatrixXd m(rows, n_fields);
  for (int j = 0; j < n_fields; ++j) {
    int r = 0;
    for (int e = 0; e < poly.ne(); ++e) {
      for (std::size_t q = 0; q < rules[e].points.size(); ++q) {
        const double s = std::sqrt(rules[e].weights[q]);
        const Vec2 v = trace(j, e, rules[e].points[q]);
        m(r++, j) = s * v.x();
        m(r++, j) = s * v.y();
      }
    }
  }
  return m;
}

}  // namespace

Eigen::MatrixXd trace_samples(const std::vector<StressC2>& fields, const ReferencePolygon& poly,
                              int degree) {
  return stacked_edge_samples(static_cast<int>(fields.size()), poly, degree,
                              [&](int j, int e, const Vec2& p) {
                                return fields[j].traction(p, poly.normals[e]);
                              });
}

Eigen::MatrixXd trace_samples(const std::vector<VectorC2>& fields, const ReferencePolygon& poly,
                              int degree) {
  return stacked_edge_samples(static_cast<int>(fields.size()), poly, degree,
                              [&](int j, int, const Vec2& p) { return fields[j].value(p); });
}

Eigen::MatrixXd edge_trace_samples(const std::vector<StressC2>& fields,
                                   const ReferencePolygon& poly, int edge, int degree) {
  const QuadratureRule rule = edge_rule(poly, edge, degree);
  const int np = static_cast<int>(rule.points.size());
  Eigen::MatrixXd m(2 * np, static_cast<int>(fields.size()));
  for (int j = 0; j < m.cols(); ++j) {
    for (int q = 0; q < np; ++q) {
      const double s = std::sqrt(rule.weights[q]);
      const Vec2 v = fields[j].traction(rule.points[q], poly.normals[edge]);
      m(2 * q + 0, j) = s * v.x();
      m(2 * q + 1, j) = s * v.y();
    }
  }
  return m;
}

int sample_rank(const Eigen::MatrixXd& samples, double tol, RankCertificate* cert,
                const std::string& label) {
  const int n = static_cast<int>(samples.cols());
  if (n == 0) {
    if (cert) *cert = RankCertificate{label, 0, 0, 0, 0, 0};
    return 0;
  }
  Eigen::MatrixXd m = samples;
  for (int j = 0; j < n; ++j) {
    const double norm = m.col(j).norm();
    if (norm > 0) m.col(j) /= norm;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double cut = tol * smax;
  int rank = 0;
  while (rank < sv.size() && sv(rank) > cut) ++rank;

  RankCertificate c;
  c.label = label;
  c.columns = n;
  c.rank = rank;
  c.sigma_max = smax;
  c.sigma_kept = rank > 0 ? sv(rank - 1) : 0.0;
  c.sigma_dropped = rank < sv.size() ? sv(rank) : 0.0;
  if (cert) *cert = c;

  if (rank > 0 && rank < sv.size() && c.sigma_dropped > 0 &&
      c.sigma_kept < 10.0 * c.sigma_dropped) {
    throw AmbiguousRankError("rank decision not clear-cut" +
                             (label.empty() ? std::string() : " for " + label) +
                             ": sigma_kept=" + std::to_string(c.sigma_kept) +
                             " sigma_dropped=" + std::to_string(c.sigma_dropped) +
                             " (need a 10x gap at tol " + std::to_string(tol) + ")");
  }
  return rank;
}

int intersection_dim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol,
                     RankCertificate* cert, const std::string& label) {
  if (a.rows() != b.rows()) throw UsageError("intersection_dim: sample row mismatch");
  const int ra = sample_rank(a, tol, nullptr, label.empty() ? label : label + " (left)");
  const int rb = sample_rank(b, tol, nullptr, label.empty() ? label : label + " (right)");
  Eigen::MatrixXd joint(a.rows(), a.cols() + b.cols());
  joint << a, b;
  const int rj = sample_rank(joint, tol, cert, label.empty() ? label : label + " (joint)");
  return ra + rb - rj;
}

Eigen::MatrixXd sample_nullspace(const Eigen::MatrixXd& samples, double tol) {
  const int n = static_cast<int>(samples.cols());
  if (n == 0) return Eigen::MatrixXd(0, 0);
  // A numerically zero column is a kernel direction outright. It must stay
  // out of the equilibrated SVD: scaling it to unit norm would amplify
  // roundoff into a dominant direction, and un-scaling on the way out would
  // then contaminate every returned basis vector with it.
  double max_norm = 0;
  for (int j = 0; j < n; ++j) max_norm = std::max(max_norm, samples.col(j).norm());
  if (max_norm == 0) return Eigen::MatrixXd::Identity(n, n);
  const double floor = 1e-11 * max_norm;
  std::vector<int> live, zero;
  for (int j = 0; j < n; ++j) (samples.col(j).norm() <= floor ? zero : live).push_back(j);

  const int nl = static_cast<int>(live.size());
  // Column scaling keeps the tolerance meaningful; undo it on the way out so
  // the coefficients apply to the original fields.
  Eigen::MatrixXd m(samples.rows(), nl);
  Eigen::VectorXd scale(nl);
  for (int j = 0; j < nl; ++j) {
    scale(j) = samples.col(live[static_cast<std::size_t>(j)]).norm();
    m.col(j) = samples.col(live[static_cast<std::size_t>(j)]) / scale(j);
  }
  Eigen::MatrixXd live_null(nl, 0);
  if (nl > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cut = sv.size() > 0 ? tol * sv(0) : 0.0;
    int rank = 0;
    while (rank < sv.size() && sv(rank) > cut) ++rank;
    live_null = svd.matrixV().rightCols(nl - rank);
    for (int j = 0; j < nl; ++j) live_null.row(j) /= scale(j);
  }

  Eigen::MatrixXd null =
      Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(zero.size()) + live_null.cols());
  for (std::size_t j = 0; j < zero.size(); ++j) null(zero[j], static_cast<Eigen::Index>(j)) = 1.0;
  for (Eigen::Index j = 0; j < live_null.cols(); ++j) {
    for (int i = 0; i < nl; ++i) {
      null(live[static_cast<std::size_t>(i)], static_cast<Eigen::Index>(zero.size()) + j) =
          live_null(i, j);
    }
  }
  for (Eigen::Index j = 0; j < null.cols(); ++j) {
    const double norm = null.col(j).norm();
    if (norm > 0) null.col(j) /= norm;
  }
  return null;
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                              double* residual) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  const Eigen::VectorXd x = svd.solve(b);
  if (residual) *residual = (a * x - b).norm();
  return x;
}

int subspace_rank(const std::vector<StressC2>& fields, const ReferencePolygon& poly,
                  SampleForm form, int quad_degree, double tol) {
  if (form == SampleForm::Volume) {
    const QuadratureRule rule = polygon_quadrature(poly, quad_degree, 2);
    return sample_rank(volume_samples(fields, rule), tol);
  }
  return sample_rank(trace_samples(fields, poly, quad_degree), tol);
}

}  // namespace ehdg
