// Subspace computations on spans of C2 fields, done numerically: fields are
// embedded as quadrature-weighted sample vectors (sqrt(w) times component
// values), so Euclidean operations on columns coincide with L2 operations on
// fields, and ranks/intersections become SVD problems.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ehdg/fields.hpp"
#include "ehdg/polygon.hpp"

namespace ehdg {

// One row block per quadrature point: symmetric tensors are flattened as
// (xx, yy, sqrt(2) xy) so Euclidean dot = Frobenius inner product.
Eigen::MatrixXd volume_samples(const std::vector<StressC2>& fields, const QuadratureRule& rule);
Eigen::MatrixXd volume_samples(const std::vector<VectorC2>& fields, const QuadratureRule& rule);
Eigen::MatrixXd divergence_samples(const std::vector<StressC2>& fields, const QuadratureRule& rule);
Eigen::MatrixXd strain_samples(const std::vector<VectorC2>& fields, const QuadratureRule& rule);

// Normal traces sigma.n (or plain vector traces) sampled on all edges of the
// element, stacked edge by edge.
Eigen::MatrixXd trace_samples(const std::vector<StressC2>& fields, const ReferencePolygon& poly,
                              int degree);
Eigen::MatrixXd trace_samples(const std::vector<VectorC2>& fields, const ReferencePolygon& poly,
                              int degree);
// Same, one edge only.
Eigen::MatrixXd edge_trace_samples(const std::vector<StressC2>& fields,
                                   const ReferencePolygon& poly, int edge, int degree);

struct RankCertificate {
  std::string label;
  int rank = 0;
  int columns = 0;
  double sigma_max = 0;
  double sigma_kept = 0;     // smallest singular value counted
  double sigma_dropped = 0;  // largest singular value discarded (0 if none)
};

// Columns are normalized, then singular values below tol * sigma_max count as
// zero. The decision must be clear-cut: a 10x gap between kept and dropped is
// required, otherwise AmbiguousRankError.
int sample_rank(const Eigen::MatrixXd& samples, double tol = 1e-8,
                RankCertificate* cert = nullptr, const std::string& label = {});

// dim(span(A) meet span(B)) via rank additivity.
int intersection_dim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol = 1e-8,
                     RankCertificate* cert = nullptr, const std::string& label = {});

// Coefficient basis (columns) of the nullspace of the sample matrix.
Eigen::MatrixXd sample_nullspace(const Eigen::MatrixXd& samples, double tol = 1e-8);

// Least-squares coefficients x minimizing |A x - b|, plus the residual norm.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                              double* residual = nullptr);

// Rank of a list of stress fields under the chosen sampling form.
enum class SampleForm { Volume, EdgeTrace };
int subspace_rank(const std::vector<StressC2>& fields, const ReferencePolygon& poly,
                  SampleForm form, int quad_degree, double tol = 1e-8);

}  // namespace ehdg
