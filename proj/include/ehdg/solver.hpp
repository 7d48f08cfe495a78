// Global HDG solve: per-element condensation accumulated into the sparse
// symmetric trace system, Dirichlet traces eliminated symmetrically, dense
// Cholesky or Jacobi-preconditioned CG, then element-by-element field
// recovery and the degree-(k+1) displacement postprocessing.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ehdg/local_system.hpp"
#include "ehdg/mesh.hpp"
#include "ehdg/problems.hpp"

namespace ehdg {

enum class SolveMode { Auto, Dense, Cg };

SolveMode parse_solve_mode(const std::string& name);  // auto | dense | cg

struct SolverConfig {
  SolveMode mode = SolveMode::Auto;
  double tol = 1e-12;          // relative residual target for CG
  int max_iter_factor = 20;    // iteration cap = factor * sqrt(n_free)
  int quad_degree = 0;         // 0 -> 2k+8
  double alpha = 1.0;          // scalar multiple of the identity stabilization
  bool check_quadrature = true;
  int dense_cutoff = 5000;     // Auto switches to CG at this many free DOFs
};

struct SolveStats {
  int n_trace_dofs = 0;   // all edges, 2(k+1) each
  int n_free = 0;         // after Dirichlet elimination
  int iterations = 0;     // 0 for the dense path
  double rel_residual = 0;
  std::string method;     // "dense-cholesky" or "jacobi-pcg"
  double assemble_seconds = 0;
  double solve_seconds = 0;
};

struct SolutionFields {
  int k = 1;
  SpaceVariant variant = SpaceVariant::Hdg;
  double alpha = 1.0;
  std::vector<Eigen::VectorXd> sigma;  // per element, coeffs in tables.spaces.stress
  std::vector<Eigen::VectorXd> u;      // per element, coeffs in tables.spaces.displacement
  Eigen::VectorXd trace;               // per edge, 2(k+1) coeffs in the global edge parameter
  std::vector<Eigen::VectorXd> ustar;  // per element, degree k+1; empty until postprocessed
  SolveStats stats;

  Eigen::VectorXd element_trace(const TriMesh& mesh, int t) const;  // gathers the 3 edges
};

// L2(e)-projection coefficients of the boundary datum on every boundary edge
// (zeros elsewhere): the Legendre basis is orthonormal, so the coefficients
// are plain moments in the global edge parameter.
Eigen::VectorXd dirichlet_trace(const TriMesh& mesh, const std::function<Vec2(const Vec2&)>& g,
                                int k, int quad_degree);

SolutionFields assemble_and_solve(const TriMesh& mesh, const Problem& problem, int k,
                                  SpaceVariant variant, const SolverConfig& cfg = {});

// Element-local P_{k+1} reconstruction driven by (u_h, u-hat_h); the mean of
// each component is pinned to the mean of u_h through a two-row Lagrange
// block. Fills fields.ustar.
void postprocess_displacement(SolutionFields& fields, const TriMesh& mesh, int k);

// Largest interelement jump of the numerical-traction moments over interior
// edges, recomputed from the reconstructed fields (not from the solved
// algebra). Zero up to solver tolerance when the method is conservative.
double conservativity_residual(const SolutionFields& fields, const TriMesh& mesh,
                               const Problem& problem, const SolverConfig& cfg = {});

// Hand-rolled preconditioned CG recording the relative residual per
// iteration; throws SolverError with the history on stagnation past max_iter.
Eigen::VectorXd pcg_solve(const Eigen::SparseMatrix<double>& m, const Eigen::VectorXd& rhs,
                          double tol, int max_iter, int* iterations, double* final_residual,
                          std::vector<double>* history = nullptr);

// The reference-triangle P_{k+1} vector basis used for ustar coefficients
// (shared by the postprocessing solve and the error norms).
std::vector<VectorC2> postprocess_basis(int k);

}  // namespace ehdg
