#include "ehdg/solver.hpp"

#include <chrono>
#include <cmath>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Sparse>

#include "ehdg/basis.hpp"

namespace ehdg {

namespace {

constexpr double kPostprocessResidualTol = 1e-11;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd map_weights(const std::vector<double>& w, double scale) {
  return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())) * scale;
}

}  // namespace

SolveMode parse_solve_mode(const std::string& name) {
  if (name == "auto") return SolveMode::Auto;
  if (name == "dense") return SolveMode::Dense;
  if (name == "cg") return SolveMode::Cg;
  throw UsageError("unknown solver mode '" + name + "' (expected auto, dense, or cg)");
}

Eigen::VectorXd SolutionFields::element_trace(const TriMesh& mesh, int t) const {
  const int nm = 2 * (k + 1);
  Eigen::VectorXd lam(3 * nm);
  for (int le = 0; le < 3; ++le) {
    const int e = mesh.element_edges[static_cast<std::size_t>(t)][static_cast<std::size_t>(le)];
    lam.segment(le * nm, nm) = trace.segment(e * nm, nm);
  }
  return lam;
}

Eigen::VectorXd dirichlet_trace(const TriMesh& mesh, const std::function<Vec2(const Vec2&)>& g,
                                int k, int quad_degree) {
  const int nm = 2 * (k + 1);
  const EdgeBasis basis{k};
  const SegmentRule rule = edge_quadrature(quad_degree > 0 ? quad_degree : 2 * k + 8);
  Eigen::VectorXd all = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.n_edges()) * nm);
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (!mesh.boundary[static_cast<std::size_t>(e)]) continue;
    const Vec2 lo = mesh.vertices[static_cast<std::size_t>(mesh.edges[static_cast<std::size_t>(e)][0])];
    const Vec2 hi = mesh.vertices[static_cast<std::size_t>(mesh.edges[static_cast<std::size_t>(e)][1])];
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      const Vec2 gv = g(lo + s * (hi - lo));
      for (int m = 0; m < nm; ++m) {
        all(e * nm + m) += rule.weights[q] * gv.dot(basis.eval(m, s));
      }
    }
  }
  return all;
}

Eigen::VectorXd pcg_solve(const Eigen::SparseMatrix<double>& m, const Eigen::VectorXd& rhs,
                          double tol, int max_iter, int* iterations, double* final_residual,
                          std::vector<double>* history) {
  const double bnorm = rhs.norm();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(rhs.size());
  if (iterations) *iterations = 0;
  if (final_residual) *final_residual = 0;
  if (bnorm == 0) return x;

  Eigen::VectorXd dinv(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double d = m.coeff(i, i);
    if (!(d > 0)) {
      throw SolverError("trace matrix has a nonpositive diagonal entry at row " +
                        std::to_string(i));
    }
    dinv(i) = 1.0 / d;
  }

  std::vector<double> local_history;
  std::vector<double>& hist = history ? *history : local_history;
  Eigen::VectorXd r = rhs;
  Eigen::VectorXd z = dinv.asDiagonal() * r;
  Eigen::VectorXd p = z;
  double rho = r.dot(z);
  double rel = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd q = m * p;
    const double pq = p.dot(q);
    if (!(pq > 0)) {
      throw SolverError("conjugate gradients broke down (p^T A p = " + std::to_string(pq) +
                        "); the trace system is not positive definite",
                        hist);
    }
    const double step = rho / pq;
    x += step * p;
    r -= step * q;
    rel = r.norm() / bnorm;
    hist.push_back(rel);
    if (iterations) *iterations = it;
    if (rel <= tol) {
      if (final_residual) *final_residual = rel;
      return x;
    }
    z = dinv.asDiagonal() * r;
    const double rho_next = r.dot(z);
    p = z + (rho_next / rho) * p;
    rho = rho_next;
  }
  throw SolverError("conjugate gradients did not reach " + std::to_string(tol) + " in " +
                        std::to_string(max_iter) + " iterations (last relative residual " +
                        std::to_string(rel) + ")",
                    hist);
}

SolutionFields assemble_and_solve(const TriMesh& mesh, const Problem& problem, int k,
                                  SpaceVariant variant, const SolverConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const ReferenceTables tables = build_reference_tables(k, variant, cfg.quad_degree);
  const int nm = tables.spaces.trace.dim();
  const int n_hat = 3 * nm;
  const Eigen::Index n_total = static_cast<Eigen::Index>(mesh.n_edges()) * nm;

  SolutionFields fields;
  fields.k = k;
  fields.variant = variant;
  fields.alpha = cfg.alpha;
  fields.trace = dirichlet_trace(mesh, problem.g, k, tables.quad_degree);
  fields.stats.n_trace_dofs = static_cast<int>(n_total);

  // Global numbering: edge e owns rows [e*nm, (e+1)*nm); boundary edges are
  // eliminated against the projected datum, the rest are compacted.
  std::vector<Eigen::Index> free_of(static_cast<std::size_t>(n_total), -1);
  Eigen::Index n_free = 0;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (mesh.boundary[static_cast<std::size_t>(e)]) continue;
    for (int m = 0; m < nm; ++m) free_of[static_cast<std::size_t>(e * nm + m)] = n_free++;
  }
  fields.stats.n_free = static_cast<int>(n_free);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.n_elements()) *
                   static_cast<std::size_t>(n_hat) * static_cast<std::size_t>(n_hat));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_free);

  std::vector<Eigen::Index> global(static_cast<std::size_t>(n_hat));
  for (int t = 0; t < mesh.n_elements(); ++t) {
    LocalSystem local = assemble_local(element_geometry(mesh, t), tables, problem.material,
                                       problem.f, cfg.alpha, cfg.check_quadrature);
    condense(local, "element " + std::to_string(t));
    for (int le = 0; le < 3; ++le) {
      const int e = mesh.element_edges[static_cast<std::size_t>(t)][static_cast<std::size_t>(le)];
      for (int m = 0; m < nm; ++m) {
        global[static_cast<std::size_t>(le * nm + m)] = static_cast<Eigen::Index>(e) * nm + m;
      }
    }
    for (int i = 0; i < n_hat; ++i) {
      const Eigen::Index gi = free_of[static_cast<std::size_t>(global[static_cast<std::size_t>(i)])];
      if (gi < 0) continue;
      b(gi) += local.reduced(i);
      for (int j = 0; j < n_hat; ++j) {
        const Eigen::Index gj_all = global[static_cast<std::size_t>(j)];
        const Eigen::Index gj = free_of[static_cast<std::size_t>(gj_all)];
        if (gj >= 0) {
          triplets.emplace_back(gi, gj, local.schur(i, j));
        } else {
          b(gi) -= local.schur(i, j) * fields.trace(gj_all);
        }
      }
    }
  }
  Eigen::SparseMatrix<double> mat(n_free, n_free);
  mat.setFromTriplets(triplets.begin(), triplets.end());
  triplets.clear();
  triplets.shrink_to_fit();
  fields.stats.assemble_seconds = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  const bool dense = cfg.mode == SolveMode::Dense ||
                     (cfg.mode == SolveMode::Auto && n_free < cfg.dense_cutoff);
  Eigen::VectorXd x;
  if (n_free == 0) {
    x = Eigen::VectorXd::Zero(0);
    fields.stats.method = "none";
  } else if (dense) {
    const Eigen::MatrixXd full(mat);
    Eigen::LLT<Eigen::MatrixXd> llt(full);
    if (llt.info() != Eigen::Success) {
      throw ConditioningError("global trace system is not positive definite");
    }
    x = llt.solve(b);
    const double bnorm = std::max(b.norm(), 1e-300);
    fields.stats.rel_residual = (mat * x - b).norm() / bnorm;
    fields.stats.method = "dense-cholesky";
  } else {
    const int cap = static_cast<int>(std::ceil(
        cfg.max_iter_factor * std::sqrt(static_cast<double>(n_free))));
    x = pcg_solve(mat, b, cfg.tol, cap, &fields.stats.iterations, &fields.stats.rel_residual);
    fields.stats.method = "jacobi-pcg";
  }
  fields.stats.solve_seconds = seconds_since(t1);

  for (Eigen::Index i = 0; i < n_total; ++i) {
    const Eigen::Index fi = free_of[static_cast<std::size_t>(i)];
    if (fi >= 0) fields.trace(i) = x(fi);
  }

  // Recovery pass: the local systems are recomputed (identical arithmetic)
  // instead of cached, which keeps peak memory flat on fine meshes.
  fields.sigma.resize(static_cast<std::size_t>(mesh.n_elements()));
  fields.u.resize(static_cast<std::size_t>(mesh.n_elements()));
  for (int t = 0; t < mesh.n_elements(); ++t) {
    LocalSystem local = assemble_local(element_geometry(mesh, t), tables, problem.material,
                                       problem.f, cfg.alpha, false);
    condense(local, "element " + std::to_string(t));
    auto [s, w] = recover_interior(local, fields.element_trace(mesh, t));
    fields.sigma[static_cast<std::size_t>(t)] = std::move(s);
    fields.u[static_cast<std::size_t>(t)] = std::move(w);
  }
  return fields;
}

std::vector<VectorC2> postprocess_basis(int k) {
  const ReferencePolygon ref = make_triangle_ref();
  return polynomial_bases(k + 1, ref.center, ref.diameter()).vec;
}

void postprocess_displacement(SolutionFields& fields, const TriMesh& mesh, int k) {
  if (k < 1) throw UsageError("postprocessing requires k >= 1");
  const int nm = 2 * (k + 1);
  const ReferencePolygon ref = make_triangle_ref();
  const std::vector<VectorC2> star = postprocess_basis(k);
  const std::vector<VectorC2> disp =
      polynomial_element_spaces(ref, k, false).displacement;
  const int n = static_cast<int>(star.size());
  const int nu = static_cast<int>(disp.size());

  const QuadratureRule vol = triangle_quadrature(2 * k + 8);
  const int np = static_cast<int>(vol.points.size());
  // Reference jets of the star basis: values, gradients, Hessian components,
  // one matrix set per displacement component.
  Eigen::MatrixXd val[2], gx[2], gy[2], hxx[2], hxy[2], hyy[2];
  for (int c = 0; c < 2; ++c) {
    val[c].resize(np, n); gx[c].resize(np, n); gy[c].resize(np, n);
    hxx[c].resize(np, n); hxy[c].resize(np, n); hyy[c].resize(np, n);
  }
  for (int j = 0; j < n; ++j) {
    for (int q = 0; q < np; ++q) {
      const Vec2& p = vol.points[static_cast<std::size_t>(q)];
      const Jet2 jets[2] = {star[static_cast<std::size_t>(j)].x.eval(p),
                            star[static_cast<std::size_t>(j)].y.eval(p)};
      for (int c = 0; c < 2; ++c) {
        val[c](q, j) = jets[c].v;
        gx[c](q, j) = jets[c].dx;
        gy[c](q, j) = jets[c].dy;
        hxx[c](q, j) = jets[c].dxx;
        hxy[c](q, j) = jets[c].dxy;
        hyy[c](q, j) = jets[c].dyy;
      }
    }
  }
  Eigen::MatrixXd uval[2];
  uval[0].resize(np, nu);
  uval[1].resize(np, nu);
  for (int j = 0; j < nu; ++j) {
    for (int q = 0; q < np; ++q) {
      const Vec2 v = disp[static_cast<std::size_t>(j)].value(vol.points[static_cast<std::size_t>(q)]);
      uval[0](q, j) = v.x();
      uval[1](q, j) = v.y();
    }
  }

  const SegmentRule erule = edge_quadrature(2 * k + 8);
  const int ne = static_cast<int>(erule.points.size());
  const EdgeBasis trace_basis{k};
  Eigen::MatrixXd mu_x = Eigen::MatrixXd::Zero(ne, nm), mu_y = Eigen::MatrixXd::Zero(ne, nm);
  for (int m = 0; m < nm; ++m) {
    for (int q = 0; q < ne; ++q) {
      const Vec2 v = trace_basis.eval(m, erule.points[static_cast<std::size_t>(q)]);
      mu_x(q, m) = v.x();
      mu_y(q, m) = v.y();
    }
  }
  const std::array<Vec2, 3> rv = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  Eigen::MatrixXd egx[3][2][2], egy[3][2][2];  // [edge][flip][component]
  for (int le = 0; le < 3; ++le) {
    for (int fl = 0; fl < 2; ++fl) {
      Vec2 a = rv[static_cast<std::size_t>(le)], bb = rv[static_cast<std::size_t>((le + 1) % 3)];
      if (fl) std::swap(a, bb);
      for (int c = 0; c < 2; ++c) {
        egx[le][fl][c].resize(ne, n);
        egy[le][fl][c].resize(ne, n);
      }
      for (int j = 0; j < n; ++j) {
        for (int q = 0; q < ne; ++q) {
          const Vec2 p = a + erule.points[static_cast<std::size_t>(q)] * (bb - a);
          const Jet2 jets[2] = {star[static_cast<std::size_t>(j)].x.eval(p),
                                star[static_cast<std::size_t>(j)].y.eval(p)};
          for (int c = 0; c < 2; ++c) {
            egx[le][fl][c](q, j) = jets[c].dx;
            egy[le][fl][c](q, j) = jets[c].dy;
          }
        }
      }
    }
  }

  fields.ustar.assign(static_cast<std::size_t>(mesh.n_elements()), Eigen::VectorXd());
  const Eigen::VectorXd we0 = map_weights(erule.weights, 1.0);
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const ElementGeometry elem = element_geometry(mesh, t);
    const Eigen::VectorXd wv = map_weights(vol.weights, elem.det);
    const Mat2 qm = elem.inv * elem.inv.transpose();
    const double q11 = qm(0, 0), q12 = qm(0, 1), q22 = qm(1, 1);

    Eigen::MatrixXd lmat = Eigen::MatrixXd::Zero(n, n);
    for (int c = 0; c < 2; ++c) {
      lmat += q11 * gx[c].transpose() * (wv.asDiagonal() * gx[c]) +
              q12 * (gx[c].transpose() * (wv.asDiagonal() * gy[c]) +
                     gy[c].transpose() * (wv.asDiagonal() * gx[c])) +
              q22 * gy[c].transpose() * (wv.asDiagonal() * gy[c]);
    }

    // -(u_h, laplace w)_K with the mapped laplacian q11 hxx + 2 q12 hxy + q22 hyy.
    const Eigen::VectorXd ucoef = fields.u[static_cast<std::size_t>(t)];
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < 2; ++c) {
      const Eigen::MatrixXd lap = q11 * hxx[c] + 2.0 * q12 * hxy[c] + q22 * hyy[c];
      const Eigen::VectorXd uh = uval[c] * ucoef;
      rhs -= lap.transpose() * (wv.asDiagonal() * uh);
    }
    const Eigen::VectorXd lam = fields.element_trace(mesh, t);
    for (int le = 0; le < 3; ++le) {
      const int fl = elem.flip[static_cast<std::size_t>(le)] ? 1 : 0;
      const Vec2 nref = elem.inv * elem.normal[static_cast<std::size_t>(le)];
      const Eigen::VectorXd we = we0 * elem.edge_len[static_cast<std::size_t>(le)];
      const Eigen::VectorXd hat_x = mu_x * lam.segment(le * nm, nm);
      const Eigen::VectorXd hat_y = mu_y * lam.segment(le * nm, nm);
      rhs += (egx[le][fl][0] * nref.x() + egy[le][fl][0] * nref.y()).transpose() *
             (we.asDiagonal() * hat_x);
      rhs += (egx[le][fl][1] * nref.x() + egy[le][fl][1] * nref.y()).transpose() *
             (we.asDiagonal() * hat_y);
    }

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 2, n + 2);
    kkt.topLeftCorner(n, n) = lmat;
    Eigen::VectorXd full_rhs(n + 2);
    full_rhs.head(n) = rhs;
    for (int c = 0; c < 2; ++c) {
      const Eigen::VectorXd mean_row = val[c].transpose() * wv;
      kkt.block(n + c, 0, 1, n) = mean_row.transpose();
      kkt.block(0, n + c, n, 1) = mean_row;
      full_rhs(n + c) = (uval[c] * ucoef).dot(wv);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) {
      throw ConditioningError("postprocessing system is singular on element " + std::to_string(t));
    }
    const Eigen::VectorXd sol = lu.solve(full_rhs);
    const double res = (kkt * sol - full_rhs).norm() / std::max(full_rhs.norm(), 1.0);
    if (res > kPostprocessResidualTol) {
      throw ConditioningError("postprocessing residual " + std::to_string(res) +
                              " on element " + std::to_string(t));
    }
    fields.ustar[static_cast<std::size_t>(t)] = sol.head(n);
  }
}

double conservativity_residual(const SolutionFields& fields, const TriMesh& mesh,
                               const Problem& problem, const SolverConfig& cfg) {
  const ReferenceTables tables = build_reference_tables(fields.k, fields.variant, cfg.quad_degree);
  const int nm = tables.spaces.trace.dim();
  Eigen::VectorXd jump = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.n_edges()) * nm);
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const LocalSystem local = assemble_local(element_geometry(mesh, t), tables, problem.material,
                                             nullptr, fields.alpha, false);
    const Eigen::VectorXd lam = fields.element_trace(mesh, t);
    const Eigen::VectorXd flux = local.C.transpose() * fields.sigma[static_cast<std::size_t>(t)] -
                                 local.R.transpose() * fields.u[static_cast<std::size_t>(t)] +
                                 local.M * lam;
    for (int le = 0; le < 3; ++le) {
      const int e = mesh.element_edges[static_cast<std::size_t>(t)][static_cast<std::size_t>(le)];
      jump.segment(static_cast<Eigen::Index>(e) * nm, nm) += flux.segment(le * nm, nm);
    }
  }
  double worst = 0;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (mesh.boundary[static_cast<std::size_t>(e)]) continue;
    worst = std::max(worst,
                     jump.segment(static_cast<Eigen::Index>(e) * nm, nm).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace ehdg
