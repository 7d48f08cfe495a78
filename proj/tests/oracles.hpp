#pragma once

// Reference implementations used only by the tests. These are deliberately
// independent of the library's own quadrature/rank machinery so that the two
// routes can disagree.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ehdg/types.hpp"

namespace oracle {

using ehdg::Vec2;

// Classic 7-point degree-5 rule, weights relative to triangle area.
struct Tri7 {
  std::array<std::array<double, 3>, 7> bary;
  std::array<double, 7> w;
  Tri7() {
    const double a1 = (6.0 + std::sqrt(15.0)) / 21.0, w1 = (155.0 + std::sqrt(15.0)) / 1200.0;
    const double a2 = (6.0 - std::sqrt(15.0)) / 21.0, w2 = (155.0 - std::sqrt(15.0)) / 1200.0;
    bary[0] = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    w[0] = 9.0 / 40;
    int n = 1;
    for (const auto& [a, ww] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      bary[n] = {a, a, 1 - 2 * a};
      bary[n + 1] = {a, 1 - 2 * a, a};
      bary[n + 2] = {1 - 2 * a, a, a};
      w[n] = w[n + 1] = w[n + 2] = ww;
      n += 3;
    }
  }
};

inline double integrate_once(const std::function<double(double, double)>& f, const Vec2& A,
                             const Vec2& B, const Vec2& C) {
  static const Tri7 rule;
  const double area =
      0.5 * std::abs((B.x() - A.x()) * (C.y() - A.y()) - (C.x() - A.x()) * (B.y() - A.y()));
  double s = 0;
  for (int q = 0; q < 7; ++q) {
    const Vec2 p = rule.bary[q][0] * A + rule.bary[q][1] * B + rule.bary[q][2] * C;
    s += rule.w[q] * f(p.x(), p.y());
  }
  return area * s;
}

// Uniform 4-way refinement until two successive levels agree. Good enough for
// the continuous (if non-polynomial) integrands exercised by the tests.
inline double integrate_triangle(const std::function<double(double, double)>& f, const Vec2& A,
                                 const Vec2& B, const Vec2& C, double tol = 1e-11,
                                 int max_level = 9) {
  double prev = integrate_once(f, A, B, C);
  std::vector<std::array<Vec2, 3>> cells{{A, B, C}};
  for (int l = 1; l <= max_level; ++l) {
    std::vector<std::array<Vec2, 3>> next;
    next.reserve(cells.size() * 4);
    for (const auto& c : cells) {
      const Vec2 ab = 0.5 * (c[0] + c[1]), bc = 0.5 * (c[1] + c[2]), ca = 0.5 * (c[2] + c[0]);
      next.push_back({c[0], ab, ca});
      next.push_back({ab, c[1], bc});
      next.push_back({ca, bc, c[2]});
      next.push_back({ab, bc, ca});
    }
    cells.swap(next);
    double cur = 0;
    for (const auto& c : cells) cur += integrate_once(f, c[0], c[1], c[2]);
    if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  throw std::runtime_error("oracle integration did not settle");
}

// Integral over a star-shaped polygon given its vertices (uses vertex average
// as the star point, same convention as the library but none of its code).
inline double integrate_polygon(const std::function<double(double, double)>& f,
                                const std::vector<Vec2>& verts, double tol = 1e-11) {
  Vec2 c = Vec2::Zero();
  for (const auto& v : verts) c += v / double(verts.size());
  double s = 0;
  for (size_t i = 0; i < verts.size(); ++i)
    s += integrate_triangle(f, c, verts[i], verts[(i + 1) % verts.size()], tol);
  return s;
}

inline double integrate_segment(const std::function<double(double)>& f, double a, double b,
                                double tol = 1e-12) {
  // Simpson with doubling.
  auto simpson = [&](int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
  };
  double prev = simpson(8);
  for (int n = 16; n <= 1 << 20; n *= 2) {
    const double cur = simpson(n);
    if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  throw std::runtime_error("oracle segment integration did not settle");
}

// Central finite differences; independent check on the dual-number arithmetic.
inline Vec2 fd_grad(const std::function<double(double, double)>& f, double x, double y,
                    double h = 1e-5) {
  return Vec2((f(x + h, y) - f(x - h, y)) / (2 * h), (f(x, y + h) - f(x, y - h)) / (2 * h));
}

inline std::array<double, 3> fd_hess(const std::function<double(double, double)>& f, double x,
                                     double y, double h = 5e-4) {
  const double fxx = (f(x + h, y) - 2 * f(x, y) + f(x - h, y)) / (h * h);
  const double fyy = (f(x, y + h) - 2 * f(x, y) + f(x, y - h)) / (h * h);
  const double fxy =
      (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h);
  return {fxx, fyy, fxy};
}

// Least-squares slope of log2(err) against level (h = 2^-level).
inline double fit_slope(const std::vector<double>& errs) {
  const int n = static_cast<int>(errs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = -double(i), y = std::log2(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Rank by column-pivoted QR — a different algorithm from the library's SVD.
inline int qr_rank(const Eigen::MatrixXd& m, double tol = 1e-10) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(tol);
  return static_cast<int>(qr.rank());
}

}  // namespace oracle
