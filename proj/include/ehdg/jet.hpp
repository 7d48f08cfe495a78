// Second-order forward-mode differentiation on R^2: every arithmetic
// operation propagates value, gradient and (symmetric) Hessian together.
#pragma once

#include <cmath>

#include "ehdg/types.hpp"

namespace ehdg {

struct Jet2 {
  double v = 0, dx = 0, dy = 0, dxx = 0, dxy = 0, dyy = 0;

  static Jet2 var_x(double x) { return {x, 1, 0, 0, 0, 0}; }
  static Jet2 var_y(double y) { return {y, 0, 1, 0, 0, 0}; }
  static Jet2 cst(double c) { return {c, 0, 0, 0, 0, 0}; }

  Vec2 grad() const { return {dx, dy}; }
  Mat2 hess() const {
    Mat2 h;
    h << dxx, dxy, dxy, dyy;
    return h;
  }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.v + b.v, a.dx + b.dx, a.dy + b.dy, a.dxx + b.dxx, a.dxy + b.dxy, a.dyy + b.dyy};
}
inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.v - b.v, a.dx - b.dx, a.dy - b.dy, a.dxx - b.dxx, a.dxy - b.dxy, a.dyy - b.dyy};
}
inline Jet2 operator-(const Jet2& a) { return {-a.v, -a.dx, -a.dy, -a.dxx, -a.dxy, -a.dyy}; }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.v * b.v,
          a.dx * b.v + a.v * b.dx,
          a.dy * b.v + a.v * b.dy,
          a.dxx * b.v + 2.0 * a.dx * b.dx + a.v * b.dxx,
          a.dxy * b.v + a.dx * b.dy + a.dy * b.dx + a.v * b.dxy,
          a.dyy * b.v + 2.0 * a.dy * b.dy + a.v * b.dyy};
}

inline Jet2 operator*(double s, const Jet2& a) {
  return {s * a.v, s * a.dx, s * a.dy, s * a.dxx, s * a.dxy, s * a.dyy};
}
inline Jet2 operator*(const Jet2& a, double s) { return s * a; }
inline Jet2 operator+(const Jet2& a, double c) {
  Jet2 r = a;
  r.v += c;
  return r;
}
inline Jet2 operator+(double c, const Jet2& a) { return a + c; }
inline Jet2 operator-(const Jet2& a, double c) { return a + (-c); }
inline Jet2 operator-(double c, const Jet2& a) { return (-a) + c; }

// Chain rule for a scalar function u with derivatives u', u'' at a.v.
inline Jet2 chain(const Jet2& a, double u, double du, double ddu) {
  return {u,
          du * a.dx,
          du * a.dy,
          ddu * a.dx * a.dx + du * a.dxx,
          ddu * a.dx * a.dy + du * a.dxy,
          ddu * a.dy * a.dy + du * a.dyy};
}

inline Jet2 inverse(const Jet2& a) {
  const double iv = 1.0 / a.v;
  return chain(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * inverse(b); }
inline Jet2 operator/(const Jet2& a, double s) { return a * (1.0 / s); }
inline Jet2 operator/(double c, const Jet2& a) { return c * inverse(a); }

inline Jet2 sin(const Jet2& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, s, c, -s);
}
inline Jet2 cos(const Jet2& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, c, -s, -c);
}
inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}

// Integer power; exponent 0 gives the constant 1 even at a.v = 0.
inline Jet2 pow(const Jet2& a, int n) {
  if (n == 0) return Jet2::cst(1.0);
  Jet2 r = a;
  for (int i = 1; i < n; ++i) r = r * a;
  return r;
}

}  // namespace ehdg
