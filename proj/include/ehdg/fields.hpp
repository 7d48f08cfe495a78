// C2 fields: closures evaluable with value/gradient/Hessian via jet
// arithmetic, the vector/symmetric-tensor wrappers built on them, and the
// Airy operator that turns scalars into divergence-free stresses.
#pragma once

#include <functional>
#include <utility>

#include "ehdg/jet.hpp"
#include "ehdg/types.hpp"

namespace ehdg {

enum class Smoothness { Entire, PiecewiseStar };

struct ScalarC2 {
  std::function<Jet2(const Jet2&, const Jet2&)> jet;
  Smoothness smoothness = Smoothness::Entire;

  Jet2 eval(const Vec2& p) const { return jet(Jet2::var_x(p.x()), Jet2::var_y(p.y())); }
  double value(const Vec2& p) const { return eval(p).v; }
};

struct Deriv2 {
  double value;
  Vec2 grad;
  Mat2 hess;
};

inline Deriv2 eval_with_derivatives(const ScalarC2& f, const Vec2& p) {
  const Jet2 j = f.eval(p);
  return {j.v, j.grad(), j.hess()};
}

inline Smoothness join(Smoothness a, Smoothness b) {
  return (a == Smoothness::PiecewiseStar || b == Smoothness::PiecewiseStar)
             ? Smoothness::PiecewiseStar
             : Smoothness::Entire;
}

inline ScalarC2 scalar_constant(double c) {
  return {[c](const Jet2&, const Jet2&) { return Jet2::cst(c); }, Smoothness::Entire};
}

inline ScalarC2 operator*(const ScalarC2& a, const ScalarC2& b) {
  return {[fa = a.jet, fb = b.jet](const Jet2& x, const Jet2& y) { return fa(x, y) * fb(x, y); },
          join(a.smoothness, b.smoothness)};
}

inline ScalarC2 operator+(const ScalarC2& a, const ScalarC2& b) {
  return {[fa = a.jet, fb = b.jet](const Jet2& x, const Jet2& y) { return fa(x, y) + fb(x, y); },
          join(a.smoothness, b.smoothness)};
}

inline ScalarC2 operator*(double s, const ScalarC2& a) {
  return {[s, fa = a.jet](const Jet2& x, const Jet2& y) { return s * fa(x, y); }, a.smoothness};
}

struct VectorC2 {
  ScalarC2 x, y;

  Smoothness smoothness() const { return join(x.smoothness, y.smoothness); }
  Vec2 value(const Vec2& p) const { return {x.value(p), y.value(p)}; }
  // Symmetric gradient (strain) from the component jets.
  SymTensor strain(const Vec2& p) const {
    const Jet2 jx = x.eval(p), jy = y.eval(p);
    return {jx.dx, jy.dy, 0.5 * (jx.dy + jy.dx)};
  }
};

enum class StressTag { Polynomial, Enrichment };

// Symmetric-tensor field. Component values are always available; the
// divergence comes from a separate analytic closure because Airy-generated
// components are already second derivatives and carry no jets of their own.
struct StressC2 {
  std::function<SymTensor(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> div;
  Smoothness smoothness = Smoothness::Entire;
  StressTag tag = StressTag::Polynomial;

  Vec2 traction(const Vec2& p, const Vec2& n) const { return value(p).dot_normal(n); }
};

// J phi = [[phi_yy, -phi_xy], [-phi_xy, phi_xx]]; divergence-free by
// construction (equality of mixed thirds), so div is pinned to zero.
inline StressC2 airy(const ScalarC2& phi) {
  return {[f = phi](const Vec2& p) {
            const Jet2 j = f.eval(p);
            return SymTensor{j.dyy, j.dxx, -j.dxy};
          },
          [](const Vec2&) { return Vec2(0, 0); }, phi.smoothness,
          StressTag::Enrichment};
}

}  // namespace ehdg
