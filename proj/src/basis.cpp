#include "ehdg/basis.hpp"

#include <cmath>

namespace ehdg {

std::vector<std::array<int, 2>> p_exponents(int k) {
  std::vector<std::array<int, 2>> e;
  for (int d = 0; d <= k; ++d)
    for (int b = 0; b <= d; ++b) e.push_back({d - b, b});
  return e;
}

std::vector<std::array<int, 2>> q_exponents(int k) {
  std::vector<std::array<int, 2>> e;
  for (int a = 0; a <= k; ++a)
    for (int b = 0; b <= k; ++b) e.push_back({a, b});
  return e;
}

ScalarC2 monomial(int a, int b, const Vec2& center, double scale) {
  return {[a, b, center, scale](const Jet2& x, const Jet2& y) {
            return pow((x - center.x()) / scale, a) * pow((y - center.y()) / scale, b);
          },
          Smoothness::Entire};
}

ScalarC2 affine(double cx, double cy, double c0) {
  return {[cx, cy, c0](const Jet2& x, const Jet2& y) { return cx * x + cy * y + c0; },
          Smoothness::Entire};
}

StressC2 stress_monomial(int a, int b, int dir, const Vec2& center, double scale) {
  const ScalarC2 m = monomial(a, b, center, scale);
  const double r = 1.0 / std::sqrt(2.0);
  StressC2 s;
  s.smoothness = Smoothness::Entire;
  s.tag = StressTag::Polynomial;
  switch (dir) {
    case 0:
      s.value = [m](const Vec2& p) { return SymTensor{m.value(p), 0, 0}; };
      s.div = [m](const Vec2& p) {
        const Jet2 j = m.eval(p);
        return Vec2(j.dx, 0);
      };
      break;
    case 1:
      s.value = [m](const Vec2& p) { return SymTensor{0, m.value(p), 0}; };
      s.div = [m](const Vec2& p) {
        const Jet2 j = m.eval(p);
        return Vec2(0, j.dy);
      };
      break;
    default:
      s.value = [m, r](const Vec2& p) { return SymTensor{0, 0, r * m.value(p)}; };
      s.div = [m, r](const Vec2& p) {
        const Jet2 j = m.eval(p);
        return Vec2(r * j.dy, r * j.dx);
      };
  }
  return s;
}

PolyBases polynomial_bases(int k, const Vec2& center, double scale, bool tensor) {
  PolyBases b;
  b.k = k;
  const auto exps = tensor ? q_exponents(k) : p_exponents(k);
  for (const auto& [ea, eb] : exps) {
    b.scalar.push_back(monomial(ea, eb, center, scale));
    b.vec.push_back({b.scalar.back(), scalar_constant(0)});
    b.vec.push_back({scalar_constant(0), b.scalar.back()});
    for (int dir = 0; dir < 3; ++dir) b.stress.push_back(stress_monomial(ea, eb, dir, center, scale));
  }
  b.rigid.push_back({scalar_constant(1), scalar_constant(0)});
  b.rigid.push_back({scalar_constant(0), scalar_constant(1)});
  b.rigid.push_back({affine(0, -1, 0), affine(1, 0, 0)});
  return b;
}

double shifted_legendre(int j, double s) {
  const double t = 2.0 * s - 1.0;
  double p0 = 1.0, p1 = t;
  if (j == 0) return 1.0;
  for (int n = 1; n < j; ++n) {
    const double p2 = ((2 * n + 1) * t * p1 - n * p0) / (n + 1);
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * j + 1.0) * p1;
}

}  // namespace ehdg
