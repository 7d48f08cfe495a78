// Shared value types and the error hierarchy.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace ehdg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Symmetric 2x2 tensor stored as (xx, yy, xy).
struct SymTensor {
  double xx = 0, yy = 0, xy = 0;

  double trace() const { return xx + yy; }
  Mat2 matrix() const {
    Mat2 m;
    m << xx, xy, xy, yy;
    return m;
  }
  Vec2 dot_normal(const Vec2& n) const {
    return {xx * n.x() + xy * n.y(), xy * n.x() + yy * n.y()};
  }
  SymTensor operator+(const SymTensor& o) const { return {xx + o.xx, yy + o.yy, xy + o.xy}; }
  SymTensor operator-(const SymTensor& o) const { return {xx - o.xx, yy - o.yy, xy - o.xy}; }
  SymTensor operator*(double s) const { return {xx * s, yy * s, xy * s}; }
  SymTensor& operator+=(const SymTensor& o) {
    xx += o.xx;
    yy += o.yy;
    xy += o.xy;
    return *this;
  }
  static SymTensor identity() { return {1.0, 1.0, 0.0}; }
};

// Frobenius inner product (the off-diagonal entry counts twice).
inline double frobenius(const SymTensor& a, const SymTensor& b) {
  return a.xx * b.xx + a.yy * b.yy + 2.0 * a.xy * b.xy;
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CapacityError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct GeometryError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct QuadratureError : Error {
  using Error::Error;
};
struct AmbiguousRankError : Error {
  using Error::Error;
};
struct ConditioningError : Error {
  using Error::Error;
};
struct MaterialError : Error {
  using Error::Error;
};
struct UsageError : Error {
  using Error::Error;
};

struct SolverError : Error {
  std::vector<double> residual_history;
  SolverError(const std::string& msg, std::vector<double> history = {})
      : Error(msg), residual_history(std::move(history)) {}
};

}  // namespace ehdg
