#pragma once

#include <vector>

#include "fpe/geometry.hpp"

namespace fpe {

struct Monomial {
  double coeff = 0.0;
  int px = 0;
  int py = 0;
};

// Sparse bivariate polynomial. Terms are kept merged and sorted by
// (px, py) so that equal polynomials compare equal.
class Polynomial2 {
 public:
  Polynomial2() = default;
  explicit Polynomial2(std::vector<Monomial> terms);

  static Polynomial2 constant(double c);
  static Polynomial2 x() { return Polynomial2({{1.0, 1, 0}}); }
  static Polynomial2 y() { return Polynomial2({{1.0, 0, 1}}); }

  double operator()(Vec2 p) const;
  double operator()(double x, double y) const { return (*this)({x, y}); }

  Polynomial2 dx() const;
  Polynomial2 dy() const;

  Polynomial2 operator+(const Polynomial2& o) const;
  Polynomial2 operator-(const Polynomial2& o) const;
  Polynomial2 operator*(const Polynomial2& o) const;
  Polynomial2 operator*(double s) const;
  Polynomial2 operator-() const { return (*this) * -1.0; }

  const std::vector<Monomial>& terms() const { return terms_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }

 private:
  void normalize();
  std::vector<Monomial> terms_;
};

}  // namespace fpe
