#pragma once

#include "core/field.hpp"

namespace rsnf {

/// Element of Q(sqrt2, sqrt3): a + b sqrt2 + c sqrt3 + d sqrt6. Closed under
/// products and carries an exact sign, which is what the lexicographic
/// node/saddle test needs for direction counts dividing 24.
struct QuadVal {
  Rational a, b, c, d;

  QuadVal() : a(0), b(0), c(0), d(0) {}
  explicit QuadVal(Rational r) : a(std::move(r)), b(0), c(0), d(0) {}
  QuadVal(Rational a_, Rational b_, Rational c_, Rational d_)
      : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), d(std::move(d_)) {}

  bool is_zero() const { return a == 0 && b == 0 && c == 0 && d == 0; }

  QuadVal operator-() const { return {-a, -b, -c, -d}; }
  friend QuadVal operator+(const QuadVal& x, const QuadVal& y) {
    return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
  }
  friend QuadVal operator-(const QuadVal& x, const QuadVal& y) { return x + (-y); }
  friend QuadVal operator*(const QuadVal& x, const QuadVal& y) {
    return {x.a * y.a + 2 * x.b * y.b + 3 * x.c * y.c + 6 * x.d * y.d,
            x.a * y.b + x.b * y.a + 3 * (x.c * y.d + x.d * y.c),
            x.a * y.c + x.c * y.a + 2 * (x.b * y.d + x.d * y.b),
            x.a * y.d + x.d * y.a + x.b * y.c + x.c * y.b};
  }
  friend QuadVal operator*(const Rational& r, const QuadVal& x) {
    return {r * x.a, r * x.b, r * x.c, r * x.d};
  }

  // exact sign: -1, 0, +1
  int sign() const;
  double to_double() const;
};

/// cos(2 pi r) and sin(2 pi r) for rational r whose denominator divides 24.
/// Returns false for other denominators (callers fall back to floats).
bool exact_cos_sin(const Rational& r, QuadVal& cos_out, QuadVal& sin_out);

}  // namespace rsnf
