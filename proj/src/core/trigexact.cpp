#include "core/trigexact.hpp"

#include <array>
#include <cmath>

namespace rsnf {

namespace {

// lower bound of sqrt(n) with error < 10^-digits, as a rational
Rational sqrt_lower(long n, int digits) {
  Integer scale;
  Integer ten = 10;
  mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(digits));
  Integer target = Integer(n) * scale * scale;
  Integer root;
  mpz_sqrt(root.get_mpz_t(), target.get_mpz_t());  // floor
  Rational r(root, scale);
  r.canonicalize();
  return r;
}

}  // namespace

int QuadVal::sign() const {
  if (is_zero()) return 0;
  // interval evaluation at increasing precision; the value is nonzero because
  // {1, sqrt2, sqrt3, sqrt6} are linearly independent over Q
  for (int digits = 20; digits <= 320; digits *= 2) {
    Rational s2lo = sqrt_lower(2, digits);
    Rational s3lo = sqrt_lower(3, digits);
    Rational s6lo = sqrt_lower(6, digits);
    Rational eps(1, 1);
    {
      Integer ten = 10, p;
      mpz_pow_ui(p.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(digits));
      eps = Rational(1, p);
      eps.canonicalize();
    }
    auto lo_of = [&](const Rational& coeff, const Rational& rlo) -> Rational {
      if (coeff >= 0) return Rational(coeff * rlo);
      return Rational(coeff * (rlo + eps));
    };
    auto hi_of = [&](const Rational& coeff, const Rational& rlo) -> Rational {
      if (coeff >= 0) return Rational(coeff * (rlo + eps));
      return Rational(coeff * rlo);
    };
    Rational lo = a + lo_of(b, s2lo) + lo_of(c, s3lo) + lo_of(d, s6lo);
    Rational hi = a + hi_of(b, s2lo) + hi_of(c, s3lo) + hi_of(d, s6lo);
    if (lo > 0) return 1;
    if (hi < 0) return -1;
  }
  throw std::logic_error("QuadVal::sign: interval refinement failed");
}

double QuadVal::to_double() const {
  return rat_to_double(a) + rat_to_double(b) * std::sqrt(2.0) + rat_to_double(c) * std::sqrt(3.0) +
         rat_to_double(d) * std::sqrt(6.0);
}

bool exact_cos_sin(const Rational& r, QuadVal& cos_out, QuadVal& sin_out) {
  Rational rr = r;
  Integer fl;
  mpz_fdiv_q(fl.get_mpz_t(), rr.get_num().get_mpz_t(), rr.get_den().get_mpz_t());
  rr -= Rational(fl);
  Rational scaled = rr * 24;
  if (scaled.get_den() != 1) return false;
  long k = scaled.get_num().get_si();  // 0..23, angle = k * 15 degrees

  // table for 0..6 (0..90 degrees): cos(15 k degrees)
  auto q = [](long num, long den) { return rat(num, den); };
  static const std::array<QuadVal, 7> cos_table = {
      QuadVal(Rational(1)),                                  // 0
      QuadVal(Rational(0), q(1, 4), Rational(0), q(1, 4)),   // 15: (sqrt6+sqrt2)/4
      QuadVal(Rational(0), Rational(0), q(1, 2), Rational(0)),  // 30: sqrt3/2
      QuadVal(Rational(0), q(1, 2), Rational(0), Rational(0)),  // 45: sqrt2/2
      QuadVal(q(1, 2)),                                      // 60
      QuadVal(Rational(0), q(-1, 4), Rational(0), q(1, 4)),  // 75: (sqrt6-sqrt2)/4
      QuadVal(Rational(0)),                                  // 90
  };
  auto cos_k = [&](long kk) -> QuadVal {
    kk = ((kk % 24) + 24) % 24;
    if (kk <= 6) return cos_table[kk];
    if (kk <= 12) return -cos_table[12 - kk];
    if (kk <= 18) return -cos_table[kk - 12];
    return cos_table[24 - kk];
  };
  cos_out = cos_k(k);
  sin_out = cos_k(k - 6);  // sin t = cos(t - 90 degrees)
  return true;
}

}  // namespace rsnf
