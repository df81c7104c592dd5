#include "core/field.hpp"

#include <cmath>

namespace rsnf {

Rational parse_rational(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty rational literal");
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rational r(s);
    r.canonicalize();
    return r;
  }
  auto dot = s.find('.');
  auto epos = s.find_first_of("eE");
  if (dot == std::string::npos && epos == std::string::npos) {
    Rational r(s);
    r.canonicalize();
    return r;
  }
  // decimal literal: mantissa and optional exponent
  std::string mant = epos == std::string::npos ? s : s.substr(0, epos);
  long ex = epos == std::string::npos ? 0 : std::stol(s.substr(epos + 1));
  bool neg = false;
  size_t i = 0;
  if (i < mant.size() && (mant[i] == '+' || mant[i] == '-')) {
    neg = mant[i] == '-';
    ++i;
  }
  Integer num = 0;
  long frac_digits = 0;
  bool seen_dot = false;
  for (; i < mant.size(); ++i) {
    char c = mant[i];
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("bad rational literal: " + s);
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw std::invalid_argument("bad rational literal: " + s);
    num = num * 10 + (c - '0');
    if (seen_dot) ++frac_digits;
  }
  Integer den = 1;
  long p10 = frac_digits - ex;
  Integer ten = 10;
  if (p10 >= 0) {
    mpz_pow_ui(den.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(p10));
  } else {
    Integer scale;
    mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(-p10));
    num *= scale;
  }
  Rational r(num, den);
  r.canonicalize();
  if (neg) r = -r;
  return r;
}

std::string rational_to_string(const Rational& r) {
  return r.get_str();
}

double rat_to_double(const Rational& r) {
  return r.get_d();
}

QC qc_pow(const QC& a, long e) {
  if (e < 0) return qc_pow(a.inv(), -e);
  QC acc(1);
  QC base = a;
  long n = e;
  while (n > 0) {
    if (n & 1) acc *= base;
    base *= base;
    n >>= 1;
  }
  return acc;
}

bool rational_nth_root(const Rational& x, long n, Rational& r) {
  if (n <= 0) return false;
  if (n == 1) {
    r = x;
    return true;
  }
  if (x == 0) {
    r = 0;
    return true;
  }
  if (x < 0 && n % 2 == 0) return false;
  Integer num = x.get_num();
  Integer den = x.get_den();
  Integer rn, rd;
  bool neg = num < 0;
  Integer anum = neg ? Integer(-num) : num;
  if (!mpz_root(rn.get_mpz_t(), anum.get_mpz_t(), static_cast<unsigned long>(n))) return false;
  Integer chk;
  mpz_pow_ui(chk.get_mpz_t(), rn.get_mpz_t(), static_cast<unsigned long>(n));
  if (chk != anum) return false;
  if (!mpz_root(rd.get_mpz_t(), den.get_mpz_t(), static_cast<unsigned long>(n))) return false;
  mpz_pow_ui(chk.get_mpz_t(), rd.get_mpz_t(), static_cast<unsigned long>(n));
  if (chk != den) return false;
  r = Rational(neg ? Integer(-rn) : rn, rd);
  r.canonicalize();
  return true;
}

namespace {

bool qc_sqrt(const QC& x, QC& r) {
  // solve (a+bi)^2 = re + im i with rational a, b
  if (x.im == 0) {
    Rational a;
    if (x.re >= 0) {
      if (!rational_nth_root(x.re, 2, a)) return false;
      r = QC(a, Rational(0));
      return true;
    }
    if (!rational_nth_root(-x.re, 2, a)) return false;
    r = QC(Rational(0), a);
    return true;
  }
  // |x| must be a rational square; then a^2 = (|x|+re)/2
  Rational n2 = x.norm2();
  Rational mod;
  if (!rational_nth_root(n2, 2, mod)) return false;
  Rational a2 = (mod + x.re) / 2;
  Rational a;
  if (!rational_nth_root(a2, 2, a)) return false;
  if (a == 0) return false;
  Rational b = x.im / (2 * a);
  QC cand(a, b);
  if (cand * cand == x) {
    r = cand;
    return true;
  }
  return false;
}

}  // namespace

bool qc_nth_root(const QC& x, long n, QC& r) {
  if (n <= 0) return false;
  if (n == 1) {
    r = x;
    return true;
  }
  if (x.is_zero()) {
    r = QC();
    return true;
  }
  if (n == 2) return qc_sqrt(x, r);
  if (n % 2 == 0) {
    QC h;
    if (!qc_nth_root(x, n / 2, h)) return false;
    if (qc_sqrt(h, r)) return true;
    // (-h)^(n/2) = h^(n/2) when n/2 is even, so -h is an equally good base
    if ((n / 2) % 2 == 0 && qc_sqrt(-h, r)) return true;
    return false;
  }
  // odd n: try real root, pure-imaginary, and unit-multiplied real roots
  if (x.im == 0) {
    Rational a;
    if (rational_nth_root(x.re, n, a)) {
      r = QC(a, Rational(0));
      return true;
    }
    return false;
  }
  if (x.re == 0) {
    // (bi)^n for odd n is +/- i * b^n; i^n cycles with period 4
    Rational b;
    long m = ((n % 4) + 4) % 4;  // i^n = i^m
    // candidate r = c*i: (c i)^n = c^n i^n
    QC in = m == 1 ? QC(Rational(0), Rational(1)) : QC(Rational(0), Rational(-1));
    QC target = x / in;  // should be real c^n
    if (target.im == 0 && rational_nth_root(target.re, n, b)) {
      r = QC(Rational(0), b);
      if (qc_pow(r, n) == x) return true;
    }
    return false;
  }
  return false;
}

namespace {
int g_precision_bits = 53;
}

int float_precision_bits() { return g_precision_bits; }

void set_float_precision_bits(int bits) {
  if (bits < 53)
    throw std::invalid_argument("float precision must be at least 53 bits");
  if (bits != 53)
    throw std::invalid_argument("unsupported float precision (binary64 carries 53 bits)");
  g_precision_bits = bits;
}

}  // namespace rsnf
