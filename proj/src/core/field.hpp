#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace rsnf {

using Rational = mpq_class;
using Integer = mpz_class;
using CD = std::complex<double>;

inline Rational rat(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

// Parses "p/q", "p", or a decimal literal like "-0.25".
Rational parse_rational(const std::string& s);
std::string rational_to_string(const Rational& r);

double rat_to_double(const Rational& r);

/// Exact complex scalar with Gaussian-rational coordinates.
struct QC {
  Rational re, im;

  QC() : re(0), im(0) {}
  QC(long r) : re(r), im(0) {}
  QC(const Rational& r) : re(r), im(0) {}
  QC(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

  bool is_zero() const { return re == 0 && im == 0; }
  bool is_real() const { return im == 0; }

  QC conj() const { return QC(re, -im); }
  Rational norm2() const { return re * re + im * im; }

  QC operator-() const { return QC(-re, -im); }
  QC& operator+=(const QC& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  QC& operator-=(const QC& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  QC& operator*=(const QC& o) {
    Rational r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = r;
    return *this;
  }
  QC inv() const {
    Rational n = norm2();
    if (n == 0) throw std::domain_error("QC: division by zero");
    return QC(re / n, -im / n);
  }
  QC& operator/=(const QC& o) { return *this *= o.inv(); }

  friend QC operator+(QC a, const QC& b) { return a += b; }
  friend QC operator-(QC a, const QC& b) { return a -= b; }
  friend QC operator*(QC a, const QC& b) { return a *= b; }
  friend QC operator/(QC a, const QC& b) { return a /= b; }
  friend bool operator==(const QC& a, const QC& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const QC& a, const QC& b) { return !(a == b); }

  CD to_cd() const { return CD(rat_to_double(re), rat_to_double(im)); }
};

QC qc_pow(const QC& a, long e);

// Integer n-th root when it exists: returns true and sets r with r^n == x.
bool rational_nth_root(const Rational& x, long n, Rational& r);
// Gaussian-rational n-th root when one exists in QC (n in {1,2,3,4} handled
// fully, other n only for real non-negative bases and simple cases).
bool qc_nth_root(const QC& x, long n, QC& r);

/// Field traits used by the templated series/jet machinery.
template <class K>
struct FT;

template <>
struct FT<QC> {
  static constexpr bool exact = true;
  static QC zero() { return QC(); }
  static QC one() { return QC(1); }
  static QC from_long(long v) { return QC(v); }
  static bool is_zero(const QC& v) { return v.is_zero(); }
  static CD to_cd(const QC& v) { return v.to_cd(); }
  static double abs(const QC& v) { return std::abs(v.to_cd()); }
};

template <>
struct FT<CD> {
  static constexpr bool exact = false;
  static CD zero() { return CD(0.0, 0.0); }
  static CD one() { return CD(1.0, 0.0); }
  static CD from_long(long v) { return CD(double(v), 0.0); }
  static bool is_zero(const CD& v) { return v.real() == 0.0 && v.imag() == 0.0; }
  static CD to_cd(const CD& v) { return v; }
  static double abs(const CD& v) { return std::abs(v); }
};

// Global mantissa precision for the floating coefficient field. The native
// binary64 format carries exactly 53 bits; other settings are rejected so a
// stored precision never overstates the arithmetic that produced a value.
int float_precision_bits();
void set_float_precision_bits(int bits);

}  // namespace rsnf
