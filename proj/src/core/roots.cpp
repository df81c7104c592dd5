#include "core/roots.hpp"

#include <algorithm>

namespace rsnf {

std::vector<CD> poly_roots_numeric(const std::vector<CD>& c) {
  int n = static_cast<int>(c.size()) - 1;
  if (n <= 0) return {};
  std::vector<CD> r(n);
  // scatter initial guesses on a generic circle
  double rad = 0.0;
  for (int i = 0; i < n; ++i) rad = std::max(rad, std::pow(std::abs(c[i]), 1.0 / (n - i)));
  rad = std::max(rad, 0.5) * 1.2;
  for (int i = 0; i < n; ++i)
    r[i] = rad * std::exp(CD(0, 2 * M_PI * i / n + 0.4));
  for (int it = 0; it < 500; ++it) {
    double delta = 0;
    for (int i = 0; i < n; ++i) {
      CD x = r[i];
      CD p(1, 0);
      for (int k = n - 1; k >= 0; --k) p = p * x + c[k];
      CD den(1, 0);
      for (int j = 0; j < n; ++j)
        if (j != i) den *= (x - r[j]);
      if (std::abs(den) < 1e-300) den = CD(1e-300, 0);
      CD step = p / den;
      r[i] = x - step;
      delta = std::max(delta, std::abs(step));
    }
    if (delta < 1e-14 * std::max(1.0, rad)) break;
  }
  return r;
}

Rational rational_from_double(double x, unsigned long max_den) {
  // continued-fraction convergents with bounded denominator
  if (!std::isfinite(x)) throw std::domain_error("rational_from_double: non-finite");
  bool neg = x < 0;
  double v = neg ? -x : x;
  Integer p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double frac = v;
  for (int it = 0; it < 64; ++it) {
    double fl = std::floor(frac);
    if (fl > 9e18) break;
    Integer a(static_cast<long>(fl));
    Integer p2 = a * p1 + p0;
    Integer q2 = a * q1 + q0;
    if (q2 > Integer(max_den)) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    double rem = frac - fl;
    if (rem < 1e-15 * std::max(1.0, v)) break;
    frac = 1.0 / rem;
  }
  Rational r(p1, q1 == 0 ? Integer(1) : q1);
  r.canonicalize();
  return neg ? Rational(-r) : r;
}

QC qc_from_double(const CD& z, unsigned long max_den) {
  double snap = 1e-10 * std::max(1.0, std::abs(z));
  double re = std::abs(z.real()) < snap ? 0.0 : z.real();
  double im = std::abs(z.imag()) < snap ? 0.0 : z.imag();
  return QC(rational_from_double(re, max_den), rational_from_double(im, max_den));
}

namespace {

QC eval_poly(const std::vector<QC>& c, const QC& x) {
  QC acc = c.back();
  for (int k = static_cast<int>(c.size()) - 2; k >= 0; --k) acc = acc * x + c[k];
  return acc;
}

// divide monic poly by (T - lambda); requires exact divisibility
bool deflate(std::vector<QC>& c, const QC& lambda) {
  int n = static_cast<int>(c.size()) - 1;
  std::vector<QC> q(n);
  QC carry = c[n];  // = 1
  for (int k = n - 1; k >= 0; --k) {
    q[k] = carry;
    carry = c[k] + carry * lambda;
  }
  if (!carry.is_zero()) return false;
  c = q;
  return true;
}

}  // namespace

bool exact_eigenvalues(const Mat<QC>& a, std::vector<ExactEigen>& out) {
  out.clear();
  std::vector<QC> c = char_poly(a);
  std::vector<CD> cf(c.size());
  for (size_t i = 0; i < c.size(); ++i) cf[i] = c[i].to_cd();
  std::vector<CD> guide = poly_roots_numeric(cf);

  while (c.size() > 1) {
    bool found = false;
    for (const CD& g : guide) {
      for (unsigned long den : {1ul, 6ul, 360ul, 100000ul, 1000000000ul}) {
        QC cand = qc_from_double(g, den);
        if (!eval_poly(c, cand).is_zero()) continue;
        int mult = 0;
        while (c.size() > 1) {
          std::vector<QC> save = c;
          if (!deflate(c, cand)) {
            c = save;
            break;
          }
          if (!eval_poly(save, cand).is_zero()) {
            c = save;
            break;
          }
          ++mult;
          if (c.size() == 1 || !eval_poly(c, cand).is_zero()) break;
        }
        if (mult > 0) {
          for (auto& e : out)
            if (e.value == cand) {
              e.multiplicity += mult;
              mult = 0;
            }
          if (mult > 0) out.push_back({cand, mult});
          found = true;
          break;
        }
      }
      if (found) break;
    }
    if (!found) return false;  // leftover factor does not split over Q(i)
    // refresh the numeric guide for the deflated polynomial
    std::vector<CD> cf2(c.size());
    for (size_t i = 0; i < c.size(); ++i) cf2[i] = c[i].to_cd();
    guide = poly_roots_numeric(cf2);
  }
  return true;
}

std::vector<FloatEigen> float_eigenvalues(const Mat<CD>& a, double cluster_tol) {
  std::vector<CD> c = char_poly(a);
  std::vector<CD> roots = poly_roots_numeric(c);
  double scale = std::max(1.0, a.max_abs());
  std::vector<FloatEigen> out;
  for (const CD& r : roots) {
    bool merged = false;
    for (auto& e : out)
      if (std::abs(e.value - r) <= cluster_tol * scale) {
        e.value = (e.value * CD(double(e.multiplicity), 0) + r) / CD(double(e.multiplicity + 1), 0);
        e.multiplicity += 1;
        merged = true;
        break;
      }
    if (!merged) out.push_back({r, 1});
  }
  return out;
}

}  // namespace rsnf
