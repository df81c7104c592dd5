#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "core/field.hpp"

namespace rsnf {

// Exponent multi-indices are packed into one 64-bit key, graded-lex ordered:
// the total degree sits in the top byte so integer comparison sorts by degree
// first. This caps jets at 7 variables and exponents at 255.
constexpr int kMaxVars = 7;

using MonoKey = std::uint64_t;

inline MonoKey mono_pack(const int* e, int n) {
  MonoKey key = 0;
  int deg = 0;
  for (int i = 0; i < n; ++i) {
    deg += e[i];
    key |= static_cast<MonoKey>(e[i] & 0xff) << (8 * (6 - i));
  }
  key |= static_cast<MonoKey>(deg & 0xff) << 56;
  return key;
}

inline int mono_deg(MonoKey k) { return static_cast<int>(k >> 56); }
inline int mono_exp(MonoKey k, int i) { return static_cast<int>((k >> (8 * (6 - i))) & 0xff); }

inline MonoKey mono_mul(MonoKey a, MonoKey b) { return a + b; }

inline MonoKey mono_one() { return 0; }

inline MonoKey mono_var(int i, int pow = 1) {
  MonoKey key = static_cast<MonoKey>(pow & 0xff) << (8 * (6 - i));
  key |= static_cast<MonoKey>(pow & 0xff) << 56;
  return key;
}

/// Truncated power series in `num_vars` variables: only terms of total degree
/// <= order are stored, zero coefficients are never stored.
template <class K>
class Jet {
 public:
  Jet() : nv_(1), ord_(0) {}
  Jet(int num_vars, int order) : nv_(num_vars), ord_(order) {
    if (num_vars < 1 || num_vars > kMaxVars) throw std::invalid_argument("Jet: bad num_vars");
    if (order < 0 || order > 255) throw std::invalid_argument("Jet: bad order");
  }

  static Jet constant(const K& c, int num_vars, int order) {
    Jet j(num_vars, order);
    j.set_coeff_key(mono_one(), c);
    return j;
  }
  static Jet variable(int i, int num_vars, int order) {
    Jet j(num_vars, order);
    if (order >= 1) j.set_coeff_key(mono_var(i), FT<K>::one());
    return j;
  }

  int num_vars() const { return nv_; }
  int order() const { return ord_; }
  bool is_zero() const { return t_.empty(); }
  const std::map<MonoKey, K>& terms() const { return t_; }

  // Minimum total degree of a stored term (order+1 for the zero jet).
  int val() const { return t_.empty() ? ord_ + 1 : mono_deg(t_.begin()->first); }

  K coeff_key(MonoKey k) const {
    auto it = t_.find(k);
    return it == t_.end() ? FT<K>::zero() : it->second;
  }
  K coeff(const std::vector<int>& e) const {
    if (static_cast<int>(e.size()) != nv_) throw std::invalid_argument("Jet::coeff: bad index");
    return coeff_key(mono_pack(e.data(), nv_));
  }
  // Univariate convenience.
  K coeff1(int k) const { return coeff_key(k == 0 ? mono_one() : mono_var(0, k)); }

  void set_coeff_key(MonoKey k, const K& c) {
    if (mono_deg(k) > ord_) return;
    if (FT<K>::is_zero(c))
      t_.erase(k);
    else
      t_[k] = c;
  }
  void set_coeff(const std::vector<int>& e, const K& c) {
    if (static_cast<int>(e.size()) != nv_) throw std::invalid_argument("Jet::set_coeff: bad index");
    set_coeff_key(mono_pack(e.data(), nv_), c);
  }
  void add_coeff_key(MonoKey k, const K& c) {
    if (mono_deg(k) > ord_ || FT<K>::is_zero(c)) return;
    auto it = t_.find(k);
    if (it == t_.end()) {
      t_.emplace(k, c);
    } else {
      it->second += c;
      if (FT<K>::is_zero(it->second)) t_.erase(it);
    }
  }

  Jet truncated(int new_order) const {
    Jet r(nv_, std::min(ord_, new_order));
    for (const auto& [k, c] : t_) {
      if (mono_deg(k) > r.ord_) break;
      r.t_.emplace(k, c);
    }
    return r;
  }

  // Reinterprets the truncation order upward. Only safe when the caller knows
  // the higher-order coefficients vanish (e.g. honest polynomials).
  Jet with_order(int new_order) const {
    Jet r(nv_, new_order);
    for (const auto& [k, c] : t_) {
      if (mono_deg(k) > new_order) break;
      r.t_.emplace(k, c);
    }
    return r;
  }

  Jet operator-() const {
    Jet r(nv_, ord_);
    for (const auto& [k, c] : t_) r.t_.emplace(k, -c);
    return r;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    a.check_compat(b);
    Jet r(a.nv_, std::min(a.ord_, b.ord_));
    r.t_ = a.truncated(r.ord_).t_;
    for (const auto& [k, c] : b.t_) {
      if (mono_deg(k) > r.ord_) break;
      r.add_coeff_key(k, c);
    }
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }

  friend Jet operator*(const Jet& a, const Jet& b) {
    a.check_compat(b);
    int ord = std::min(a.ord_, b.ord_);
    Jet r(a.nv_, ord);
    // accumulate products into a scratch vector, then sort-merge: cheaper
    // than per-term map lookups for the exact coefficient field
    thread_local std::vector<std::pair<MonoKey, K>> scratch;
    scratch.clear();
    for (const auto& [ka, ca] : a.t_) {
      int da = mono_deg(ka);
      if (da > ord) break;
      for (const auto& [kb, cb] : b.t_) {
        if (da + mono_deg(kb) > ord) break;
        scratch.emplace_back(mono_mul(ka, kb), ca * cb);
      }
    }
    std::sort(scratch.begin(), scratch.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    auto hint = r.t_.end();
    size_t i = 0;
    while (i < scratch.size()) {
      MonoKey key = scratch[i].first;
      K acc = std::move(scratch[i].second);
      ++i;
      while (i < scratch.size() && scratch[i].first == key) {
        acc += scratch[i].second;
        ++i;
      }
      if (!FT<K>::is_zero(acc)) hint = r.t_.emplace_hint(r.t_.end(), key, std::move(acc));
    }
    (void)hint;
    return r;
  }

  Jet& operator+=(const Jet& o) { return *this = *this + o; }
  Jet& operator-=(const Jet& o) { return *this = *this - o; }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }

  friend Jet operator*(const K& s, const Jet& a) {
    Jet r(a.nv_, a.ord_);
    if (FT<K>::is_zero(s)) return r;
    for (const auto& [k, c] : a.t_) {
      K v = s * c;
      if (!FT<K>::is_zero(v)) r.t_.emplace(k, v);
    }
    return r;
  }

  friend bool operator==(const Jet& a, const Jet& b) {
    return a.nv_ == b.nv_ && a.ord_ == b.ord_ && a.t_ == b.t_;
  }
  friend bool operator!=(const Jet& a, const Jet& b) { return !(a == b); }

  /// Partial derivative; the truncation order drops by one.
  Jet derive(int var) const {
    if (var < 0 || var >= nv_) throw std::invalid_argument("Jet::derive: bad variable");
    Jet r(nv_, std::max(0, ord_ - 1));
    for (const auto& [k, c] : t_) {
      int e = mono_exp(k, var);
      if (e == 0) continue;
      MonoKey kk = k - mono_var(var);
      if (mono_deg(kk) > r.ord_) continue;
      r.add_coeff_key(kk, FT<K>::from_long(e) * c);
    }
    return r;
  }

  K eval(const std::vector<K>& x) const {
    if (static_cast<int>(x.size()) != nv_) throw std::invalid_argument("Jet::eval: bad point");
    K acc = FT<K>::zero();
    for (const auto& [k, c] : t_) {
      K m = c;
      for (int i = 0; i < nv_; ++i)
        for (int e = 0; e < mono_exp(k, i); ++e) m *= x[i];
      acc += m;
    }
    return acc;
  }

  double max_abs() const {
    double m = 0;
    for (const auto& [k, c] : t_) m = std::max(m, FT<K>::abs(c));
    return m;
  }

 private:
  void check_compat(const Jet& o) const {
    if (nv_ != o.nv_) throw std::invalid_argument("Jet: mismatched num_vars");
  }

  int nv_;
  int ord_;
  std::map<MonoKey, K> t_;
};

template <class K>
using JetTuple = std::vector<Jet<K>>;

/// outer(inner_1, ..., inner_m); every inner entry must have zero constant
/// term so the composition stays inside the jet ring.
template <class K>
Jet<K> compose(const Jet<K>& outer, const JetTuple<K>& inner) {
  if (static_cast<int>(inner.size()) != outer.num_vars())
    throw std::invalid_argument("compose: arity mismatch");
  int ord = outer.order();
  for (const auto& g : inner) {
    if (!FT<K>::is_zero(g.coeff_key(mono_one())))
      throw std::domain_error("compose: inner entry has nonzero constant term");
    ord = std::min(ord, g.order());
  }
  int nv2 = inner.empty() ? 1 : inner[0].num_vars();
  for (const auto& g : inner)
    if (g.num_vars() != nv2) throw std::invalid_argument("compose: inner arity mismatch");

  // cache powers of each inner entry
  std::vector<std::vector<Jet<K>>> pw(inner.size());
  for (size_t i = 0; i < inner.size(); ++i)
    pw[i].push_back(Jet<K>::constant(FT<K>::one(), nv2, ord));

  auto power = [&](size_t i, int e) -> const Jet<K>& {
    while (static_cast<int>(pw[i].size()) <= e)
      pw[i].push_back(pw[i].back() * inner[i].truncated(ord));
    return pw[i][e];
  };

  Jet<K> acc(nv2, ord);
  for (const auto& [k, c] : outer.terms()) {
    if (mono_deg(k) > ord) break;
    Jet<K> m = Jet<K>::constant(c, nv2, ord);
    for (int i = 0; i < outer.num_vars(); ++i) {
      int e = mono_exp(k, i);
      if (e > 0) m = m * power(i, e);
    }
    acc += m;
  }
  return acc;
}

/// Precomputed monomial compositions against one fixed inner tuple: repeated
/// compositions with the same map (the Delta chain of the unipotent log)
/// become scaled accumulations.
template <class K>
class ComposeCache {
 public:
  ComposeCache(const JetTuple<K>& inner, int order) : ord_(order) {
    nv_ = inner.empty() ? 1 : inner[0].num_vars();
    arity_ = static_cast<int>(inner.size());
    for (const auto& g : inner)
      if (!FT<K>::is_zero(g.coeff_key(mono_one())))
        throw std::domain_error("ComposeCache: inner entry has nonzero constant term");
    table_[mono_one()] = Jet<K>::constant(FT<K>::one(), nv_, ord_);
    // build all monomials of total degree <= order, smallest factors first
    build_rec(mono_one(), 0, 0, inner);
  }

  Jet<K> apply(const Jet<K>& outer) const {
    Jet<K> acc(nv_, ord_);
    for (const auto& [k, c] : outer.terms()) {
      if (mono_deg(k) > ord_) break;
      auto it = table_.find(k);
      if (it == table_.end()) throw std::logic_error("ComposeCache: missing monomial");
      acc += c * it->second;
    }
    return acc;
  }

 private:
  void build_rec(MonoKey key, int deg, int next_var, const JetTuple<K>& inner) {
    for (int v = next_var; v < arity_; ++v) {
      int d = deg;
      MonoKey k = key;
      while (d < ord_) {
        MonoKey k2 = mono_mul(k, mono_var(v));
        table_[k2] = table_[k] * inner[v].truncated(ord_);
        build_rec(k2, d + 1, v + 1, inner);
        k = k2;
        ++d;
      }
    }
  }

  int nv_, ord_, arity_;
  std::map<MonoKey, Jet<K>> table_;
};

/// Map composition f after g, componentwise.
template <class K>
JetTuple<K> compose_map(const JetTuple<K>& f, const JetTuple<K>& g) {
  JetTuple<K> r;
  r.reserve(f.size());
  for (const auto& fi : f) r.push_back(compose(fi, g));
  return r;
}

template <class K>
JetTuple<K> identity_map(int n, int order) {
  JetTuple<K> r;
  for (int i = 0; i < n; ++i) r.push_back(Jet<K>::variable(i, n, order));
  return r;
}

// Multiplicative inverse of a unit series by Newton iteration.
template <class K>
Jet<K> inverse_unit(const Jet<K>& u) {
  K c0 = u.coeff_key(mono_one());
  if (FT<K>::is_zero(c0)) throw std::domain_error("inverse_unit: not a unit");
  K c0inv = FT<K>::one();
  if constexpr (FT<K>::exact)
    c0inv = c0.inv();
  else
    c0inv = FT<K>::one() / c0;
  Jet<K> v = Jet<K>::constant(c0inv, u.num_vars(), u.order());
  Jet<K> one = Jet<K>::constant(FT<K>::one(), u.num_vars(), u.order());
  int steps = 1;
  while ((1 << steps) <= u.order() + 1) ++steps;
  for (int i = 0; i < steps; ++i) v = v * (one + (one - u * v));
  return v;
}

// Exact division by x_var^k; fails if some term is not divisible.
template <class K>
Jet<K> divide_by_power(const Jet<K>& a, int var, int k) {
  if (k == 0) return a;
  Jet<K> r(a.num_vars(), std::max(0, a.order() - k));
  for (const auto& [key, c] : a.terms()) {
    if (mono_exp(key, var) < k)
      throw std::domain_error("divide_by_power: term not divisible");
    MonoKey kk = key - mono_var(var, k);
    if (mono_deg(kk) > r.order()) continue;
    r.set_coeff_key(kk, c);
  }
  return r;
}

template <class K>
bool divisible_by_power(const Jet<K>& a, int var, int k) {
  for (const auto& [key, c] : a.terms())
    if (mono_exp(key, var) < k) return false;
  return true;
}

// u^(1/l) for a unit series u; `root0` must satisfy root0^l = u(0).
template <class K>
Jet<K> nth_root_unit(const Jet<K>& u, int l, const K& root0) {
  Jet<K> v = Jet<K>::constant(root0, u.num_vars(), u.order());
  int steps = 1;
  while ((1 << steps) <= u.order() + 1) ++steps;
  K linv;
  if constexpr (FT<K>::exact)
    linv = QC(Rational(1, l));
  else
    linv = K(1.0 / double(l), 0.0);
  for (int i = 0; i < steps + 1; ++i) {
    // v <- v + (u - v^l) / (l v^(l-1))
    Jet<K> vp = Jet<K>::constant(FT<K>::one(), u.num_vars(), u.order());
    for (int j = 0; j < l - 1; ++j) vp = vp * v;
    Jet<K> corr = linv * ((u - vp * v) * inverse_unit(vp));
    v = v + corr;
  }
  return v;
}

/// Inverse of a formal map with invertible linear part and no constant term.
template <class K, class MatInv>
JetTuple<K> functional_inverse_impl(const JetTuple<K>& f, MatInv&& apply_linv) {
  int n = static_cast<int>(f.size());
  int ord = 255;
  for (const auto& fi : f) ord = std::min(ord, fi.order());
  JetTuple<K> id = identity_map<K>(n, ord);
  // start from the inverse of the linear part, then correct order by order
  JetTuple<K> g = apply_linv(id);
  for (int it = 0; it < ord + 1; ++it) {
    JetTuple<K> err;
    err.reserve(n);
    JetTuple<K> fg = compose_map(f, g);
    bool clean = true;
    for (int i = 0; i < n; ++i) {
      err.push_back(fg[i] - id[i]);
      if (!err.back().is_zero()) clean = false;
    }
    if (clean) break;
    JetTuple<K> corr = apply_linv(err);
    for (int i = 0; i < n; ++i) g[i] = g[i] - corr[i];
  }
  return g;
}

}  // namespace rsnf
