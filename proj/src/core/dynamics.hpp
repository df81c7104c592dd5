#pragma once

#include <numeric>
#include <optional>
#include <string>

#include "core/matrix.hpp"

namespace rsnf {

/// Formal diffeomorphism jet: components vanish at 0, linear part invertible.
template <class K>
struct DiffeoJet {
  JetTuple<K> comp;

  DiffeoJet() = default;
  explicit DiffeoJet(JetTuple<K> c) : comp(std::move(c)) { validate(); }

  int dim() const { return static_cast<int>(comp.size()); }
  int order() const {
    int o = 255;
    for (const auto& c : comp) o = std::min(o, c.order());
    return o;
  }
  Mat<K> linear() const { return linear_part(comp); }

  void validate() const {
    for (const auto& c : comp) {
      if (static_cast<int>(comp.size()) != c.num_vars())
        throw std::invalid_argument("DiffeoJet: arity mismatch");
      if (!FT<K>::is_zero(c.coeff_key(mono_one())))
        throw std::invalid_argument("DiffeoJet: nonzero constant term");
    }
    Mat<K> inv;
    if (!invert(linear(), inv)) throw std::invalid_argument("DiffeoJet: singular linear part");
  }

  static DiffeoJet identity(int n, int order) { return DiffeoJet(identity_map<K>(n, order)); }

  DiffeoJet inverse() const { return DiffeoJet(functional_inverse(comp)); }

  friend DiffeoJet operator*(const DiffeoJet& f, const DiffeoJet& g) {  // f after g
    return DiffeoJet(compose_map(f.comp, g.comp));
  }

  DiffeoJet power(int m) const {
    DiffeoJet acc = identity(dim(), order());
    for (int i = 0; i < m; ++i) acc = *this * acc;
    return acc;
  }
};

/// Singular formal vector field jet: all components vanish at 0.
template <class K>
struct VectorFieldJet {
  JetTuple<K> comp;

  VectorFieldJet() = default;
  explicit VectorFieldJet(JetTuple<K> c) : comp(std::move(c)) { validate(); }

  int dim() const { return static_cast<int>(comp.size()); }
  int order() const {
    int o = 255;
    for (const auto& c : comp) o = std::min(o, c.order());
    return o;
  }
  Mat<K> linear() const { return linear_part(comp); }

  // Multiplicity nu(X): minimal order of a component.
  int multiplicity() const {
    int v = 256;
    for (const auto& c : comp) v = std::min(v, c.val());
    return v;
  }

  void validate() const {
    for (const auto& c : comp) {
      if (static_cast<int>(comp.size()) != c.num_vars())
        throw std::invalid_argument("VectorFieldJet: arity mismatch");
      if (!FT<K>::is_zero(c.coeff_key(mono_one())))
        throw std::invalid_argument("VectorFieldJet: nonzero constant term");
    }
  }

  static VectorFieldJet zero(int n, int order) {
    return VectorFieldJet(JetTuple<K>(n, Jet<K>(n, order)));
  }

  /// X applied to a function jet. Sound to h's order because components
  /// vanish at the origin.
  Jet<K> apply(const Jet<K>& h) const {
    Jet<K> acc(h.num_vars(), h.order());
    for (int k = 0; k < dim(); ++k)
      acc += comp[k] * h.derive(k).with_order(h.order());
    return acc;
  }

  friend VectorFieldJet operator+(const VectorFieldJet& a, const VectorFieldJet& b) {
    JetTuple<K> c;
    for (int i = 0; i < a.dim(); ++i) c.push_back(a.comp[i] + b.comp[i]);
    return VectorFieldJet(std::move(c));
  }
  friend VectorFieldJet operator-(const VectorFieldJet& a, const VectorFieldJet& b) {
    JetTuple<K> c;
    for (int i = 0; i < a.dim(); ++i) c.push_back(a.comp[i] - b.comp[i]);
    return VectorFieldJet(std::move(c));
  }
};

/// Lie bracket [X, Y] = X(Y) - Y(X), componentwise on coefficient jets.
template <class K>
VectorFieldJet<K> lie_bracket(const VectorFieldJet<K>& x, const VectorFieldJet<K>& y) {
  JetTuple<K> c;
  for (int i = 0; i < x.dim(); ++i) c.push_back(x.apply(y.comp[i]) - y.apply(x.comp[i]));
  return VectorFieldJet<K>(std::move(c));
}

/// Parametrized formal irreducible curve through the origin.
template <class K>
struct CurveParam {
  JetTuple<K> comp;  // univariate jets in s, zero constant term

  CurveParam() = default;
  explicit CurveParam(JetTuple<K> c) : comp(std::move(c)) { validate(); }

  int dim() const { return static_cast<int>(comp.size()); }
  int order() const {
    int o = 255;
    for (const auto& c : comp) o = std::min(o, c.order());
    return o;
  }

  int multiplicity() const {
    int v = 256;
    for (const auto& c : comp) v = std::min(v, c.val());
    return v;
  }

  void validate() const {
    bool nonzero = false;
    for (const auto& c : comp) {
      if (c.num_vars() != 1) throw std::invalid_argument("CurveParam: needs univariate jets");
      if (!FT<K>::is_zero(c.coeff_key(mono_one())))
        throw std::invalid_argument("CurveParam: nonzero constant term");
      if (!c.is_zero()) nonzero = true;
    }
    if (!nonzero) throw std::invalid_argument("CurveParam: zero parametrization");
    // irreducibility up to truncation: gcd of exponents with nonzero coefficient
    int g = 0;
    for (const auto& c : comp)
      for (const auto& [k, v] : c.terms()) g = std::gcd(g, mono_deg(k));
    if (g != 1) throw std::invalid_argument("CurveParam: parametrization is not irreducible");
  }

  JetTuple<K> derivative() const {
    JetTuple<K> d;
    for (const auto& c : comp) d.push_back(c.derive(0));
    return d;
  }

  // Index of a minimal-order component.
  int pivot() const {
    int v = multiplicity(), p = -1;
    for (int i = 0; i < dim(); ++i)
      if (comp[i].val() == v) {
        p = i;
        break;
      }
    return p;
  }

  // Tangent direction: coefficient vector at degree nu.
  std::vector<K> tangent() const {
    int v = multiplicity();
    std::vector<K> t;
    for (const auto& c : comp) t.push_back(c.coeff_key(mono_var(0, v)));
    return t;
  }
};

/// The time-t flow Exp(tX) as a formal diffeomorphism, truncated at `order`.
/// In the exact field the induced jet operator must be nilpotent (D_0 X
/// nilpotent); in the float field the Lie series is summed to tolerance.
template <class K>
DiffeoJet<K> exp_flow(const VectorFieldJet<K>& x, const K& t, int order) {
  int n = x.dim();
  if constexpr (FT<K>::exact) {
    if (!is_nilpotent(x.linear()))
      throw std::domain_error("exp_flow: exact field needs a nilpotent linear part");
  } else {
    // scaling and squaring: the induced jet operator has eigenvalues up to
    // order * max eigenvalue, and summing its exponential directly loses
    // digits to cancellation; halve t until the series is tame
    double scale = 0;
    for (const auto& c : x.comp) scale = std::max(scale, c.max_abs());
    double op = std::abs(t) * scale * (order + 1);
    if (op > 0.5) {
      int halvings = std::min(40, static_cast<int>(std::ceil(std::log2(op / 0.5))));
      K th = t;
      for (int i = 0; i < halvings; ++i) th = th / K(2.0, 0.0);
      DiffeoJet<K> g = exp_flow(x, th, order);
      for (int i = 0; i < halvings; ++i) g = g * g;
      return g;
    }
  }
  JetTuple<K> out;
  long cap;
  if constexpr (FT<K>::exact) {
    // dimension of the jet space bounds the nilpotency index
    cap = 1;
    for (int i = 1; i <= n; ++i) cap = cap * (order + i) / i;
    cap += 4;
  } else {
    cap = 10L * std::max(order, 2);
  }
  for (int i = 0; i < n; ++i) {
    Jet<K> g = Jet<K>::variable(i, n, order);
    Jet<K> acc = g;
    Jet<K> term = g;
    K tpow = FT<K>::one();
    Rational fact_q = 1;
    double fact_d = 1;
    bool converged = false;
    for (long j = 1; j <= cap; ++j) {
      term = x.apply(term);
      if (term.is_zero()) {
        converged = true;
        break;
      }
      tpow = tpow * t;
      K tj;
      if constexpr (FT<K>::exact) {
        fact_q *= j;
        tj = tpow * QC(1 / fact_q);
      } else {
        fact_d *= double(j);
        tj = tpow / K(fact_d, 0.0);
      }
      Jet<K> contrib = tj * term;
      acc += contrib;
      if constexpr (!FT<K>::exact) {
        if (contrib.max_abs() <= 1e-16 * std::max(1.0, acc.max_abs())) {
          converged = true;
          break;
        }
      }
    }
    if (!converged) {
      if constexpr (FT<K>::exact)
        throw std::domain_error("exp_flow: Lie series did not terminate (non-nilpotent input)");
      else
        throw std::domain_error("exp_flow: Lie series did not reach tolerance at term cap");
    }
    out.push_back(acc);
  }
  return DiffeoJet<K>(std::move(out));
}

template <class K>
VectorFieldJet<K> log_unipotent(const DiffeoJet<K>& f);

namespace detail {

inline Rational rational_exact_from_double(double v) {
  Rational r;
  mpq_set_d(r.get_mpq_t(), v);
  return r;
}

inline VectorFieldJet<CD> log_unipotent_via_exact(const DiffeoJet<CD>& f) {
  int n = f.dim();
  int order = f.order();
  double scale = 1.0;
  for (const auto& c : f.comp) scale = std::max(scale, c.max_abs());
  JetTuple<QC> exact;
  for (int i = 0; i < n; ++i) {
    Jet<QC> a(n, order);
    for (const auto& [key, c] : f.comp[i].terms()) {
      if (mono_deg(key) == 1) continue;  // linear part snapped below
      a.set_coeff_key(key, QC(rational_exact_from_double(c.real()),
                              rational_exact_from_double(c.imag())));
    }
    // snap the linear row: entries within tolerance of 0 or 1 become exact
    for (int j = 0; j < n; ++j) {
      CD v = f.comp[i].coeff_key(mono_var(j));
      double tol = 1e-9 * std::max(1.0, scale);
      QC snapped;
      if (std::abs(v - CD(i == j ? 1.0 : 0.0, 0.0)) <= tol)
        snapped = (i == j) ? QC(1) : QC(0);
      else
        snapped = QC(rational_exact_from_double(v.real()), rational_exact_from_double(v.imag()));
      a.set_coeff_key(mono_var(j), snapped);
    }
    exact.push_back(a);
  }
  DiffeoJet<QC> fe(exact);
  Mat<QC> ue = fe.linear() - Mat<QC>::identity(n);
  if (!is_nilpotent(ue))
    throw std::domain_error(
        "log_unipotent: linear part is not exactly unipotent after snapping; supply a cleaner "
        "map");
  auto xe = log_unipotent(fe);
  JetTuple<CD> out;
  for (const auto& c : xe.comp) {
    Jet<CD> a(n, order);
    for (const auto& [key, v] : c.terms()) {
      CD cv = v.to_cd();
      if (std::abs(cv) > 1e-300) a.set_coeff_key(key, cv);
    }
    out.push_back(a);
  }
  return VectorFieldJet<CD>(out);
}

}  // namespace detail

/// Unique nilpotent logarithm of a unipotent diffeomorphism.
///
/// The alternating Delta-series cancels catastrophically in floating point at
/// realistic orders, so the float instantiation converts the coefficients to
/// exact dyadic rationals (doubles are rationals), snaps the linear part to
/// exact unipotency, runs the exact series, and converts back.
template <class K>
VectorFieldJet<K> log_unipotent(const DiffeoJet<K>& f) {
  int n = f.dim();
  Mat<K> u = f.linear() - Mat<K>::identity(n);
  if constexpr (FT<K>::exact) {
    if (!is_nilpotent(u)) throw std::domain_error("log_unipotent: linear part is not unipotent");
  } else {
    if (!is_nilpotent(u, 1e-9 * std::max(1.0, f.linear().max_abs())))
      throw std::domain_error("log_unipotent: linear part is not unipotent");
    return detail::log_unipotent_via_exact(f);
  }
  int order = f.order();
  long cap = 1;
  for (int i = 1; i <= n; ++i) cap = cap * (order + i) / i;
  cap += 4;
  ComposeCache<K> cache(f.comp, order);
  JetTuple<K> out;
  for (int i = 0; i < n; ++i) {
    Jet<K> delta = Jet<K>::variable(i, n, order);
    Jet<K> acc(n, order);
    bool converged = false;
    for (long j = 1; j <= cap; ++j) {
      delta = cache.apply(delta) - delta;  // Delta^j(x_i)
      if (delta.is_zero()) {
        converged = true;
        break;
      }
      K cj;
      if constexpr (FT<K>::exact)
        cj = QC(Rational(j % 2 == 1 ? 1 : -1, j));
      else
        cj = K((j % 2 == 1 ? 1.0 : -1.0) / double(j), 0.0);
      Jet<K> contrib = cj * delta;
      acc += contrib;
      if constexpr (!FT<K>::exact) {
        if (delta.max_abs() <= 1e-16 * std::max(1.0, acc.max_abs())) {
          converged = true;
          break;
        }
      }
    }
    if (!converged)
      throw std::domain_error("log_unipotent: series did not terminate (input not unipotent?)");
    out.push_back(acc);
  }
  return VectorFieldJet<K>(std::move(out));
}

// pow helper valid for both fields
template <class K>
K pow_k(const K& a, long e) {
  if constexpr (FT<K>::exact)
    return qc_pow(a, e);
  else {
    K acc(1.0, 0.0);
    K base = a;
    long n = e;
    if (n < 0) {
      base = K(1.0, 0.0) / a;
      n = -n;
    }
    while (n > 0) {
      if (n & 1) acc *= base;
      base *= base;
      n >>= 1;
    }
    return acc;
  }
}

/// Invariance certificate: h (vector fields) or theta (diffeos), or the index
/// of the first component where the defining identity fails.
template <class K>
struct InvarianceResult {
  bool invariant = false;
  Jet<K> factor;            // h_gamma or theta, univariate
  int failing_component = -1;
  int checked_order = 0;
  bool no_exact_root = false;  // exact field only: leading root not in Q(i)
};

template <class K>
InvarianceResult<K> is_invariant_curve(const VectorFieldJet<K>& x, const CurveParam<K>& g) {
  InvarianceResult<K> res;
  JetTuple<K> xg;
  for (const auto& a : x.comp) xg.push_back(compose(a, g.comp));
  JetTuple<K> gp = g.derivative();
  int piv = g.pivot();
  int vp = gp[piv].val();
  int ord = std::min(xg[piv].order(), gp[piv].order());
  res.checked_order = ord;
  // h = (X o gamma)_piv / gamma'_piv
  Jet<K> num = xg[piv].truncated(ord);
  if (!num.is_zero() && num.val() < vp) {
    res.failing_component = piv;
    return res;
  }
  Jet<K> h;
  if (num.is_zero()) {
    h = Jet<K>(1, std::max(0, ord - vp));
  } else {
    if (!divisible_by_power(num, 0, vp)) {
      res.failing_component = piv;
      return res;
    }
    Jet<K> unit = divide_by_power(gp[piv].truncated(ord), 0, vp);
    h = divide_by_power(num, 0, vp) * inverse_unit(unit);
  }
  int ho = h.order();
  for (int i = 0; i < x.dim(); ++i) {
    int cmp = std::min({ho, gp[i].order(), xg[i].order()});
    Jet<K> lhs = xg[i].truncated(cmp);
    Jet<K> rhs = (h.truncated(cmp) * gp[i].truncated(cmp)).truncated(cmp);
    if constexpr (FT<K>::exact) {
      if (lhs != rhs) {
        res.failing_component = i;
        return res;
      }
    } else {
      double scale = std::max({1.0, lhs.max_abs(), rhs.max_abs()});
      if ((lhs - rhs).max_abs() > 1e-9 * scale) {
        res.failing_component = i;
        return res;
      }
    }
  }
  res.invariant = true;
  res.factor = h;
  res.checked_order = ho;
  return res;
}

namespace detail {

template <class K>
std::vector<K> leading_root_candidates(const K& value, int nu) {
  std::vector<K> cands;
  if constexpr (FT<K>::exact) {
    QC r;
    if (qc_nth_root(value, nu, r)) {
      // all Gaussian-rational nu-th roots: r times the 4th roots of unity that
      // satisfy zeta^nu = 1
      std::vector<QC> units{QC(1), QC(-1), QC(Rational(0), Rational(1)),
                            QC(Rational(0), Rational(-1))};
      for (const auto& u : units)
        if (qc_pow(u, nu) == QC(1)) cands.push_back(r * u);
    }
  } else {
    CD r = std::pow(value, 1.0 / double(nu));
    for (int k = 0; k < nu; ++k)
      cands.push_back(r * std::exp(CD(0, 2 * M_PI * k / nu)));
  }
  return cands;
}

}  // namespace detail

template <class K>
InvarianceResult<K> is_invariant_curve(const DiffeoJet<K>& f, const CurveParam<K>& g) {
  InvarianceResult<K> res;
  JetTuple<K> fg;
  for (const auto& c : f.comp) fg.push_back(compose(c, g.comp));
  int piv = g.pivot();
  int nu = g.comp[piv].val();
  int ord = std::min(fg[piv].order(), g.comp[piv].order());
  res.checked_order = ord;

  Jet<K> a = fg[piv].truncated(ord);
  if (a.is_zero() || a.val() != nu) {
    res.failing_component = piv;
    return res;
  }
  K c0 = g.comp[piv].coeff_key(mono_var(0, nu));
  K lead = field_div(a.coeff_key(mono_var(0, nu)), c0);
  auto cands = detail::leading_root_candidates(lead, nu);
  if (cands.empty()) {
    res.failing_component = piv;
    res.no_exact_root = true;
    return res;
  }
  int theta_ord = ord - nu + 1;
  for (const K& lam : cands) {
    // build theta order-by-order against the pivot component; lifting theta to
    // order `ord` is sound because the unknown tail only feeds degrees > ord
    Jet<K> theta = Jet<K>(1, theta_ord);
    theta.set_coeff_key(mono_var(0, 1), lam);
    K denom = FT<K>::from_long(nu) * c0 * pow_k(lam, nu - 1);
    for (int k = 2; k <= theta_ord; ++k) {
      Jet<K> resid = a - compose(g.comp[piv].truncated(ord), JetTuple<K>{theta.with_order(ord)});
      K r = resid.coeff_key(mono_var(0, nu + k - 1));
      if (FT<K>::is_zero(r)) continue;
      theta.add_coeff_key(mono_var(0, k), field_div(r, denom));
    }
    bool ok = true;
    for (int i = 0; i < f.dim() && ok; ++i) {
      int cmp = std::min(ord, fg[i].order());
      Jet<K> lhs = fg[i].truncated(cmp);
      Jet<K> rhs =
          compose(g.comp[i].truncated(cmp), JetTuple<K>{theta.with_order(cmp)}).truncated(cmp);
      if constexpr (FT<K>::exact) {
        if (lhs != rhs) ok = false;
      } else {
        double scale = std::max({1.0, lhs.max_abs(), rhs.max_abs()});
        if ((lhs - rhs).max_abs() > 1e-9 * scale) ok = false;
      }
    }
    if (ok) {
      res.invariant = true;
      res.factor = theta;
      res.checked_order = theta_ord;
      return res;
    }
  }
  res.failing_component = 0;
  return res;
}

enum class RestrictionTag { hyperbolic_attracting, rationally_neutral, other, indeterminate };

template <class K>
struct RestrictionData {
  bool is_diffeo = false;
  Jet<K> series;        // theta(s) or h_gamma(s)
  K inner_eigenvalue{};  // theta'(0) or h'(0)
  K tangent_eigenvalue{};
  int multiplicity = 1;
  RestrictionTag tag = RestrictionTag::other;
  bool eigenvalue_relation_ok = false;
};

template <class K>
RestrictionTag classify_multiplier(const K& lam) {
  if constexpr (FT<K>::exact) {
    Rational n2 = lam.norm2();
    if (n2 < 1) return RestrictionTag::hyperbolic_attracting;
    if (n2 == 1) {
      // roots of unity inside Q(i) are exactly the fourth roots of unity
      if (lam == QC(1) || lam == QC(-1) || lam == QC(Rational(0), Rational(1)) ||
          lam == QC(Rational(0), Rational(-1)))
        return RestrictionTag::rationally_neutral;
      return RestrictionTag::other;
    }
    return RestrictionTag::other;
  } else {
    double m = std::abs(lam);
    if (m < 1 - 1e-9) return RestrictionTag::hyperbolic_attracting;
    if (m <= 1 + 1e-9) return RestrictionTag::indeterminate;  // refuse to guess from floats
    return RestrictionTag::other;
  }
}

template <class Obj, class K>
RestrictionData<K> restrict_impl(const Obj& obj, const CurveParam<K>& g, bool diffeo) {
  auto inv = is_invariant_curve(obj, g);
  if (!inv.invariant) throw std::domain_error("restrict: curve is not invariant");
  RestrictionData<K> r;
  r.is_diffeo = diffeo;
  r.series = inv.factor;
  r.inner_eigenvalue = inv.factor.coeff_key(mono_var(0, 1));
  r.multiplicity = g.multiplicity();
  // tangent eigenvalue from the linear part acting on the tangent vector
  auto tv = g.tangent();
  Mat<K> lin = linear_part(obj.comp);
  auto image = lin.apply(tv);
  int piv = g.pivot();
  r.tangent_eigenvalue = field_div(image[piv], tv[piv]);
  if (diffeo) {
    K lhs = pow_k(r.inner_eigenvalue, r.multiplicity);
    if constexpr (FT<K>::exact)
      r.eigenvalue_relation_ok = (lhs == r.tangent_eigenvalue);
    else
      r.eigenvalue_relation_ok =
          std::abs(lhs - r.tangent_eigenvalue) <= 1e-9 * std::max(1.0, std::abs(lhs));
  } else {
    K lhs = FT<K>::from_long(r.multiplicity) * r.inner_eigenvalue;
    if constexpr (FT<K>::exact)
      r.eigenvalue_relation_ok = (lhs == r.tangent_eigenvalue);
    else
      r.eigenvalue_relation_ok =
          std::abs(lhs - r.tangent_eigenvalue) <= 1e-9 * std::max(1.0, std::abs(lhs));
  }
  r.tag = diffeo ? classify_multiplier(r.inner_eigenvalue) : RestrictionTag::other;
  return r;
}

template <class K>
RestrictionData<K> restrict_to_curve(const DiffeoJet<K>& f, const CurveParam<K>& g) {
  return restrict_impl(f, g, true);
}
template <class K>
RestrictionData<K> restrict_to_curve(const VectorFieldJet<K>& x, const CurveParam<K>& g) {
  return restrict_impl(x, g, false);
}

/// Projective tangent directions plus the recentered strict transforms at the
/// first `depth` infinitely near points.
template <class K>
struct IteratedTangents {
  std::vector<std::vector<K>> directions;
  std::vector<CurveParam<K>> transforms;
};

template <class K>
IteratedTangents<K> iterated_tangents(const CurveParam<K>& gamma, int depth) {
  IteratedTangents<K> out;
  CurveParam<K> cur = gamma;
  for (int d = 0; d < depth; ++d) {
    int nu = cur.multiplicity();
    int piv = cur.pivot();
    if (cur.order() - nu < 1)
      throw std::domain_error("iterated_tangents: truncation exhausted at depth " +
                              std::to_string(d));
    K cp = cur.comp[piv].coeff_key(mono_var(0, nu));
    std::vector<K> dir;
    for (const auto& c : cur.comp) dir.push_back(field_div(c.coeff_key(mono_var(0, nu)), cp));
    out.directions.push_back(dir);
    // strict transform: pivot stays, others become gamma_j/gamma_piv - xi_j
    Jet<K> unit_inv = inverse_unit(divide_by_power(cur.comp[piv], 0, nu));
    JetTuple<K> next;
    for (int j = 0; j < cur.dim(); ++j) {
      if (j == piv) {
        next.push_back(cur.comp[piv]);
        continue;
      }
      Jet<K> q = divide_by_power(cur.comp[j].truncated(cur.order()), 0, nu) * unit_inv;
      q.add_coeff_key(mono_one(), -dir[j]);
      // constant term is xi_j - xi_j = 0 by construction
      next.push_back(q);
    }
    // re-truncate to common order
    int no = 255;
    for (auto& c : next) no = std::min(no, c.order());
    for (auto& c : next) c = c.truncated(no);
    cur = CurveParam<K>(next);
    out.transforms.push_back(cur);
  }
  return out;
}

/// Largest N (checked consecutively from 0) with ||y - J_N h(x)|| <= |x|^{N+1/2},
/// for a nonsingular graph curve gamma(s) = (s, h(s)).
int asymptotic_contact_order(const CurveParam<CD>& gamma, const std::vector<CD>& point);

/// Least-squares slope of log||y_k - J_N h(x_k)|| against log|x_k|.
double contact_loglog_slope(const CurveParam<CD>& gamma,
                            const std::vector<std::vector<CD>>& orbit_points, int N);

}  // namespace rsnf
