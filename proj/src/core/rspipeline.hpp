#pragma once

#include "core/infgen.hpp"
#include "core/transforms.hpp"
#include "core/turrittin.hpp"

namespace rsnf {

inline Jet<CD> to_cd_jet(const Jet<QC>& a) {
  Jet<CD> j(a.num_vars(), a.order());
  for (const auto& [key, v] : a.terms()) j.set_coeff_key(key, v.to_cd());
  return j;
}

// float Lie series of an exact field, for cross-field residual checks
inline JetTuple<CD> exp_flow_float(const VectorFieldJet<QC>& x, int order) {
  JetTuple<CD> comps;
  for (const auto& c : x.comp) comps.push_back(to_cd_jet(c));
  VectorFieldJet<CD> xf(comps);
  auto f = exp_flow(xf, CD(1, 0), order);
  return f.comp;
}

/// Reduced pair (X, Gamma) in Ramis-Sibuya form: coordinates (x, y) with the
/// curve transverse to {x=0} and
///   X = x^{q+1}(lambda + b x^{max(1,q)} + x^{q+1}A) d/dx
///       + ((D(x) + x^q C) y + x^{q+1} B) d/dy.
template <class K>
struct RSVectorField {
  int q = 0;
  int nu = 0;   // order of D + x^q C at x = 0
  int p = 0;    // q - nu, the Poincare rank of the pair
  K lambda{};
  K b{};
  PolyMatrix<K> d;  // diagonal, degree <= q-1
  Mat<K> c;
  VectorFieldJet<K> field;  // the transformed vector field in the final frame
  CurveParam<K> curve;      // transformed curve (graph over x)
  bool lambda_normalized = true;  // pipeline outputs carry lambda = -1
};

template <class K>
struct RSDiffeo {
  int q = 1;
  int k = 0;  // order of contact with the identity minus one
  int p = 1;  // q - k
  K b{};
  PolyMatrix<K> d;
  Mat<K> c;
  DiffeoJet<K> map;
  CurveParam<K> curve;
};

struct ValidationReport {
  struct Clause {
    std::string name;
    bool pass = false;
    std::string detail;
  };
  std::vector<Clause> clauses;
  bool all_pass() const {
    for (const auto& c : clauses)
      if (!c.pass) return false;
    return true;
  }
  void add(std::string name, bool pass, std::string detail = {}) {
    clauses.push_back({std::move(name), pass, std::move(detail)});
  }
};

namespace rsp_detail {

template <class K>
double field_scale(const JetTuple<K>& comps) {
  if constexpr (FT<K>::exact)
    return 1.0;
  else {
    double s = 1.0;
    for (const auto& c : comps) s = std::max(s, c.max_abs());
    return s;
  }
}

template <class K>
bool tiny(const K& v, double scale) {
  if constexpr (FT<K>::exact)
    return FT<K>::is_zero(v);
  else
    return FT<K>::abs(v) <= 1e-9 * scale;
}

// minimal exponent of x (= var 0) over non-negligible terms; order+1 if none
template <class K>
int val_x(const Jet<K>& j, double scale) {
  int v = j.order() + 1;
  for (const auto& [key, c] : j.terms())
    if (!tiny(c, scale)) v = std::min(v, mono_exp(key, 0));
  return v;
}

template <class K>
int y_degree(MonoKey key, int n) {
  int d = 0;
  for (int i = 1; i < n; ++i) d += mono_exp(key, i);
  return d;
}

// the pure-x part of a component, as a univariate jet
template <class K>
Jet<K> x_part(const Jet<K>& j) {
  Jet<K> out(1, j.order());
  int n = j.num_vars();
  for (const auto& [key, c] : j.terms())
    if (y_degree<K>(key, n) == 0) out.set_coeff_key(mono_var(0, mono_exp(key, 0)), c);
  return out;
}

// y-linear coefficient matrix M(x): entry (i,j) collects x^k y_j monomials of
// component i+1 (components 1..n-1 are the y-components)
template <class K>
PolyMatrix<K> y_linear_matrix(const JetTuple<K>& comps) {
  int n = static_cast<int>(comps.size());
  int ord = comps[0].order();
  PolyMatrix<K> m(n - 1, n - 1, ord);
  for (int i = 1; i < n; ++i)
    for (const auto& [key, c] : comps[i].terms()) {
      if (y_degree<K>(key, n) != 1) continue;
      for (int j = 1; j < n; ++j)
        if (mono_exp(key, j) == 1) {
          m(i - 1, j - 1).add_coeff_key(mono_var(0, mono_exp(key, 0)), c);
          break;
        }
    }
  return m;
}

// change map (x, y) -> (x, y + J(x)) with J a polynomial tuple in x
template <class K>
PermissibleMap<K> y_shift_map(const JetTuple<K>& jpoly, int n, int order) {
  JetTuple<K> fwd = identity_map<K>(n, order);
  JetTuple<K> inv = identity_map<K>(n, order);
  for (int j = 1; j < n; ++j) {
    for (const auto& [key, c] : jpoly[j - 1].terms()) {
      fwd[j].add_coeff_key(mono_var(0, mono_deg(key)), c);
      inv[j].add_coeff_key(mono_var(0, mono_deg(key)), -c);
    }
  }
  return PermissibleMap<K>::make_change(std::move(fwd), std::move(inv));
}

// change map x -> x + a x^{d}, identity on y
template <class K>
PermissibleMap<K> x_poly_map(const K& a, int d, int n, int order) {
  JetTuple<K> fwd = identity_map<K>(n, order);
  fwd[0].add_coeff_key(mono_var(0, d), a);
  return PermissibleMap<K>::make_change(fwd, functional_inverse(fwd));
}

// linear scaling x -> c x
template <class K>
PermissibleMap<K> x_scale_map(const K& c, int n, int order) {
  JetTuple<K> fwd = identity_map<K>(n, order);
  JetTuple<K> inv = identity_map<K>(n, order);
  fwd[0] = c * fwd[0];
  inv[0] = field_div(FT<K>::one(), c) * inv[0];
  return PermissibleMap<K>::make_change(std::move(fwd), std::move(inv));
}

// gauge w = P(x) w~ as a coordinate change on (x, w)
template <class K>
PermissibleMap<K> gauge_map(const PolyMatrix<K>& p, int n, int order) {
  PolyMatrix<K> pinv = polymatrix_inverse_series(p.truncated(order));
  JetTuple<K> fwd = identity_map<K>(n, order);
  JetTuple<K> inv = identity_map<K>(n, order);
  for (int i = 1; i < n; ++i) {
    Jet<K> facc(n, order), iacc(n, order);
    for (int j = 1; j < n; ++j) {
      // entry(i-1, j-1)(x) * y_j, expanded into the n-variable ring
      for (const auto& [key, c] : p(i - 1, j - 1).terms())
        facc.add_coeff_key(mono_var(0, mono_deg(key)) + mono_var(j), c);
      for (const auto& [key, c] : pinv(i - 1, j - 1).terms())
        iacc.add_coeff_key(mono_var(0, mono_deg(key)) + mono_var(j), c);
    }
    fwd[i] = facc;
    inv[i] = iacc;
  }
  return PermissibleMap<K>::make_change(std::move(fwd), std::move(inv));
}

}  // namespace rsp_detail

/// Reparametrize a nonsingular curve transverse to {x=0} as (s, gbar(s)).
template <class K>
CurveParam<K> graph_form(const CurveParam<K>& g) {
  if (g.comp[0].val() != 1)
    throw std::domain_error("graph_form: curve is not transverse to {x=0}");
  JetTuple<K> tau = functional_inverse(JetTuple<K>{g.comp[0]});
  JetTuple<K> out;
  out.push_back(Jet<K>::variable(0, 1, g.order()));
  for (int j = 1; j < g.dim(); ++j) out.push_back(compose(g.comp[j], tau));
  return CurveParam<K>(out);
}

/// Sequence of punctual blow-ups making Gamma nonsingular, each centered at
/// the current tangent direction. Emits permutation changes so the chart
/// variable is always the first coordinate.
template <class K>
std::pair<TransformSequence<K>, CurveParam<K>> desingularize_curve(const CurveParam<K>& gamma) {
  TransformSequence<K> seq;
  CurveParam<K> cur = gamma;
  int n = gamma.dim();
  int guard = 0;
  while (cur.multiplicity() > 1) {
    if (++guard > 64) throw std::domain_error("desingularize_curve: no progress");
    if (cur.order() - cur.multiplicity() < 1)
      throw std::domain_error("desingularize_curve: truncation exhausted");
    int piv = cur.pivot();
    if (piv != 0) {
      // swap coordinates 0 <-> piv
      JetTuple<K> fwd = identity_map<K>(n, 255);
      std::swap(fwd[0], fwd[piv]);
      auto swp = PermissibleMap<K>::make_change(fwd, fwd);
      cur = transform_curve(swp, cur);
      seq.push(std::move(swp), "swap chart variable");
    }
    int nu = cur.multiplicity();
    K c0 = cur.comp[0].coeff_key(mono_var(0, nu));
    std::vector<K> xi;
    for (int j = 1; j < n; ++j) xi.push_back(field_div(cur.comp[j].coeff_key(mono_var(0, nu)), c0));
    auto bl = PermissibleMap<K>::make_punctual_blowup(n, xi);
    cur = transform_curve(bl, cur);
    seq.push(std::move(bl), "desingularization blow-up");
  }
  return {std::move(seq), std::move(cur)};
}

/// Validation of the Ramis-Sibuya clauses for a reduced vector-field pair.
template <class K>
ValidationReport validate_rs(const RSVectorField<K>& f) {
  ValidationReport rep;
  double scale = rsp_detail::field_scale(f.field.comp);
  int n = f.field.dim();
  int q = f.q;

  const Jet<K>& xc = f.field.comp[0];
  Jet<K> xpure = rsp_detail::x_part(xc);
  bool div = divisible_by_power(xpure, 0, q + 1);
  rep.add("x-component divisible by x^{q+1}", div);
  K lam = xpure.coeff1(q + 1);
  rep.add("lambda nonzero", !rsp_detail::tiny(lam, scale));
  if (f.lambda_normalized) {
    if constexpr (FT<K>::exact)
      rep.add("lambda normalized to -1 (q >= 1)", q == 0 || lam == QC(-1));
    else
      rep.add("lambda normalized to -1 (q >= 1)", q == 0 || std::abs(lam - CD(-1, 0)) < 1e-8);
  }
  bool gap_ok = true;
  for (int d = q + 2; d <= 2 * q && q >= 1; ++d)
    if (!rsp_detail::tiny(xpure.coeff1(d), scale)) gap_ok = false;
  rep.add("no pure-x terms between x^{q+2} and x^{2q}", gap_ok);
  // mixed terms of the x-component carry x^{2q+2}
  bool mixed_ok = true;
  for (const auto& [key, c] : xc.terms()) {
    if (rsp_detail::y_degree<K>(key, n) >= 1 && mono_exp(key, 0) < 2 * q + 2 &&
        !rsp_detail::tiny(c, scale))
      mixed_ok = false;
  }
  rep.add("x-component y-terms carry x^{2q+2}", mixed_ok);

  PolyMatrix<K> m = rsp_detail::y_linear_matrix(f.field.comp);
  bool d_diag = true, d_deg = true;
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n - 1; ++j) {
      for (const auto& [key, c] : f.d(i, j).terms()) {
        if (i != j && !rsp_detail::tiny(c, scale)) d_diag = false;
        if (mono_deg(key) > q - 1 && !rsp_detail::tiny(c, scale)) d_deg = false;
      }
    }
  rep.add("D diagonal", d_diag);
  rep.add("deg D <= q-1", d_deg);

  // y-linear matrix equals D + x^q C + O(x^{q+1})
  bool match = true;
  for (int i = 0; i < n - 1 && match; ++i)
    for (int j = 0; j < n - 1 && match; ++j) {
      Jet<K> want = f.d(i, j).with_order(std::min(m.order(), q));
      if (!FT<K>::is_zero(f.c(i, j)) && q <= want.order())
        want.add_coeff_key(mono_var(0, q), f.c(i, j));
      Jet<K> got = m(i, j).truncated(std::min(m.order(), q));
      Jet<K> diff = got - want.truncated(got.order());
      if constexpr (FT<K>::exact) {
        if (!diff.is_zero()) match = false;
      } else {
        if (diff.max_abs() > 1e-8 * scale) match = false;
      }
    }
  rep.add("y-linear part = D + x^q C + O(x^{q+1})", match);

  // D + x^q C not identically zero, order nu
  bool dc_nonzero = false;
  int nu_seen = q + 1;
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n - 1; ++j) {
      Jet<K> e = f.d(i, j).with_order(q);
      if (!FT<K>::is_zero(f.c(i, j))) e.add_coeff_key(mono_var(0, q), f.c(i, j));
      for (const auto& [key, c] : e.terms())
        if (!rsp_detail::tiny(c, scale)) {
          dc_nonzero = true;
          nu_seen = std::min(nu_seen, mono_deg(key));
        }
    }
  rep.add("D + x^q C not identically zero", dc_nonzero);
  rep.add("nu = ord(D + x^q C)", dc_nonzero && nu_seen == f.nu);
  rep.add("p = q - nu", f.p == f.q - f.nu);

  // commutation [D, C] = 0
  PolyMatrix<K> cb = PolyMatrix<K>::from_constant(f.c, f.d.order());
  PolyMatrix<K> comm = f.d * cb - cb * f.d;
  if constexpr (FT<K>::exact)
    rep.add("[D, C] = 0", comm.is_zero());
  else
    rep.add("[D, C] = 0", comm.max_abs() <= 1e-8 * scale);

  // the curve is invariant and the restriction has multiplicity q+1
  auto inv = is_invariant_curve(f.field, f.curve);
  rep.add("curve invariant", inv.invariant);
  if (inv.invariant) {
    int hval = inv.factor.is_zero() ? -1 : inv.factor.val();
    rep.add("ord(X|_Gamma) = q+1", hval == q + 1,
            "got " + std::to_string(hval) + ", want " + std::to_string(q + 1));
  }
  return rep;
}

namespace rsp_detail {

// Decomposition of X = x^e [ x^r u d/dx + (c + A y + x^r Theta) d/dy ].
template <class K>
struct PrincipalShape {
  int e = 0;
  int r = 0;
  Jet<K> u;         // n variables, u(0,0) != 0
  JetTuple<K> c;    // univariate y-free parts, one per y-component
  PolyMatrix<K> a;  // y-linear matrix over x
  bool shape_ok = false;
  std::string why;
};

template <class K>
PrincipalShape<K> decompose_principal(const VectorFieldJet<K>& x) {
  PrincipalShape<K> out;
  int n = x.dim();
  double scale = field_scale(x.comp);
  int e = x.order() + 1;
  for (const auto& cmp : x.comp) e = std::min(e, val_x(cmp, scale));
  if (e > x.order()) {
    out.why = "vector field vanishes to working order";
    return out;
  }
  out.e = e;
  int rv = val_x(x.comp[0], scale) - e;
  out.r = rv;
  // u = xcomp / x^{e+r}
  Jet<K> xc = x.comp[0];
  if (!divisible_by_power(xc, 0, e + rv)) {
    if constexpr (FT<K>::exact) {
      out.why = "x-component not divisible by x^{e+r}";
      return out;
    } else {
      Jet<K> cleaned(xc.num_vars(), xc.order());
      for (const auto& [key, c] : xc.terms())
        if (!tiny(c, scale)) cleaned.set_coeff_key(key, c);
      xc = cleaned;
      if (!divisible_by_power(xc, 0, e + rv)) {
        out.why = "x-component not divisible by x^{e+r}";
        return out;
      }
    }
  }
  out.u = divide_by_power(xc, 0, e + rv);
  if (tiny(out.u.coeff_key(mono_one()), scale)) {
    out.why = "u(0,0) = 0";
    return out;
  }
  for (int j = 1; j < n; ++j) {
    Jet<K> yc = x.comp[j];
    if constexpr (!FT<K>::exact) {
      Jet<K> cleaned(yc.num_vars(), yc.order());
      for (const auto& [key, c] : yc.terms())
        if (!tiny(c, scale)) cleaned.set_coeff_key(key, c);
      yc = cleaned;
    }
    if (!divisible_by_power(yc, 0, e)) {
      out.why = "y-component " + std::to_string(j) + " not divisible by x^e";
      return out;
    }
  }
  JetTuple<K> shifted;
  shifted.push_back(divide_by_power(x.comp[0], 0, e));
  for (int j = 1; j < n; ++j) {
    Jet<K> yc = x.comp[j];
    if constexpr (!FT<K>::exact) {
      Jet<K> cleaned(yc.num_vars(), yc.order());
      for (const auto& [key, c] : yc.terms())
        if (!tiny(c, scale)) cleaned.set_coeff_key(key, c);
      yc = cleaned;
    }
    shifted.push_back(divide_by_power(yc, 0, e));
  }
  for (int j = 1; j < n; ++j) out.c.push_back(x_part(shifted[j]));
  out.a = y_linear_matrix(shifted);
  out.shape_ok = true;
  return out;
}

}  // namespace rsp_detail

/// Pre-RS normalization: from a pre-RS state (q, D, C extracted from
/// the current frame) to the validated RS vector field. Appends its maps.
template <class K>
RSVectorField<K> normalize_pre_rs(VectorFieldJet<K> x, CurveParam<K> curve, int q,
                                  TransformSequence<K>& seq) {
  using namespace rsp_detail;
  int n = x.dim();
  double scale = field_scale(x.comp);

  // (1) y -> y + J_{2q+1} gbar(x): raise the contact of Gamma with the x-axis
  {
    CurveParam<K> g = graph_form(curve);
    JetTuple<K> shift;
    for (int j = 1; j < n; ++j) shift.push_back(g.comp[j].truncated(std::min(2 * q + 1, g.order())));
    bool nontrivial = false;
    for (const auto& s : shift)
      if (!s.is_zero()) nontrivial = true;
    if (nontrivial) {
      auto mp = y_shift_map(shift, n, x.order());
      std::tie(x, curve) = apply_to_vf(mp, x, curve);
      seq.push(std::move(mp), "curve contact shift");
    }
  }

  // (2) q+1 punctual blow-ups (x, y) -> (x, x^{q+1} y)
  for (int i = 0; i < q + 1; ++i) {
    auto bl = PermissibleMap<K>::make_punctual_blowup(n, std::vector<K>(n - 1, FT<K>::zero()));
    std::tie(x, curve) = apply_to_vf(bl, x, curve);
    seq.push(std::move(bl), "pre-RS blow-up");
  }

  // (3) polynomial change in x killing v_1 .. v_{q-1} of u(x, 0)
  for (int d = 1; d <= q - 1; ++d) {
    Jet<K> xpure = x_part(x.comp[0]);
    K v0 = xpure.coeff1(q + 1);
    K vd = xpure.coeff1(q + 1 + d);
    if (tiny(vd, scale)) continue;
    K a = field_div(FT<K>::zero() - vd, FT<K>::from_long(q - d) * v0);
    auto mp = x_poly_map(a, d + 1, n, x.order());
    std::tie(x, curve) = apply_to_vf(mp, x, curve);
    seq.push(std::move(mp), "kill x-coefficient v_" + std::to_string(d));
  }

  // (4) scaling to lambda = -1 (q >= 1 only)
  K lam = x_part(x.comp[0]).coeff1(q + 1);
  if (q >= 1) {
    K target = field_div(FT<K>::zero() - FT<K>::one(), lam);
    K cscale;
    if constexpr (FT<K>::exact) {
      QC root;
      if (!qc_nth_root(target, q, root))
        throw std::domain_error(
            "normalize_pre_rs: -1/lambda has no exact q-th root; use the float field");
      cscale = root;
    } else {
      cscale = std::pow(target, 1.0 / double(q));
    }
    if (!(FT<K>::exact ? (cscale == FT<K>::one()) : (FT<K>::abs(cscale - FT<K>::one()) < 1e-14))) {
      auto mp = x_scale_map(cscale, n, x.order());
      std::tie(x, curve) = apply_to_vf(mp, x, curve);
      seq.push(std::move(mp), "scale lambda to -1");
    }
  }

  // extract the data
  RSVectorField<K> out;
  out.q = q;
  Jet<K> xpure = x_part(x.comp[0]);
  out.lambda = xpure.coeff1(q + 1);
  out.b = xpure.coeff1(2 * q + 1);
  PolyMatrix<K> m = y_linear_matrix(x.comp);
  out.d = PolyMatrix<K>(n - 1, n - 1, std::max(0, q - 1));
  for (int i = 0; i < n - 1; ++i) {
    Jet<K> di(1, std::max(0, q - 1));
    for (const auto& [key, c] : m(i, i).terms())
      if (mono_deg(key) <= q - 1 && !tiny(c, scale)) di.set_coeff_key(key, c);
    out.d(i, i) = di;
  }
  out.c = m.coeff(q);
  if constexpr (!FT<K>::exact) {
    for (int i = 0; i < n - 1; ++i)
      for (int j = 0; j < n - 1; ++j)
        if (tiny(out.c(i, j), scale)) out.c(i, j) = FT<K>::zero();
  }
  int nu = q + 1;
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n - 1; ++j) {
      Jet<K> e = out.d(i, j).with_order(q);
      if (!FT<K>::is_zero(out.c(i, j))) e.add_coeff_key(mono_var(0, q), out.c(i, j));
      if (!e.is_zero()) nu = std::min(nu, e.val());
    }
  if (nu > q) throw std::domain_error("normalize_pre_rs: D + x^q C vanishes (not pre-RS)");
  out.nu = nu;
  out.p = q - nu;
  out.field = x;
  out.curve = curve;

  auto rep = validate_rs(out);
  if (!rep.all_pass()) {
    std::string msg = "normalize_pre_rs: validation failed:";
    for (const auto& c : rep.clauses)
      if (!c.pass) msg += " [" + c.name + "]";
    throw std::domain_error(msg);
  }
  return out;
}

struct PipelineDiagnostics {
  int restriction_order = 0;   // ord of X|_Gamma on input
  int chosen_m = 0;            // perturbation index that validated
  int linear_p = 0;            // Poincare rank of the associated linear system
  int ramification = 1;        // total ramification applied
  std::vector<std::string> m_failures;
};

template <class K>
struct VFReduction {
  RSVectorField<K> form;
  TransformSequence<K> sequence;
  PipelineDiagnostics diag;
};

/// Reduction of (X, Gamma) to Ramis-Sibuya form by permissible transformations.
template <class K>
VFReduction<K> reduce_vf_to_rs(const VectorFieldJet<K>& x_in, const CurveParam<K>& gamma_in,
                               int m_extra = 12) {
  using namespace rsp_detail;
  int n = x_in.dim();
  double scale = field_scale(x_in.comp);
  VFReduction<K> out;

  auto inv0 = is_invariant_curve(x_in, gamma_in);
  if (!inv0.invariant) throw std::domain_error("reduce_vf_to_rs: curve is not invariant");
  if (inv0.factor.is_zero())
    throw std::domain_error(
        "reduce_vf_to_rs: curve lies in the singular locus (restriction vanishes to order)");
  out.diag.restriction_order = inv0.factor.val();

  // 1. desingularize the curve, transporting X along
  VectorFieldJet<K> x = x_in;
  CurveParam<K> gamma = gamma_in;
  {
    auto [seq, gflat] = desingularize_curve(gamma);
    for (const auto& mp : seq.maps) {
      std::tie(x, gamma) = apply_to_vf(mp, x, gamma);
      out.sequence.push(mp, "curve desingularization");
    }
  }

  // 2. align the tangent with the x-axis by a linear change
  {
    auto tv = gamma.tangent();
    int piv = gamma.pivot();
    if (piv != 0 || [&] {
          for (int j = 1; j < n; ++j)
            if (!tiny(tv[j], scale)) return true;
          return false;
        }()) {
      // linear map sending e_piv + sum (tv_j/tv_piv) e_j to e_0
      Mat<K> a = Mat<K>::identity(n);
      // columns: new basis vectors; put the tangent as column 0
      Mat<K> basis(n, n);
      for (int i = 0; i < n; ++i) basis(i, 0) = field_div(tv[i], tv[piv]);
      int col = 1;
      for (int j = 0; j < n && col < n; ++j) {
        if (j == piv) continue;
        basis(j, col) = FT<K>::one();
        ++col;
      }
      Mat<K> binv;
      if (!invert(basis, binv)) throw std::logic_error("tangent alignment basis singular");
      JetTuple<K> fwd = apply_matrix(basis, identity_map<K>(n, x.order()));
      JetTuple<K> inv = apply_matrix(binv, identity_map<K>(n, x.order()));
      auto mp = PermissibleMap<K>::make_change(std::move(fwd), std::move(inv));
      std::tie(x, gamma) = apply_to_vf(mp, x, gamma);
      out.sequence.push(std::move(mp), "tangent alignment");
      (void)a;
    }
  }

  // 3/4. nonsingular shortcut or principal-part shaping
  for (int guard = 0;; ++guard) {
    if (guard > 8) throw std::logic_error("reduce_vf_to_rs: shaping loop did not stabilize");
    auto dec = decompose_principal(x);
    if (!dec.shape_ok) throw std::domain_error("reduce_vf_to_rs: " + dec.why);

    JetTuple<K> xbar;  // X / x^e
    for (const auto& cmp : x.comp) xbar.push_back(divide_by_power(cmp, 0, dec.e));
    bool xbar_singular = true;
    for (const auto& cmp : xbar)
      if (!tiny(cmp.coeff_key(mono_one()), scale)) xbar_singular = false;

    if (!xbar_singular) {
      // nonsingular case: one more punctual blow-up gives pre-RS with q = e-1
      if (dec.e < 1)
        throw std::domain_error("reduce_vf_to_rs: nonsingular field without divisor factor");
      if (tiny(xbar[0].coeff_key(mono_one()), scale))
        throw std::domain_error("reduce_vf_to_rs: regular direction not transverse to x=0");
      // raise the curve contact first so the blow-up chart stays centered
      CurveParam<K> g = graph_form(gamma);
      JetTuple<K> shift;
      for (int j = 1; j < n; ++j)
        shift.push_back(g.comp[j].truncated(std::min(2 * dec.e + 2, g.order())));
      bool nontrivial = false;
      for (const auto& s : shift)
        if (!s.is_zero()) nontrivial = true;
      if (nontrivial) {
        auto mp = y_shift_map(shift, n, x.order());
        std::tie(x, gamma) = apply_to_vf(mp, x, gamma);
        out.sequence.push(std::move(mp), "curve contact shift (regular case)");
      }
      auto bl = PermissibleMap<K>::make_punctual_blowup(n, std::vector<K>(n - 1, FT<K>::zero()));
      std::tie(x, gamma) = apply_to_vf(bl, x, gamma);
      out.sequence.push(std::move(bl), "regular-case blow-up");
      out.diag.chosen_m = 0;
      out.form = normalize_pre_rs(x, gamma, dec.e - 1, out.sequence);
      return out;
    }

    // singular Xbar: shape into x^e [x^r u dx + (c + A y + x^r Theta) dy]
    int r = dec.r;
    if (r < 1) throw std::logic_error("reduce_vf_to_rs: singular field with r = 0");
    // contact shift to push c(x) beyond 2r+1
    {
      CurveParam<K> g = graph_form(gamma);
      JetTuple<K> shift;
      for (int j = 1; j < n; ++j)
        shift.push_back(g.comp[j].truncated(std::min(2 * r + 2, g.order())));
      bool nontrivial = false;
      for (const auto& s : shift)
        if (!s.is_zero()) nontrivial = true;
      if (nontrivial) {
        auto mp = y_shift_map(shift, n, x.order());
        std::tie(x, gamma) = apply_to_vf(mp, x, gamma);
        out.sequence.push(std::move(mp), "curve contact shift");
      }
    }
    // r+1 punctual blow-ups
    for (int i = 0; i < r + 1; ++i) {
      auto bl = PermissibleMap<K>::make_punctual_blowup(n, std::vector<K>(n - 1, FT<K>::zero()));
      std::tie(x, gamma) = apply_to_vf(bl, x, gamma);
      out.sequence.push(std::move(bl), "principal shaping blow-up");
    }
    auto dec2 = decompose_principal(x);
    if (!dec2.shape_ok) throw std::domain_error("reduce_vf_to_rs: " + dec2.why);
    int omega = dec2.a.val();
    if (omega > dec2.a.order())
      throw std::domain_error("reduce_vf_to_rs: linear part vanishes to working order");
    if (omega >= dec2.r) continue;  // x^{-(e+r)} X is nonsingular: retry via the shortcut
    // rebalance so A(0) != 0 is implied: effective r drops by omega
    int s = dec2.r - omega - 1;
    if (s < 0) throw std::logic_error("reduce_vf_to_rs: negative rank after rebalance");

    if (s == 0) {
      out.diag.chosen_m = 0;
      out.form = normalize_pre_rs(x, gamma, dec2.e + omega, out.sequence);
      return out;
    }

    // 5. associated linear system x^{s+1} w' = u(x, gbar)^{-1} Ahat(x) w
    VectorFieldJet<K> x5 = x;
    CurveParam<K> g5 = gamma;
    {
      CurveParam<K> g = graph_form(gamma);
      JetTuple<K> shift;
      for (int j = 1; j < n; ++j) shift.push_back(g.comp[j]);
      bool nontrivial = false;
      for (const auto& ssh : shift)
        if (!ssh.is_zero()) nontrivial = true;
      if (nontrivial) {
        auto mp = y_shift_map(shift, n, x.order());
        std::tie(x5, g5) = apply_to_vf(mp, x5, g5);
        // note: this full shift is only used to READ the linear system; the
        // m-loop below re-derives its own frame, so it is not recorded
      }
    }
    auto dec5 = decompose_principal(x5);
    if (!dec5.shape_ok) throw std::domain_error("reduce_vf_to_rs: " + dec5.why);
    Jet<K> u0(1, x5.order());
    {
      Jet<K> ufull = x_part(dec5.u);
      u0 = ufull;
    }
    LinearSystem<K> lin;
    lin.rank_s = s;
    int lord = dec5.a.order();
    lin.lambda = PolyMatrix<K>(n - 1, n - 1, lord);
    {
      Jet<K> uinv = inverse_unit(u0.truncated(lord));
      PolyMatrix<K> ash = dec5.a.shifted_down(omega);
      for (int i = 0; i < n - 1; ++i)
        for (int j = 0; j < n - 1; ++j) lin.lambda(i, j) = (uinv * ash(i, j)).truncated(lord);
    }
    auto linred = reduce_linear_system(lin);
    out.diag.linear_p = linred.form.p;
    out.diag.ramification = linred.diag.total_ramification;

    // 6. perturbation loop over m
    int p_lin = linred.form.p;
    for (int m = p_lin + 2; m <= p_lin + 2 + m_extra; ++m) {
      VectorFieldJet<K> xm = x;
      CurveParam<K> gm = gamma;
      TransformSequence<K> mseq;
      try {
        CurveParam<K> g = graph_form(gm);
        JetTuple<K> shift;
        for (int j = 1; j < n; ++j)
          shift.push_back(g.comp[j].truncated(std::min(2 * m, g.order())));
        bool nontrivial = false;
        for (const auto& ssh : shift)
          if (!ssh.is_zero()) nontrivial = true;
        if (nontrivial) {
          auto mp = y_shift_map(shift, n, xm.order());
          std::tie(xm, gm) = apply_to_vf(mp, xm, gm);
          mseq.push(std::move(mp), "phi_m shift");
        }
        for (int i = 0; i < m; ++i) {
          auto bl =
              PermissibleMap<K>::make_punctual_blowup(n, std::vector<K>(n - 1, FT<K>::zero()));
          std::tie(xm, gm) = apply_to_vf(bl, xm, gm);
          mseq.push(std::move(bl), "psi_m blow-up");
        }
        // the T-transformation chain as coordinate maps on (x, w)
        for (const auto& entry : linred.cert.entries) {
          PermissibleMap<K> mp;
          if (entry.kind == GaugeEntry<K>::gauge)
            mp = gauge_map(entry.p, n, xm.order());
          else if (entry.kind == GaugeEntry<K>::shearing)
            mp = PermissibleMap<K>::make_shearing(n, entry.shear);
          else
            mp = PermissibleMap<K>::make_ramification(n, entry.alpha);
          std::tie(xm, gm) = apply_to_vf(mp, xm, gm);
          mseq.push(std::move(mp), "T-transformation");
        }
        // validate the pre-RS shape and read off q
        auto decm = decompose_principal(xm);
        if (!decm.shape_ok) throw std::domain_error("pre-RS shape: " + decm.why);
        int qm = decm.e + decm.r - 1;
        // off-diagonal of the y-linear matrix must vanish below x^{qm}
        if (qm >= 1) {
          PolyMatrix<K> mm = y_linear_matrix(xm.comp);
          for (int i = 0; i < n - 1; ++i)
            for (int j = 0; j < n - 1; ++j) {
              if (i == j) continue;
              Jet<K> entry = mm(i, j).truncated(std::min(mm.order(), qm - 1));
              for (const auto& [key, c] : entry.terms())
                if (!tiny(c, scale))
                  throw std::domain_error("pre-RS shape: off-diagonal below x^q");
            }
        }
        auto form = normalize_pre_rs(xm, gm, qm, mseq);
        out.diag.chosen_m = m;
        for (const auto& mp : mseq.maps) out.sequence.maps.push_back(mp);
        for (const auto& note : mseq.divisor_log) out.sequence.divisor_log.push_back(note);
        out.form = std::move(form);
        return out;
      } catch (const std::domain_error& err) {
        out.diag.m_failures.push_back("m=" + std::to_string(m) + ": " + err.what());
      }
    }
    throw std::domain_error(
        "reduce_vf_to_rs: no m in [p+2, p+2+" + std::to_string(m_extra) +
        "] validated; first failures: " +
        (out.diag.m_failures.empty() ? std::string("none") : out.diag.m_failures.front()));
  }
}

enum class DiffeoVerdict { reduced, periodic_curve };

template <class K>
struct DiffeoReduction {
  DiffeoVerdict verdict = DiffeoVerdict::reduced;
  int periodicity_checked_order = 0;  // for the periodic-curve verdict
  long m = 1;
  RSDiffeo<K> form;
  RSVectorField<K> vf_form;
  TransformSequence<K> sequence;
  PipelineDiagnostics diag;
  double exp_residual = 0.0;
};

/// Validation of the Ramis-Sibuya clauses for a reduced diffeomorphism.
template <class K>
ValidationReport validate_rs(const RSDiffeo<K>& f) {
  ValidationReport rep;
  using namespace rsp_detail;
  double scale = field_scale(f.map.comp);
  int n = f.map.dim();
  int q = f.q;
  rep.add("q >= 1", q >= 1);

  Jet<K> xpure = x_part(f.map.comp[0]);
  bool x_ok = true;
  {
    // x - x^{q+1} + b x^{2q+1} + O(x^{2q+2})
    if (!(FT<K>::exact ? xpure.coeff1(1) == FT<K>::one()
                       : FT<K>::abs(xpure.coeff1(1) - FT<K>::one()) < 1e-8))
      x_ok = false;
    for (int d = 2; d <= 2 * q && x_ok; ++d) {
      K c = xpure.coeff1(d);
      if (d == q + 1) {
        if (!(FT<K>::exact ? c == FT<K>::zero() - FT<K>::one()
                           : FT<K>::abs(c + FT<K>::one()) < 1e-8))
          x_ok = false;
      } else if (!tiny(c, scale)) {
        x_ok = false;
      }
    }
  }
  rep.add("x o F = x - x^{q+1} + b x^{2q+1} + O(x^{2q+2})", x_ok);
  bool mixed_ok = true;
  for (const auto& [key, c] : f.map.comp[0].terms())
    if (y_degree<K>(key, n) >= 1 && mono_exp(key, 0) < 2 * q + 2 && !tiny(c, scale))
      mixed_ok = false;
  rep.add("x-component y-terms carry x^{2q+2}", mixed_ok);

  // y o F = exp(D + x^q C) y + O(x^{q+1})
  PolyMatrix<K> m = y_linear_matrix(f.map.comp);
  int cmp_ord = std::min(m.order(), q);
  PolyMatrix<K> principal(n - 1, n - 1, cmp_ord);
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n - 1; ++j) {
      Jet<K> e = f.d(i, j).with_order(cmp_ord);
      if (!FT<K>::is_zero(f.c(i, j)) && q <= cmp_ord)
        e.add_coeff_key(mono_var(0, q), f.c(i, j));
      principal(i, j) = e;
    }
  if (FT<K>::exact && principal.val() == 0) {
    rep.add("y-linear part = exp(D + x^q C) + O(x^{q+1})", false,
            "k = 0 exponentials are transcendental; the exact field cannot represent them");
    rep.add("contact with identity = ord(D + x^q C) + 1", false);
    return rep;
  }
  // exp of the principal part, truncated
  PolyMatrix<K> expm(n - 1, n - 1, cmp_ord);
  for (int i = 0; i < n - 1; ++i) expm(i, i) = Jet<K>::constant(FT<K>::one(), 1, cmp_ord);
  {
    PolyMatrix<K> term(n - 1, n - 1, cmp_ord);
    for (int i = 0; i < n - 1; ++i) term(i, i) = Jet<K>::constant(FT<K>::one(), 1, cmp_ord);
    int exp_cap = FT<K>::exact ? std::max(1, (cmp_ord + 1) * (n - 1) + 2) : 80;
    for (int j = 1; j <= exp_cap; ++j) {
      term = term * principal;
      K fac;
      if constexpr (FT<K>::exact) {
        Rational f1 = 1;
        for (int t = 2; t <= j; ++t) f1 *= t;
        fac = QC(Rational(1) / f1);
      } else {
        double f1 = 1;
        for (int t = 2; t <= j; ++t) f1 *= t;
        fac = K(1.0 / f1, 0);
      }
      PolyMatrix<K> contrib(n - 1, n - 1, cmp_ord);
      bool nonzero = false;
      for (int a2 = 0; a2 < n - 1; ++a2)
        for (int b2 = 0; b2 < n - 1; ++b2) {
          contrib(a2, b2) = fac * term(a2, b2);
          if (!contrib(a2, b2).is_zero()) nonzero = true;
        }
      if (!nonzero) break;
      expm = expm + contrib;
      if constexpr (!FT<K>::exact) {
        if (contrib.max_abs() < 1e-16 * std::max(1.0, expm.max_abs())) break;
      }
    }
  }
  bool lin_ok = true;
  for (int i = 0; i < n - 1 && lin_ok; ++i)
    for (int j = 0; j < n - 1 && lin_ok; ++j) {
      Jet<K> diff = m(i, j).truncated(cmp_ord) - expm(i, j);
      if constexpr (FT<K>::exact) {
        if (!diff.is_zero()) lin_ok = false;
      } else if (diff.max_abs() > 1e-7 * scale) {
        lin_ok = false;
      }
    }
  rep.add("y-linear part = exp(D + x^q C) + O(x^{q+1})", lin_ok);

  bool const_ok = true;
  for (int i = 1; i < n; ++i) {
    Jet<K> b0 = x_part(f.map.comp[i]);
    if (!b0.is_zero() && val_x(b0, scale) <= q) const_ok = false;
  }
  rep.add("y o F(x, 0) = O(x^{q+1})", const_ok);

  // order of contact with the identity = ord(D + x^q C) + 1
  int nu = q + 1;
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n - 1; ++j) {
      Jet<K> e = f.d(i, j).with_order(q);
      if (!FT<K>::is_zero(f.c(i, j))) e.add_coeff_key(mono_var(0, q), f.c(i, j));
      for (const auto& [key, c] : e.terms())
        if (!tiny(c, scale)) nu = std::min(nu, mono_deg(key));
    }
  rep.add("D + x^q C not identically zero", nu <= q);
  int contact = 256;
  for (int i = 0; i < n; ++i) {
    Jet<K> diff = f.map.comp[i] - Jet<K>::variable(i, n, f.map.comp[i].order());
    for (const auto& [key, c] : diff.terms())
      if (!tiny(c, scale)) contact = std::min(contact, mono_deg(key));
  }
  rep.add("contact with identity = ord(D + x^q C) + 1", contact == nu + 1,
          "contact " + std::to_string(contact) + ", nu " + std::to_string(nu));
  rep.add("k = ord(D + x^q C)", f.k == nu);
  rep.add("p = q - k", f.p == f.q - f.k);

  PolyMatrix<K> cb = PolyMatrix<K>::from_constant(f.c, std::max(1, f.d.order()));
  PolyMatrix<K> comm = f.d.truncated(cb.order()) * cb - cb * f.d.truncated(cb.order());
  if constexpr (FT<K>::exact)
    rep.add("[D, C] = 0", comm.is_zero());
  else
    rep.add("[D, C] = 0", comm.max_abs() <= 1e-8 * scale);

  auto inv = is_invariant_curve(f.map, f.curve);
  rep.add("curve invariant", inv.invariant);
  return rep;
}

/// Reduction of a diffeomorphism pair to RS form via an infinitesimal
/// generator of F^m. The float instantiation covers spectra whose logs are
/// transcendental; the exact instantiation requires unipotent D_0 F^m.
template <class K>
DiffeoReduction<K> reduce_diffeo_to_rs(const DiffeoJet<K>& f, const CurveParam<K>& gamma,
                                       const std::vector<PolarEigenvalue>& spec,
                                       int m_extra = 12) {
  DiffeoReduction<K> out;
  auto rest = restrict_to_curve(f, gamma);
  // Rational neutrality certificate from the polar spectrum: the tangent
  // eigenvalue lambda(Gamma) = lambda_Gamma^nu must match a spectrum entry of
  // modulus exactly one (roots of unity stay roots of unity under powers).
  bool neutral = false;
  {
    CD target = FT<K>::to_cd(rest.tangent_eigenvalue);
    double best = 1e9;
    int best_i = -1;
    for (size_t i = 0; i < spec.size(); ++i) {
      double d = std::abs(spec[i].to_cd() - target);
      if (d < best) {
        best = d;
        best_i = static_cast<int>(i);
      }
    }
    if (best_i >= 0 && best <= 1e-7 * std::max(1.0, std::abs(target)) &&
        spec[best_i].modulus == 1)
      neutral = true;
  }
  if (!neutral)
    throw std::domain_error(
        "reduce_diffeo_to_rs: curve is not rationally neutral (polar certificate failed)");

  auto lat = resonance_lattices(spec);
  long m = lat.index.get_si();
  out.m = m;
  auto gen = infinitesimal_generator(f, spec, m);

  // case (i) detection: is Gamma inside Fix(F^m) to working order?
  auto rm = restrict_to_curve(gen.f_power_m, gamma);
  {
    Jet<K> diff = rm.series - Jet<K>::variable(0, 1, rm.series.order());
    bool identity_to_order;
    if constexpr (FT<K>::exact)
      identity_to_order = diff.is_zero();
    else
      identity_to_order = diff.max_abs() <= 1e-10;
    if (identity_to_order) {
      out.verdict = DiffeoVerdict::periodic_curve;
      out.periodicity_checked_order = rm.series.order();
      return out;
    }
  }

  // rational neutrality of the curve forces nu(X|_Gamma) >= 2
  auto invx = is_invariant_curve(gen.generator, gamma);
  if (!invx.invariant)
    throw std::logic_error("reduce_diffeo_to_rs: generator does not leave the curve invariant");
  if (!invx.factor.is_zero() && invx.factor.val() < 2)
    throw std::logic_error("reduce_diffeo_to_rs: nu(X|_Gamma) < 2 contradicts rational neutrality");

  auto vfred = reduce_vf_to_rs(gen.generator, gamma, m_extra);
  out.vf_form = vfred.form;
  out.diag = vfred.diag;

  // transport F^m through the same sequence
  DiffeoJet<K> fm = gen.f_power_m;
  CurveParam<K> gcur = gamma;
  for (const auto& mp : vfred.sequence.maps) {
    auto [ft, gt] = apply_to_diffeo(mp, fm, gcur);
    fm = std::move(ft);
    gcur = std::move(gt);
  }
  out.sequence = vfred.sequence;

  RSDiffeo<K> form;
  form.q = vfred.form.q;
  form.k = vfred.form.nu;
  form.p = form.q - form.k;
  form.b = vfred.form.b;  // note: b of the diffeo is read from the map below
  form.d = vfred.form.d;
  form.c = vfred.form.c;
  form.map = fm;
  form.curve = gcur;
  {
    Jet<K> xpure = rsp_detail::x_part(fm.comp[0]);
    form.b = xpure.coeff1(2 * form.q + 1);
  }
  out.form = form;

  // coherence: exp_flow(reduced X, 1) must reproduce the reduced F^m
  {
    double resid = 0.0;
    if constexpr (FT<K>::exact) {
      // compare through float evaluation of both jets
      auto fx = exp_flow_float(vfred.form.field, fm.order());
      for (int i = 0; i < fm.dim(); ++i) {
        Jet<CD> want = to_cd_jet(fm.comp[i]);
        resid = std::max(resid, (fx[i] - want).max_abs());
      }
    } else {
      auto fx = exp_flow(vfred.form.field, FT<K>::one(), fm.order());
      for (int i = 0; i < fm.dim(); ++i)
        resid = std::max(resid, (fx.comp[i] - fm.comp[i]).max_abs());
    }
    out.exp_residual = resid;
    if (resid > 1e-9 * rsp_detail::field_scale(fm.comp))
      throw std::logic_error("reduce_diffeo_to_rs: exp of the reduced field drifts from F^m");
  }

  auto rep = validate_rs(out.form);
  if (!rep.all_pass()) {
    std::string msg = "reduce_diffeo_to_rs: validation failed:";
    for (const auto& c : rep.clauses)
      if (!c.pass) msg += " [" + c.name + "]";
    throw std::domain_error(msg);
  }
  return out;
}

}  // namespace rsnf
