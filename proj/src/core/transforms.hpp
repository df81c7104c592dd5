#pragma once

#include <optional>

#include "core/dynamics.hpp"

namespace rsnf {

enum class MapKind { change, blowup, ramification, shearing };

/// One permissible transformation, phi: (new coords) -> (old coords).
///  - blowup: center {z_c = 0 for c in center_vars}, chart along
///    center_vars[0], translation xi against the remaining center variables:
///    phi_j = z_c0 * (z_j + xi_j).
///  - ramification: phi = (z_0^l, z_1, ..., z_{n-1}), center {z_0 = 0}.
///  - shearing: phi = (z_0, z_0^{k_1} z_1, ...), exponents k_j >= 0.
///  - change: an explicit local diffeomorphism, both directions stored.
template <class K>
struct PermissibleMap {
  MapKind kind = MapKind::change;
  int n = 0;

  std::vector<int> center_vars;  // blowup
  std::vector<K> xi;             // blowup translation, aligned with center_vars[1..]
  int ram_exp = 1;               // ramification
  std::vector<int> shear_exp;    // shearing, size n-1 (variables 1..n-1)
  JetTuple<K> fwd, inv;          // change

  static PermissibleMap make_change(JetTuple<K> forward, JetTuple<K> inverse) {
    PermissibleMap m;
    m.kind = MapKind::change;
    m.n = static_cast<int>(forward.size());
    m.fwd = std::move(forward);
    m.inv = std::move(inverse);
    return m;
  }
  static PermissibleMap make_change(const DiffeoJet<K>& forward) {
    return make_change(forward.comp, functional_inverse(forward.comp));
  }
  static PermissibleMap make_blowup(int n, std::vector<int> center, std::vector<K> xi) {
    PermissibleMap m;
    m.kind = MapKind::blowup;
    m.n = n;
    m.center_vars = std::move(center);
    m.xi = std::move(xi);
    if (m.center_vars.size() < 2 || m.xi.size() + 1 != m.center_vars.size())
      throw std::invalid_argument("make_blowup: bad center/translation");
    return m;
  }
  static PermissibleMap make_punctual_blowup(int n, std::vector<K> xi) {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    return make_blowup(n, std::move(all), std::move(xi));
  }
  static PermissibleMap make_ramification(int n, int l) {
    PermissibleMap m;
    m.kind = MapKind::ramification;
    m.n = n;
    m.ram_exp = l;
    if (l < 1) throw std::invalid_argument("make_ramification: exponent must be positive");
    return m;
  }
  static PermissibleMap make_shearing(int n, std::vector<int> exps) {
    PermissibleMap m;
    m.kind = MapKind::shearing;
    m.n = n;
    m.shear_exp = std::move(exps);
    if (static_cast<int>(m.shear_exp.size()) != n - 1)
      throw std::invalid_argument("make_shearing: need n-1 exponents");
    for (int e : m.shear_exp)
      if (e < 0) throw std::invalid_argument("make_shearing: exponents must be >= 0");
    return m;
  }

  /// phi as a jet tuple (polynomial map), truncated at `order`.
  JetTuple<K> as_jets(int order) const {
    switch (kind) {
      case MapKind::change: {
        JetTuple<K> t;
        for (const auto& c : fwd) t.push_back(c.truncated(std::min(order, c.order())));
        return t;
      }
      case MapKind::blowup: {
        JetTuple<K> t = identity_map<K>(n, order);
        int c0 = center_vars[0];
        Jet<K> zc = Jet<K>::variable(c0, n, order);
        for (size_t i = 1; i < center_vars.size(); ++i) {
          int j = center_vars[i];
          Jet<K> zj = Jet<K>::variable(j, n, order);
          Jet<K> shift = zj + Jet<K>::constant(xi[i - 1], n, order);
          t[j] = zc * shift;
        }
        return t;
      }
      case MapKind::ramification: {
        JetTuple<K> t = identity_map<K>(n, order);
        Jet<K> p(n, order);
        p.set_coeff_key(mono_var(0, ram_exp), FT<K>::one());
        t[0] = p;
        return t;
      }
      case MapKind::shearing: {
        JetTuple<K> t = identity_map<K>(n, order);
        for (int j = 1; j < n; ++j) {
          int k = shear_exp[j - 1];
          if (k == 0) continue;
          Jet<K> m(n, order);
          MonoKey key = mono_var(0, k) + mono_var(j);
          m.set_coeff_key(key, FT<K>::one());
          t[j] = m;
        }
        return t;
      }
    }
    throw std::logic_error("unreachable");
  }
};

template <class K>
struct TransformSequence {
  std::vector<PermissibleMap<K>> maps;
  // total-divisor description: exponent of the divisor coordinate created by
  // each non-diffeo step, in application order
  std::vector<std::string> divisor_log;

  void push(PermissibleMap<K> m, std::string note = {}) {
    maps.push_back(std::move(m));
    divisor_log.push_back(std::move(note));
  }
  int size() const { return static_cast<int>(maps.size()); }
};

namespace detail {

template <class K>
void require_center_invariant_vf(const PermissibleMap<K>& map, const VectorFieldJet<K>& x) {
  std::vector<int> center;
  if (map.kind == MapKind::blowup)
    center = map.center_vars;
  else if (map.kind == MapKind::ramification)
    center = {0};
  else
    return;
  std::vector<bool> in_center(map.n, false);
  for (int c : center) in_center[c] = true;
  for (int c : center) {
    for (const auto& [k, v] : x.comp[c].terms()) {
      bool ok = false;
      for (int i = 0; i < map.n && !ok; ++i)
        if (in_center[i] && mono_exp(k, i) > 0) ok = true;
      if (!ok) throw std::domain_error("transform: center is not invariant for the vector field");
    }
  }
}

template <class K>
void require_center_invariant_diffeo(const PermissibleMap<K>& map, const DiffeoJet<K>& f) {
  std::vector<int> center;
  if (map.kind == MapKind::blowup)
    center = map.center_vars;
  else if (map.kind == MapKind::ramification)
    center = {0};
  else
    return;
  std::vector<bool> in_center(map.n, false);
  for (int c : center) in_center[c] = true;
  for (int c : center) {
    for (const auto& [k, v] : f.comp[c].terms()) {
      bool ok = false;
      for (int i = 0; i < map.n && !ok; ++i)
        if (in_center[i] && mono_exp(k, i) > 0) ok = true;
      if (!ok) throw std::domain_error("transform: center is not invariant for the diffeomorphism");
    }
  }
}

}  // namespace detail

/// Strict transform of a curve. Blow-ups accept singular curves; ramifications
/// insist on a nonsingular transverse curve (otherwise the transform is not
/// unique) and reparametrize so the first component is s.
template <class K>
CurveParam<K> transform_curve(const PermissibleMap<K>& map, const CurveParam<K>& g) {
  switch (map.kind) {
    case MapKind::change: {
      JetTuple<K> out;
      for (const auto& c : map.inv) out.push_back(compose(c, g.comp));
      return CurveParam<K>(out);
    }
    case MapKind::blowup: {
      int c0 = map.center_vars[0];
      int nu = g.comp[c0].val();
      for (int c : map.center_vars)
        if (g.comp[c].val() < nu)
          throw std::domain_error("transform_curve: chart variable is not minimal on the center");
      Jet<K> unit_inv = inverse_unit(divide_by_power(g.comp[c0], 0, nu));
      JetTuple<K> out = g.comp;
      for (size_t i = 1; i < map.center_vars.size(); ++i) {
        int j = map.center_vars[i];
        Jet<K> q = divide_by_power(g.comp[j].truncated(g.order()), 0, nu) * unit_inv;
        q.add_coeff_key(mono_one(), -map.xi[i - 1]);
        if (!FT<K>::is_zero(q.coeff_key(mono_one()))) {
          if constexpr (FT<K>::exact)
            throw std::domain_error("transform_curve: translation does not match the curve tangent");
          else if (FT<K>::abs(q.coeff_key(mono_one())) > 1e-9)
            throw std::domain_error("transform_curve: translation does not match the curve tangent");
          else
            q.set_coeff_key(mono_one(), FT<K>::zero());
        }
        out[j] = q;
      }
      int no = 255;
      for (const auto& c : out) no = std::min(no, c.order());
      for (auto& c : out) c = c.truncated(no);
      return CurveParam<K>(out);
    }
    case MapKind::ramification: {
      if (g.comp[0].val() != 1)
        throw std::domain_error("transform_curve: ramification needs a transverse nonsingular curve");
      // reparametrize so gamma_0(s) = s, then substitute s -> s^l elsewhere
      JetTuple<K> tau = functional_inverse(JetTuple<K>{g.comp[0]});
      JetTuple<K> out;
      out.push_back(Jet<K>::variable(0, 1, g.order()));
      Jet<K> sl(1, g.order());
      sl.set_coeff_key(mono_var(0, map.ram_exp), FT<K>::one());
      for (int j = 1; j < g.dim(); ++j) {
        Jet<K> hj = compose(g.comp[j], tau);  // graph form over the first coordinate
        out.push_back(compose(hj, JetTuple<K>{sl}));
      }
      return CurveParam<K>(out);
    }
    case MapKind::shearing: {
      int nu0 = g.comp[0].val();
      Jet<K> unit_inv = inverse_unit(divide_by_power(g.comp[0], 0, nu0));
      JetTuple<K> out = g.comp;
      for (int j = 1; j < g.dim(); ++j) {
        int k = map.shear_exp[j - 1];
        if (k == 0) continue;
        if (g.comp[j].val() < k * nu0)
          throw std::domain_error("transform_curve: shearing produces a pole on the curve");
        Jet<K> q = g.comp[j].truncated(g.order());
        for (int rep = 0; rep < k; ++rep) q = divide_by_power(q, 0, nu0) * unit_inv;
        out[j] = q;
      }
      int no = 255;
      for (const auto& c : out) no = std::min(no, c.order());
      for (auto& c : out) c = c.truncated(no);
      return CurveParam<K>(out);
    }
  }
  throw std::logic_error("unreachable");
}

/// Pullback of a vector field: unique X~ with phi_* X~ = X.
template <class K>
VectorFieldJet<K> transform_vf(const PermissibleMap<K>& map, const VectorFieldJet<K>& x) {
  detail::require_center_invariant_vf(map, x);
  int n = x.dim();
  int order = x.order();
  switch (map.kind) {
    case MapKind::change: {
      // X~(z_j) = [sum_k a_k d(inv_j)/dz_k] o fwd
      JetTuple<K> out;
      for (int j = 0; j < n; ++j) {
        Jet<K> acc(n, order);
        for (int k = 0; k < n; ++k)
          acc += x.comp[k] * map.inv[j].derive(k).with_order(order);
        out.push_back(compose(acc, map.fwd));
      }
      return VectorFieldJet<K>(out);
    }
    case MapKind::blowup: {
      JetTuple<K> phi = map.as_jets(order);
      int c0 = map.center_vars[0];
      JetTuple<K> aphi;
      for (int j = 0; j < n; ++j) aphi.push_back(compose(x.comp[j], phi));
      JetTuple<K> out = aphi;
      for (size_t i = 1; i < map.center_vars.size(); ++i) {
        int j = map.center_vars[i];
        Jet<K> shift = Jet<K>::variable(j, n, order) + Jet<K>::constant(map.xi[i - 1], n, order);
        Jet<K> num = aphi[j] - shift * aphi[c0];
        if (!divisible_by_power(num, c0, 1))
          throw std::domain_error("transform_vf: blow-up division failed (tangency violation)");
        out[j] = divide_by_power(num, c0, 1);
      }
      int no = 255;
      for (const auto& c : out) no = std::min(no, c.order());
      for (auto& c : out) c = c.truncated(no);
      return VectorFieldJet<K>(out);
    }
    case MapKind::ramification: {
      JetTuple<K> phi = map.as_jets(order);
      int l = map.ram_exp;
      JetTuple<K> out;
      Jet<K> a0phi = compose(x.comp[0], phi);
      if (!divisible_by_power(a0phi, 0, l - 1))
        throw std::domain_error("transform_vf: ramification division failed");
      K linv;
      if constexpr (FT<K>::exact)
        linv = QC(rat(1, l));
      else
        linv = K(1.0 / double(l), 0.0);
      out.push_back(linv * divide_by_power(a0phi, 0, l - 1));
      for (int j = 1; j < n; ++j) out.push_back(compose(x.comp[j], phi));
      int no = 255;
      for (const auto& c : out) no = std::min(no, c.order());
      for (auto& c : out) c = c.truncated(no);
      return VectorFieldJet<K>(out);
    }
    case MapKind::shearing: {
      JetTuple<K> phi = map.as_jets(order);
      JetTuple<K> aphi;
      for (int j = 0; j < n; ++j) aphi.push_back(compose(x.comp[j], phi));
      JetTuple<K> out = aphi;
      for (int j = 1; j < n; ++j) {
        int k = map.shear_exp[j - 1];
        if (k == 0) continue;
        // (a_j o phi - k x^{k-1} w_j a_0 o phi) / x^k
        Jet<K> corr(n, order);
        MonoKey key = mono_var(0, k - 1) + mono_var(j);
        corr.set_coeff_key(key, FT<K>::from_long(k));
        Jet<K> num = aphi[j] - corr * aphi[0];
        if (!divisible_by_power(num, 0, k))
          throw std::domain_error("transform_vf: shearing produced a pole (impermissible exponents)");
        out[j] = divide_by_power(num, 0, k);
      }
      int no = 255;
      for (const auto& c : out) no = std::min(no, c.order());
      for (auto& c : out) c = c.truncated(no);
      return VectorFieldJet<K>(out);
    }
  }
  throw std::logic_error("unreachable");
}

/// Conjugate diffeomorphism: unique F~ with phi o F~ = F o phi.
template <class K>
DiffeoJet<K> transform_diffeo(const PermissibleMap<K>& map, const DiffeoJet<K>& f) {
  detail::require_center_invariant_diffeo(map, f);
  int n = f.dim();
  int order = f.order();
  switch (map.kind) {
    case MapKind::change: {
      JetTuple<K> mid = compose_map(f.comp, map.fwd);
      JetTuple<K> out = compose_map(map.inv, mid);
      return DiffeoJet<K>(out);
    }
    case MapKind::blowup: {
      JetTuple<K> phi = map.as_jets(order);
      JetTuple<K> fphi = compose_map(f.comp, phi);
      int c0 = map.center_vars[0];
      if (!divisible_by_power(fphi[c0], c0, 1))
        throw std::domain_error("transform_diffeo: chart component not divisible");
      Jet<K> den = divide_by_power(fphi[c0], c0, 1);
      if (FT<K>::is_zero(den.coeff_key(mono_one())))
        throw std::domain_error("transform_diffeo: unit extraction failed (tangent line not invariant)");
      Jet<K> den_inv = inverse_unit(den);
      JetTuple<K> out = fphi;
      for (size_t i = 1; i < map.center_vars.size(); ++i) {
        int j = map.center_vars[i];
        if (!divisible_by_power(fphi[j], c0, 1))
          throw std::domain_error("transform_diffeo: center not invariant");
        out[j] = divide_by_power(fphi[j], c0, 1) * den_inv -
                 Jet<K>::constant(map.xi[i - 1], n, den_inv.order());
      }
      int no = 255;
      for (const auto& c : out) no = std::min(no, c.order());
      for (auto& c : out) c = c.truncated(no);
      return DiffeoJet<K>(out);
    }
    case MapKind::ramification: {
      JetTuple<K> phi = map.as_jets(order);
      JetTuple<K> fphi = compose_map(f.comp, phi);
      int l = map.ram_exp;
      if (!divisible_by_power(fphi[0], 0, l))
        throw std::domain_error("transform_diffeo: ramification center not invariant");
      Jet<K> u = divide_by_power(fphi[0], 0, l);
      K a = u.coeff_key(mono_one());
      K root;
      if constexpr (FT<K>::exact) {
        QC r;
        if (!qc_nth_root(a, l, r))
          throw std::domain_error(
              "transform_diffeo: leading unit has no exact l-th root; use the float field");
        root = r;
      } else {
        root = std::pow(a, 1.0 / double(l));
      }
      Jet<K> ul = nth_root_unit(u, l, root);
      JetTuple<K> out = fphi;
      out[0] = Jet<K>::variable(0, n, ul.order()) * ul;
      int no = 255;
      for (const auto& c : out) no = std::min(no, c.order());
      for (auto& c : out) c = c.truncated(no);
      return DiffeoJet<K>(out);
    }
    case MapKind::shearing: {
      JetTuple<K> phi = map.as_jets(order);
      JetTuple<K> fphi = compose_map(f.comp, phi);
      if (!divisible_by_power(fphi[0], 0, 1))
        throw std::domain_error("transform_diffeo: shearing needs invariant {x=0}");
      Jet<K> xunit = divide_by_power(fphi[0], 0, 1);
      if (FT<K>::is_zero(xunit.coeff_key(mono_one())))
        throw std::domain_error("transform_diffeo: shearing unit extraction failed");
      Jet<K> xunit_inv = inverse_unit(xunit);
      JetTuple<K> out = fphi;
      for (int j = 1; j < n; ++j) {
        int k = map.shear_exp[j - 1];
        if (k == 0) continue;
        if (!divisible_by_power(fphi[j], 0, k))
          throw std::domain_error("transform_diffeo: shearing produced a pole");
        Jet<K> q = divide_by_power(fphi[j], 0, k);
        for (int rep = 0; rep < k; ++rep) q = q * xunit_inv;
        out[j] = q;
      }
      int no = 255;
      for (const auto& c : out) no = std::min(no, c.order());
      for (auto& c : out) c = c.truncated(no);
      return DiffeoJet<K>(out);
    }
  }
  throw std::logic_error("unreachable");
}

/// Transform a pair (X, Gamma); checks that the restriction multiplicity does
/// not drop, per the permissible-transform proposition.
template <class K>
std::pair<VectorFieldJet<K>, CurveParam<K>> apply_to_vf(const PermissibleMap<K>& map,
                                                        const VectorFieldJet<K>& x,
                                                        const CurveParam<K>& g) {
  auto inv_before = is_invariant_curve(x, g);
  auto xt = transform_vf(map, x);
  auto gt = transform_curve(map, g);
  if (inv_before.invariant) {
    auto inv_after = is_invariant_curve(xt, gt);
    if (!inv_after.invariant)
      throw std::logic_error("apply_to_vf: invariance lost by a permissible transform");
    int before = inv_before.factor.is_zero() ? inv_before.factor.order() + 1
                                             : inv_before.factor.val();
    int after = inv_after.factor.is_zero() ? inv_after.factor.order() + 1
                                           : inv_after.factor.val();
    if (after < std::min(before, inv_after.factor.order() + 1))
      throw std::logic_error("apply_to_vf: restriction multiplicity dropped");
  }
  return {std::move(xt), std::move(gt)};
}

template <class K>
std::pair<DiffeoJet<K>, CurveParam<K>> apply_to_diffeo(const PermissibleMap<K>& map,
                                                       const DiffeoJet<K>& f,
                                                       const CurveParam<K>& g) {
  auto ft = transform_diffeo(map, f);
  auto gt = transform_curve(map, g);
  return {std::move(ft), std::move(gt)};
}

/// Spectrum after k punctual blow-ups following the curve: {lambda, mu_j / lambda^k}.
template <class K>
std::vector<K> blowup_spectrum(const std::vector<K>& spec, const K& lambda, int k) {
  if (FT<K>::is_zero(lambda)) throw std::invalid_argument("blowup_spectrum: lambda = 0");
  bool found = false;
  for (const auto& s : spec)
    if constexpr (FT<K>::exact) {
      if (s == lambda) found = true;
    } else {
      if (std::abs(s - lambda) < 1e-12) found = true;
    }
  if (!found) throw std::invalid_argument("blowup_spectrum: lambda not in the spectrum");
  std::vector<K> out{lambda};
  K lk = pow_k(lambda, k);
  bool skipped = false;
  for (const auto& s : spec) {
    bool is_lam;
    if constexpr (FT<K>::exact)
      is_lam = (s == lambda);
    else
      is_lam = std::abs(s - lambda) < 1e-12;
    if (is_lam && !skipped) {
      skipped = true;
      continue;
    }
    out.push_back(field_div(s, lk));
  }
  return out;
}

/// A shearing as the equivalent sequence of permissible blow-ups with centers
/// {x=0} cut with {w_j=0 : k_j >= d}, d = 1..max k.
template <class K>
TransformSequence<K> shearing_as_blowups(int n, const std::vector<int>& k) {
  TransformSequence<K> seq;
  int kmax = 0;
  for (int e : k) kmax = std::max(kmax, e);
  for (int d = 1; d <= kmax; ++d) {
    std::vector<int> center{0};
    for (int j = 0; j < n - 1; ++j)
      if (k[j] >= d) center.push_back(j + 1);
    std::vector<K> xi(center.size() - 1, FT<K>::zero());
    seq.push(PermissibleMap<K>::make_blowup(n, center, xi), "shearing stage d=" + std::to_string(d));
  }
  return seq;
}

/// Point transport (float coordinates). map: new -> old, unmap: old -> new.
std::vector<CD> map_point(const PermissibleMap<CD>& map, const std::vector<CD>& p);
std::vector<CD> unmap_point(const PermissibleMap<CD>& map, const std::vector<CD>& p);

template <class K>
PermissibleMap<CD> map_to_cd(const PermissibleMap<K>& m) {
  if constexpr (!FT<K>::exact)
    return m;
  else {
    PermissibleMap<CD> out;
    out.kind = m.kind;
    out.n = m.n;
    out.center_vars = m.center_vars;
    for (const auto& c : m.xi) out.xi.push_back(FT<K>::to_cd(c));
    out.ram_exp = m.ram_exp;
    out.shear_exp = m.shear_exp;
    auto conv = [](const JetTuple<K>& t) {
      JetTuple<CD> r;
      for (const auto& j : t) {
        Jet<CD> c(j.num_vars(), j.order());
        for (const auto& [key, v] : j.terms()) c.set_coeff_key(key, FT<K>::to_cd(v));
        r.push_back(c);
      }
      return r;
    };
    out.fwd = conv(m.fwd);
    out.inv = conv(m.inv);
    return out;
  }
}

}  // namespace rsnf
