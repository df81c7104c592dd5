#pragma once

#include "core/rspipeline.hpp"
#include "core/trigexact.hpp"

namespace rsnf {

/// Per-direction classification of the y-variables of an RS diffeomorphism.
struct DirectionReport {
  int dir_index = 0;          // xi = exp(2 pi i dir_index / (k+p))
  Rational angle;             // dir_index / (k+p), mod 1
  CD xi;
  std::vector<bool> node;     // per y-variable, true = node direction
  std::vector<int> r;         // first asymptotic significant order per variable
  int r_max = 0;              // max over all variables
  int t = 0;                  // max over node variables (valid iff has_node)
  bool has_node = false;
  int stable_dim = 1;         // s = 1 + node count
  bool exact_signs = true;    // signs decided in Q(sqrt2, sqrt3)
};

struct SectorParams {
  double d = 0.5, e = 0.5, eps = 0.2;
  double c = 0.0;
  int m = 0;
  int r_max = 0;  // wedge exponent is r_max + 1
  int grid = 64;
  int halvings = 0;
  bool verified = false;
  bool interval_pass = false;
  std::string failure;
};

namespace cls_detail {

// coefficient A_{j,l} of dbar_j(x) = d_j(x)/x^k at degree l (0 <= l <= p-1),
// plus A_{j,p} := C(j, j)
template <class K>
K dbar_coeff(const RSDiffeo<K>& f, int j, int l) {
  if (l == f.p) return f.c(j, j);
  return f.d(j, j).coeff1(f.k + l);
}

}  // namespace cls_detail

/// The k+p attracting directions as unit complex numbers.
template <class K>
std::vector<CD> attracting_directions(const RSDiffeo<K>& f) {
  int q = f.q;
  std::vector<CD> out;
  for (int t = 0; t < q; ++t)
    out.push_back(std::exp(CD(0, 2 * M_PI * t / q)));
  return out;
}

/// Node/saddle tags and first significant orders for one attracting
/// direction. Exact-field coefficients with direction count dividing 24 get
/// exact sign decisions; otherwise a float margin is used and a sign within
/// the margin raises an error demanding exact input.
template <class K>
DirectionReport classify_direction(const RSDiffeo<K>& f, int dir_index) {
  int q = f.q, k = f.k, p = f.p;
  int ny = f.map.dim() - 1;
  DirectionReport rep;
  rep.dir_index = ((dir_index % q) + q) % q;
  rep.angle = rat(rep.dir_index, q);
  rep.xi = std::exp(CD(0, 2 * M_PI * rep.dir_index / q));
  rep.node.assign(ny, false);
  rep.r.assign(ny, p);

  double scale = rsp_detail::field_scale(f.map.comp);
  for (int j = 0; j < ny; ++j) {
    bool dj_zero = true;
    for (int l = 0; l <= p - 1; ++l)
      if (!rsp_detail::tiny(cls_detail::dbar_coeff(f, j, l), scale)) dj_zero = false;

    int first_sign = 0;  // sign of the first nonzero Re
    int r_j = p;
    for (int l = (p >= 1 ? 0 : p); l <= p - 1; ++l) {
      K a = cls_detail::dbar_coeff(f, j, l);
      // Re(xi^{k+l} A): angle (k+l) * dir/q
      Rational ang = rat((long(k) + l) * rep.dir_index, q);
      int sgn = 0;
      bool decided = false;
      if constexpr (FT<K>::exact) {
        QuadVal cv, sv;
        if (exact_cos_sin(ang, cv, sv)) {
          QuadVal re = a.re * cv - a.im * sv;
          sgn = re.sign();
          decided = true;
        }
      }
      if (!decided) {
        rep.exact_signs = false;
        // quarter-turn powers are exact complex units: keeps genuinely-zero
        // real parts recognizable in the float field
        Rational ang4 = ang * 4;
        CD xi_pow;
        if (ang4.get_den() == 1) {
          static const CD units[4] = {CD(1, 0), CD(0, 1), CD(-1, 0), CD(0, -1)};
          xi_pow = units[((ang4.get_num().get_si() % 4) + 4) % 4];
        } else {
          xi_pow = std::exp(CD(0, 2 * M_PI * rat_to_double(ang)));
        }
        double re = (xi_pow * FT<K>::to_cd(a)).real();
        double margin = 1e-9 * std::max(1.0, scale);
        if (re == 0.0 || FT<K>::abs(a) <= margin) {
          sgn = 0;
        } else if (std::abs(re) <= margin) {
          throw std::domain_error(
              "classify_direction: sign within the float margin of zero; supply exact "
              "coefficients");
        } else {
          sgn = re > 0 ? 1 : -1;
        }
      }
      if (sgn != 0 && r_j == p) {
        r_j = l;
        first_sign = sgn;
      }
    }
    rep.r[j] = r_j;
    rep.node[j] = (p >= 1) && !dj_zero && first_sign < 0;
  }
  rep.r_max = 0;
  for (int j = 0; j < ny; ++j) rep.r_max = std::max(rep.r_max, rep.r[j]);
  rep.t = 0;
  for (int j = 0; j < ny; ++j)
    if (rep.node[j]) {
      rep.has_node = true;
      rep.t = std::max(rep.t, rep.r[j]);
    }
  rep.stable_dim = 1;
  for (int j = 0; j < ny; ++j)
    if (rep.node[j]) ++rep.stable_dim;
  return rep;
}

/// Float model of the blocks after reordering (nodes first) and rescaling the
/// nilpotent entries of C2 to c/2, in the frame rotated so the direction is
/// the positive real axis.
struct BlockModel {
  int n = 0;             // ambient dimension
  int k = 0, p = 0, q = 0;
  int sdim = 1;          // s = 1 + node count
  CD b{};
  std::vector<int> order;            // new index -> old y-index
  std::vector<std::vector<CD>> dbar; // per y-variable (new order), coeffs 0..p-1
  std::vector<CD> cdiag;             // A_{j,p} per variable (new order)
  Mat<CD> c2;                        // saddle-block constant matrix (rescaled)
  Mat<CD> c1;                        // node-block constant matrix
  bool c2_positive_real = false;
  DiffeoJet<CD> map;                 // rotated + permuted + rescaled map
  CurveParam<CD> curve;
};

template <class K>
DiffeoJet<CD> to_cd_map(const DiffeoJet<K>& f) {
  if constexpr (FT<K>::exact) {
    JetTuple<CD> comps;
    for (const auto& c : f.comp) comps.push_back(to_cd_jet(c));
    return DiffeoJet<CD>(comps);
  } else {
    return f;
  }
}

template <class K>
CurveParam<CD> to_cd_curve(const CurveParam<K>& g) {
  if constexpr (FT<K>::exact) {
    JetTuple<CD> comps;
    for (const auto& c : g.comp) comps.push_back(to_cd_jet(c));
    return CurveParam<CD>(comps);
  } else {
    return g;
  }
}

/// Variables permuted so node variables come first; Jordan structure of C
/// verified; nilpotent entries rescaled to c/2. Throws if C is not in Jordan
/// form in the supplied coordinates.
template <class K>
BlockModel block_partition(const RSDiffeo<K>& f, const DirectionReport& rep, double c_constant) {
  int n = f.map.dim();
  int ny = n - 1;
  double scale = rsp_detail::field_scale(f.map.comp);

  // verify C is Jordan-like: off-diagonal entries only on the superdiagonal,
  // nonzero only between variables with equal d_j and equal diagonal of C
  for (int i = 0; i < ny; ++i)
    for (int j = 0; j < ny; ++j) {
      if (i == j || j == i + 1) continue;
      if (!rsp_detail::tiny(f.c(i, j), scale))
        throw std::domain_error("block_partition: C is not in Jordan canonical form");
    }
  for (int i = 0; i + 1 < ny; ++i) {
    if (rsp_detail::tiny(f.c(i, i + 1), scale)) continue;
    bool same_d = true;
    Jet<K> diff = f.d(i, i) - f.d(i + 1, i + 1);
    if constexpr (FT<K>::exact) {
      same_d = diff.is_zero();
    } else {
      same_d = diff.max_abs() <= 1e-9 * scale;
    }
    bool same_c = rsp_detail::tiny(f.c(i, i) - f.c(i + 1, i + 1), scale);
    if (!same_d || !same_c)
      throw std::domain_error("block_partition: superdiagonal entry crosses distinct blocks");
    if (rep.node[i] != rep.node[i + 1])
      throw std::logic_error("block_partition: a Jordan chain crosses the node/saddle split");
  }

  BlockModel bm;
  bm.n = n;
  bm.k = f.k;
  bm.p = f.p;
  bm.q = f.q;
  bm.b = FT<K>::to_cd(f.b);
  bm.sdim = rep.stable_dim;

  // stable permutation: nodes first, preserving order (keeps chains intact)
  for (int j = 0; j < ny; ++j)
    if (rep.node[j]) bm.order.push_back(j);
  for (int j = 0; j < ny; ++j)
    if (!rep.node[j]) bm.order.push_back(j);

  // rotate x so the direction is R+; permute y so node variables come first.
  // fwd maps new coordinates to old: old_x = xi * new_x, old_y[order[j]] = new_y[j]
  DiffeoJet<CD> map = to_cd_map(f.map);
  CurveParam<CD> curve = to_cd_curve(f.curve);
  CD xi = rep.xi;
  {
    JetTuple<CD> fwd = identity_map<CD>(n, map.order());
    fwd[0] = xi * Jet<CD>::variable(0, n, map.order());
    for (int j = 0; j < ny; ++j) fwd[1 + bm.order[j]] = Jet<CD>::variable(1 + j, n, map.order());
    JetTuple<CD> inv = identity_map<CD>(n, map.order());
    inv[0] = (CD(1, 0) / xi) * Jet<CD>::variable(0, n, map.order());
    for (int j = 0; j < ny; ++j) inv[1 + j] = Jet<CD>::variable(1 + bm.order[j], n, map.order());
    auto mp = PermissibleMap<CD>::make_change(fwd, inv);
    auto [ft, gt] = apply_to_diffeo(mp, map, curve);
    map = ft;
    curve = gt;
  }

  // collect permuted data in the rotated frame: dbar_j(x) coefficients get
  // twisted by xi^{k+l}
  for (int j = 0; j < ny; ++j) {
    int oj = bm.order[j];
    std::vector<CD> coeffs(std::max(0, f.p), CD(0, 0));
    for (int l = 0; l <= f.p - 1; ++l) {
      CD a = FT<K>::to_cd(cls_detail::dbar_coeff(f, oj, l));
      coeffs[l] = a * std::pow(xi, double(f.k + l));
    }
    bm.dbar.push_back(coeffs);
    bm.cdiag.push_back(FT<K>::to_cd(f.c(oj, oj)) * std::pow(xi, double(f.q)));
  }

  int nnode = bm.sdim - 1;
  int nsad = ny - nnode;
  bm.c1 = Mat<CD>(nnode, nnode);
  bm.c2 = Mat<CD>(nsad, nsad);
  for (int i = 0; i < ny; ++i)
    for (int j = 0; j < ny; ++j) {
      CD v = FT<K>::to_cd(f.c(bm.order[i], bm.order[j]));
      if (i < nnode && j < nnode) bm.c1(i, j) = v;
      if (i >= nnode && j >= nnode) bm.c2(i - nnode, j - nnode) = v;
    }

  // rescale so every nonzero nilpotent entry of C2 equals c/2 (the node block
  // keeps its chains; only the saddle block feeds the cocycle estimates)
  {
    std::vector<CD> t(ny, CD(1, 0));
    for (int i = 0; i + 1 < ny; ++i) {
      CD e = (i >= nnode && i + 1 >= nnode) ? bm.c2(i - nnode, i + 1 - nnode) : CD(0, 0);
      if (i < nnode && i + 1 < nnode) e = bm.c1(i, i + 1);
      if (std::abs(e) == 0.0) continue;
      t[i + 1] = t[i] * (CD(c_constant / 2.0, 0) / e);
    }
    JetTuple<CD> fwd = identity_map<CD>(n, map.order());
    JetTuple<CD> inv = identity_map<CD>(n, map.order());
    bool nontrivial = false;
    for (int j = 0; j < ny; ++j) {
      if (std::abs(t[j] - CD(1, 0)) > 1e-15) nontrivial = true;
      fwd[1 + j] = t[j] * Jet<CD>::variable(1 + j, n, map.order());
      inv[1 + j] = (CD(1, 0) / t[j]) * Jet<CD>::variable(1 + j, n, map.order());
    }
    if (nontrivial) {
      auto mp = PermissibleMap<CD>::make_change(fwd, inv);
      auto [ft, gt] = apply_to_diffeo(mp, map, curve);
      map = ft;
      curve = gt;
      for (int i = 0; i < nnode; ++i)
        for (int j = 0; j < nnode; ++j)
          if (i != j) bm.c1(i, j) = bm.c1(i, j) * t[j + 0] / t[i + 0];
      for (int i = 0; i < nsad; ++i)
        for (int j = 0; j < nsad; ++j)
          if (i != j) bm.c2(i, j) = bm.c2(i, j) * t[nnode + j] / t[nnode + i];
    }
  }

  bm.c2_positive_real = true;
  for (int i = 0; i < nsad; ++i)
    if (bm.c2(i, i).real() <= 0) bm.c2_positive_real = false;

  bm.map = map;
  bm.curve = curve;
  return bm;
}

/// Grid verification of the sector inequalities; halves (d, e, eps) until the
/// grid passes, starting from (0.5, 0.5, 0.2) with c from the dominant
/// coefficients.
SectorParams synthesize_sector(const BlockModel& bm, const DirectionReport& rep, int m,
                               int grid = 64, int max_halvings = 40);

/// Re-check the inequalities on a fresh grid (used by the property tests).
bool verify_sector(const BlockModel& bm, const DirectionReport& rep, const SectorParams& sp,
                   int grid);

/// Interval-arithmetic pass over the grid cells (exact-coefficient forms only
/// benefit; the float pass still bounds roundoff pessimistically).
bool verify_sector_intervals(const BlockModel& bm, const DirectionReport& rep,
                             const SectorParams& sp, int grid);

}  // namespace rsnf
