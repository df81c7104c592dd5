#pragma once

#include <functional>
#include <numeric>
#include <optional>

#include "core/matrix.hpp"
#include "core/roots.hpp"

namespace rsnf {

/// x^{s+1} w' = Lambda(x) w, Lambda truncated at a stated working order.
template <class K>
struct LinearSystem {
  int rank_s = 0;
  PolyMatrix<K> lambda;

  int dim() const { return lambda.rows(); }
  int order() const { return lambda.order(); }
};

template <class K>
struct GaugeEntry {
  enum Kind { gauge, shearing, ramification } kind = gauge;
  PolyMatrix<K> p;         // gauge: polynomial matrix, P(0) invertible
  std::vector<int> shear;  // shearing exponents, one per variable
  int alpha = 1;           // ramification order
};

template <class K>
struct GaugeCertificate {
  std::vector<GaugeEntry<K>> entries;
  // Poincare rank before/after every auto-chosen shearing, for monotonicity
  // monitoring (a shearing may never increase the rank in this pipeline).
  std::vector<std::pair<int, int>> shearing_ranks;
};

/// Reduced form: x^{p+1} w' = (Dbar(x) + x^p Cbar + O(x^{p+1})) w.
template <class K>
struct RSLinearForm {
  int p = 0;
  PolyMatrix<K> dbar;      // diagonal, honest polynomials of degree <= p-1
  Mat<K> cbar;
  PolyMatrix<K> remainder; // tail of order >= p+1, to working order
  int working_order = 0;
};

template <class K>
double sys_scale(const PolyMatrix<K>& m) {
  if constexpr (FT<K>::exact)
    return 1.0;
  else
    return std::max(1.0, m.max_abs());
}

template <class K>
bool k_is_zero(const K& v, double scale) {
  if constexpr (FT<K>::exact)
    return FT<K>::is_zero(v);
  else
    return FT<K>::abs(v) <= 1e-10 * scale;
}

template <class K>
PolyMatrix<K> chop(const PolyMatrix<K>& m, double scale) {
  if constexpr (FT<K>::exact)
    return m;
  else {
    PolyMatrix<K> out(m.rows(), m.cols(), m.order());
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) {
        Jet<K> e(1, m.order());
        for (const auto& [key, v] : m(i, j).terms())
          if (!k_is_zero(v, scale)) e.set_coeff_key(key, v);
        out(i, j) = e;
      }
    return out;
  }
}

/// Series inverse of a polynomial matrix with invertible constant term.
template <class K>
PolyMatrix<K> polymatrix_inverse_series(const PolyMatrix<K>& p) {
  int n = p.rows();
  int ord = p.order();
  Mat<K> p0 = p.coeff(0), p0inv;
  if (!invert(p0, p0inv)) throw std::domain_error("gauge matrix is singular at 0");
  std::vector<Mat<K>> q(ord + 1, Mat<K>(n, n));
  q[0] = p0inv;
  K minus_one = FT<K>::zero() - FT<K>::one();
  for (int k = 1; k <= ord; ++k) {
    Mat<K> acc(n, n);
    for (int i = 1; i <= k; ++i) acc = acc + p.coeff(i) * q[k - i];
    q[k] = minus_one * (p0inv * acc);
  }
  PolyMatrix<K> out(n, n, ord);
  for (int k = 0; k <= ord; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!FT<K>::is_zero(q[k](i, j))) out(i, j).set_coeff_key(mono_var(0, k), q[k](i, j));
  return out;
}

template <class K>
LinearSystem<K> apply_gauge(const LinearSystem<K>& sys, const PolyMatrix<K>& p) {
  PolyMatrix<K> pinv = polymatrix_inverse_series(p.truncated(sys.order()));
  PolyMatrix<K> dp = p.truncated(sys.order()).derivative().shifted_up(sys.rank_s + 1);
  PolyMatrix<K> nl = pinv * (sys.lambda * p.truncated(sys.order()) - dp.truncated(sys.order()));
  return {sys.rank_s, nl.truncated(sys.order())};
}

template <class K>
LinearSystem<K> apply_shearing(const LinearSystem<K>& sys, const std::vector<int>& k) {
  int n = sys.dim();
  int kmax = 0, kmin = 1 << 20;
  for (int e : k) {
    kmax = std::max(kmax, e);
    kmin = std::min(kmin, e);
  }
  int new_order = sys.order() - (kmax - kmin);
  if (new_order < 0) throw std::domain_error("shearing: working order exhausted");
  PolyMatrix<K> out(n, n, new_order);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      int d = k[j] - k[i];
      Jet<K> e = sys.lambda(i, j).truncated(sys.order());
      if (d >= 0) {
        Jet<K> xd(1, new_order);
        xd.set_coeff_key(mono_var(0, d), FT<K>::one());
        out(i, j) = e.truncated(new_order) * xd;
      } else {
        if (!divisible_by_power(e, 0, -d))
          throw std::domain_error("shearing produced a pole (impermissible exponents)");
        out(i, j) = divide_by_power(e, 0, -d).truncated(new_order);
      }
    }
  // minus x^s diag(k)
  for (int i = 0; i < n; ++i) {
    if (k[i] == 0 || sys.rank_s > new_order) continue;
    out(i, i).add_coeff_key(mono_var(0, sys.rank_s), -FT<K>::from_long(k[i]));
  }
  return {sys.rank_s, out};
}

template <class K>
LinearSystem<K> apply_ramification(const LinearSystem<K>& sys, int alpha) {
  int n = sys.dim();
  long new_order = long(alpha) * sys.order() + alpha - 1;
  if (new_order > 254) new_order = 254;
  PolyMatrix<K> out(n, n, static_cast<int>(new_order));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jet<K> e(1, static_cast<int>(new_order));
      for (const auto& [key, v] : sys.lambda(i, j).terms()) {
        long d = long(alpha) * mono_deg(key);
        if (d > new_order) continue;
        e.set_coeff_key(mono_var(0, static_cast<int>(d)), FT<K>::from_long(alpha) * v);
      }
      out(i, j) = e;
    }
  return {sys.rank_s * alpha, out};
}

template <class K>
LinearSystem<K> apply_entry(const LinearSystem<K>& sys, const GaugeEntry<K>& e) {
  switch (e.kind) {
    case GaugeEntry<K>::gauge:
      return apply_gauge(sys, e.p);
    case GaugeEntry<K>::shearing:
      return apply_shearing(sys, e.shear);
    case GaugeEntry<K>::ramification:
      return apply_ramification(sys, e.alpha);
  }
  throw std::logic_error("unreachable");
}

template <class K>
LinearSystem<K> replay_certificate(const LinearSystem<K>& input, const GaugeCertificate<K>& cert) {
  LinearSystem<K> cur = input;
  for (const auto& e : cert.entries) cur = apply_entry(cur, e);
  return cur;
}

namespace turr_detail {

template <class K>
Mat<K> lambda0(const LinearSystem<K>& sys) {
  return sys.lambda.coeff(0);
}

// eigenvalues with multiplicity; exact path requires splitting over Q(i)
template <class K>
std::vector<std::pair<K, int>> eigen_split(const Mat<K>& a) {
  std::vector<std::pair<K, int>> out;
  if constexpr (FT<K>::exact) {
    std::vector<ExactEigen> e;
    if (!exact_eigenvalues(a, e))
      throw std::domain_error(
          "reduce_linear_system: leading matrix has an irreducible factor of degree >= 2 over "
          "Q(i); algebraic extensions are out of desk scope");
    for (const auto& ev : e) out.emplace_back(ev.value, ev.multiplicity);
  } else {
    auto e = float_eigenvalues(a, 1e-7);
    for (const auto& ev : e) out.emplace_back(ev.value, ev.multiplicity);
  }
  return out;
}

// generalized eigenspace basis columns, exact or float
template <class K>
Mat<K> generalized_eigenbasis(const Mat<K>& a, const std::vector<std::pair<K, int>>& eig) {
  int n = a.rows();
  Mat<K> p(n, n);
  int col = 0;
  double scale = std::max(1.0, a.max_abs());
  for (const auto& [mu, mult] : eig) {
    Mat<K> shifted = a;
    for (int i = 0; i < n; ++i) shifted(i, i) -= mu;
    Mat<K> pw = mat_pow(shifted, mult);
    auto ker = kernel_basis(pw, 1e-8);
    if (static_cast<int>(ker.size()) != mult)
      throw std::logic_error("generalized eigenspace dimension mismatch");
    for (const auto& v : ker) {
      for (int i = 0; i < n; ++i) p(i, col) = v[i];
      ++col;
    }
  }
  (void)scale;
  if (col != n) throw std::logic_error("generalized eigenbasis incomplete");
  return p;
}

// Solve A X - X B = C (spectra of A and B disjoint).
template <class K>
Mat<K> sylvester_solve(const Mat<K>& a, const Mat<K>& b, const Mat<K>& c) {
  int ma = a.rows(), mb = b.rows();
  int nn = ma * mb;
  Mat<K> big(nn, nn);
  std::vector<std::vector<K>> rhs(1, std::vector<K>(nn, FT<K>::zero()));
  auto idx = [&](int i, int j) { return i * mb + j; };
  for (int i = 0; i < ma; ++i)
    for (int j = 0; j < mb; ++j) {
      for (int k = 0; k < ma; ++k) big(idx(i, j), idx(k, j)) += a(i, k);
      for (int l = 0; l < mb; ++l) big(idx(i, j), idx(i, l)) -= b(l, j);
      rhs[0][idx(i, j)] = c(i, j);
    }
  if (!solve_linear(big, rhs))
    throw std::logic_error("sylvester_solve: singular operator (spectra not disjoint?)");
  Mat<K> x(ma, mb);
  for (int i = 0; i < ma; ++i)
    for (int j = 0; j < mb; ++j) x(i, j) = rhs[0][idx(i, j)];
  return x;
}

}  // namespace turr_detail

/// Splitting lemma: gauge w = P(x) w~ making Lambda block-diagonal along the
/// generalized eigenspaces of Lambda(0). Emits the constant gauge and the
/// order-by-order correction as certificate entries.
template <class K>
struct SplitResult {
  LinearSystem<K> sys;              // block-diagonal to working order
  std::vector<int> block_sizes;
  std::vector<GaugeEntry<K>> entries;
};

template <class K>
SplitResult<K> split_blocks(const LinearSystem<K>& sys) {
  int n = sys.dim();
  Mat<K> a0 = turr_detail::lambda0(sys);
  auto eig = turr_detail::eigen_split(a0);
  if (eig.size() < 2)
    throw std::domain_error("split_blocks: leading matrix has a single eigenvalue");

  SplitResult<K> out;
  for (const auto& [mu, mult] : eig) out.block_sizes.push_back(mult);

  Mat<K> pc = turr_detail::generalized_eigenbasis(a0, eig);
  GaugeEntry<K> const_entry;
  const_entry.kind = GaugeEntry<K>::gauge;
  const_entry.p = PolyMatrix<K>::from_constant(pc, sys.order());
  LinearSystem<K> cur = apply_gauge(sys, const_entry.p);
  out.entries.push_back(const_entry);

  // order-by-order correction: P = I + sum P_k x^k with vanishing diagonal
  // blocks, B block-diagonal, from Lambda P - x^{s+1} P' = P B
  int ord = cur.order();
  Mat<K> b0 = cur.lambda.coeff(0);
  std::vector<Mat<K>> acoef(ord + 1, Mat<K>(n, n));
  for (int k = 0; k <= ord; ++k) acoef[k] = cur.lambda.coeff(k);
  std::vector<Mat<K>> pk(ord + 1, Mat<K>(n, n)), bk(ord + 1, Mat<K>(n, n));
  pk[0] = Mat<K>::identity(n);
  bk[0] = b0;
  std::vector<int> offs{0};
  for (int bsz : out.block_sizes) offs.push_back(offs.back() + bsz);
  int nb = static_cast<int>(out.block_sizes.size());

  for (int k = 1; k <= ord; ++k) {
    Mat<K> rhs(n, n);
    for (int i = 1; i <= k; ++i) rhs = rhs + acoef[i] * pk[k - i];
    if (k > sys.rank_s) {
      int j = k - sys.rank_s;
      rhs = rhs - FT<K>::from_long(j) * pk[j];
    }
    for (int j = 1; j <= k - 1; ++j) rhs = rhs - pk[j] * bk[k - j];
    // now solve A0 P_k - P_k A0 - B_k = -rhs blockwise
    Mat<K> pkm(n, n), bkm(n, n);
    for (int b1 = 0; b1 < nb; ++b1)
      for (int b2 = 0; b2 < nb; ++b2) {
        int r0 = offs[b1], r1 = offs[b1 + 1], c0 = offs[b2], c1 = offs[b2 + 1];
        if (b1 == b2) {
          for (int i = r0; i < r1; ++i)
            for (int j = c0; j < c1; ++j) bkm(i, j) = rhs(i, j);
          continue;
        }
        Mat<K> ablk(r1 - r0, r1 - r0), bblk(c1 - c0, c1 - c0), cblk(r1 - r0, c1 - c0);
        for (int i = r0; i < r1; ++i)
          for (int j = r0; j < r1; ++j) ablk(i - r0, j - r0) = b0(i, j);
        for (int i = c0; i < c1; ++i)
          for (int j = c0; j < c1; ++j) bblk(i - c0, j - c0) = b0(i, j);
        for (int i = r0; i < r1; ++i)
          for (int j = c0; j < c1; ++j) cblk(i - r0, j - c0) = rhs(i, j);
        Mat<K> x = turr_detail::sylvester_solve(ablk, bblk, cblk);
        for (int i = r0; i < r1; ++i)
          for (int j = c0; j < c1; ++j) pkm(i, j) = -x(i - r0, j - c0);
      }
    pk[k] = pkm;
    bk[k] = bkm;
  }
  PolyMatrix<K> pseries(n, n, ord);
  for (int k = 0; k <= ord; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!FT<K>::is_zero(pk[k](i, j))) pseries(i, j).set_coeff_key(mono_var(0, k), pk[k](i, j));
  GaugeEntry<K> poly_entry;
  poly_entry.kind = GaugeEntry<K>::gauge;
  poly_entry.p = pseries;
  cur = apply_gauge(cur, pseries);
  cur.lambda = chop(cur.lambda, sys_scale(sys.lambda));
  out.entries.push_back(poly_entry);

  // verify block-diagonality off the blocks
  for (int b1 = 0; b1 < nb; ++b1)
    for (int b2 = 0; b2 < nb; ++b2) {
      if (b1 == b2) continue;
      for (int i = offs[b1]; i < offs[b1 + 1]; ++i)
        for (int j = offs[b2]; j < offs[b2 + 1]; ++j)
          if (!cur.lambda(i, j).is_zero())
            throw std::logic_error("split_blocks: off-diagonal residual after splitting gauge");
    }
  out.sys = cur;
  return out;
}

struct ReduceDiagnostics {
  int steps = 0;
  int total_ramification = 1;
  std::vector<std::pair<int, int>> shearing_ranks;  // (before, after)
  std::string note;
};

template <class K>
struct ReduceOutcome {
  RSLinearForm<K> form;
  GaugeCertificate<K> cert;
  ReduceDiagnostics diag;
};

namespace turr_detail {

struct NeedRamification {
  int alpha;
};

template <class K>
struct SubResult {
  int p = 0;
  PolyMatrix<K> dbar;  // diagonal, degree <= p-1 honest
  Mat<K> cbar;
};

// lift a block-local entry to full dimension at block offset
template <class K>
GaugeEntry<K> lift_entry(const GaugeEntry<K>& e, int off, int bsz, int n, int order) {
  GaugeEntry<K> out;
  out.kind = e.kind;
  if (e.kind == GaugeEntry<K>::gauge) {
    PolyMatrix<K> p(n, n, order);
    for (int i = 0; i < n; ++i) p(i, i) = Jet<K>::constant(FT<K>::one(), 1, order);
    for (int i = 0; i < bsz; ++i)
      for (int j = 0; j < bsz; ++j) p(off + i, off + j) = e.p(i, j).truncated(order);
    out.p = p;
  } else if (e.kind == GaugeEntry<K>::shearing) {
    out.shear.assign(n, 0);
    for (int i = 0; i < bsz; ++i) out.shear[off + i] = e.shear[i];
  } else {
    throw std::logic_error("lift_entry: ramification inside a block reduction");
  }
  return out;
}

template <class K>
int effective_val(const LinearSystem<K>& sys, double scale) {
  int v = sys.order() + 1;
  for (int i = 0; i < sys.dim(); ++i)
    for (int j = 0; j < sys.dim(); ++j) {
      const auto& e = sys.lambda(i, j);
      for (const auto& [key, c] : e.terms()) {
        if (!k_is_zero(c, scale)) {
          v = std::min(v, mono_deg(key));
          break;
        }
      }
    }
  return v;
}

// characteristic polynomial of Lambda(x) as jets; coefficient vector c[0..m]
template <class K>
std::vector<Jet<K>> poly_char(const LinearSystem<K>& sys) {
  int m = sys.dim();
  int ord = sys.order();
  std::vector<Jet<K>> c(m + 1, Jet<K>(1, ord));
  c[m] = Jet<K>::constant(FT<K>::one(), 1, ord);
  // Faddeev-LeVerrier over the jet ring
  std::vector<std::vector<Jet<K>>> mcur(m, std::vector<Jet<K>>(m, Jet<K>(1, ord)));
  for (int i = 0; i < m; ++i) mcur[i][i] = Jet<K>::constant(FT<K>::one(), 1, ord);
  for (int k = 1; k <= m; ++k) {
    // mcur = Lambda * mcur
    std::vector<std::vector<Jet<K>>> nxt(m, std::vector<Jet<K>>(m, Jet<K>(1, ord)));
    for (int i = 0; i < m; ++i)
      for (int l = 0; l < m; ++l) {
        if (sys.lambda(i, l).is_zero()) continue;
        for (int j = 0; j < m; ++j) nxt[i][j] += sys.lambda(i, l) * mcur[l][j];
      }
    mcur = nxt;
    Jet<K> tr(1, ord);
    for (int i = 0; i < m; ++i) tr += mcur[i][i];
    K factor;
    if constexpr (FT<K>::exact)
      factor = QC(rat(-1, k));
    else
      factor = K(-1.0 / double(k), 0.0);
    Jet<K> ck = factor * tr;
    c[m - k] = ck;
    for (int i = 0; i < m; ++i) mcur[i][i] += ck;
  }
  return c;
}

// Newton-polygon slope of det(T - Lambda(x)): theta = min val(c_i)/i. The
// denominator of the minimal slope picks the ramification order.
template <class K>
std::optional<std::pair<long, long>> newton_slope(const LinearSystem<K>& sys, double scale) {
  auto cp = poly_char(sys);
  int m = sys.dim();
  std::optional<std::pair<long, long>> best;  // (num, den) reduced
  for (int i = 1; i <= m; ++i) {
    const Jet<K>& ci = cp[m - i];
    int v = sys.order() + 1;
    bool nz = false;
    for (const auto& [key, c] : ci.terms())
      if (!k_is_zero(c, scale)) {
        v = mono_deg(key);
        nz = true;
        break;
      }
    if (!nz) continue;
    long num = v, den = i;
    long g = std::gcd(num, den);
    num /= g;
    den /= g;
    if (!best || num * best->second < best->first * den) best = {num, den};
  }
  return best;
}

}  // namespace turr_detail

/// One shearing or ramification step with certificate entry, exposed for the
/// CLI and for tests.
template <class K>
std::pair<LinearSystem<K>, GaugeEntry<K>> shear_step(const LinearSystem<K>& sys,
                                                     const std::vector<int>& k) {
  GaugeEntry<K> e;
  e.kind = GaugeEntry<K>::shearing;
  e.shear = k;
  return {apply_shearing(sys, k), e};
}

template <class K>
std::pair<LinearSystem<K>, GaugeEntry<K>> ramify_step(const LinearSystem<K>& sys, int alpha) {
  GaugeEntry<K> e;
  e.kind = GaugeEntry<K>::ramification;
  e.alpha = alpha;
  return {apply_ramification(sys, alpha), e};
}

/// Required input truncation for reduce_linear_system (working-order budget:
/// (s+1)*m*alpha_max + p_bound + 2 with alpha_max = m! and p <= s*alpha_max).
inline int required_linear_order(int s, int m) {
  long fact = 1;
  for (int i = 2; i <= m; ++i) fact *= i;
  long need = long(s + 1) * m * fact + long(s) * fact + 2;
  return static_cast<int>(std::min(need, 200L));
}

template <class K>
ReduceOutcome<K> reduce_linear_system(const LinearSystem<K>& input);

namespace turr_detail {

// Core recursion; throws NeedRamification when a fractional slope appears.
// `allow_renorm` gates factoring x out of Lambda: that rewrite is only sound
// when no peeled scalar sits above this subproblem (inside a peel the parent
// keeps its rank, so zero leading matrices peel as mu = 0 instead).
template <class K>
SubResult<K> attempt(LinearSystem<K> sys, std::vector<GaugeEntry<K>>& cert,
                     ReduceDiagnostics& diag, double scale, int depth, bool allow_renorm) {
  int m = sys.dim();
  if (depth > 64) throw std::logic_error("reduce_linear_system: recursion depth exceeded");
  while (true) {
    if (++diag.steps > 400)
      throw std::domain_error("reduce_linear_system: step budget exceeded (no stabilization)");
    sys.lambda = chop(sys.lambda, scale);

    if (sys.rank_s == 0) {
      SubResult<K> r;
      r.p = 0;
      r.dbar = PolyMatrix<K>(m, m, 0);
      r.cbar = sys.lambda.coeff(0);
      return r;
    }
    int v = effective_val(sys, scale);
    if (v > sys.order())
      throw std::domain_error("reduce_linear_system: working order exhausted (matrix vanished)");
    if (v > 0 && allow_renorm) {
      // rank renormalization: x^{s+1} w' = x^g Lambda^ w is the same ODE as
      // x^{s-g+1} w' = Lambda^ w
      int g = std::min(v, sys.rank_s);
      sys.lambda = sys.lambda.shifted_down(g);
      sys.rank_s -= g;
      continue;
    }
    if (v > 0) {
      // peel mu = 0: recurse on Lambda / x at rank s-1
      LinearSystem<K> sub;
      sub.rank_s = sys.rank_s - 1;
      sub.lambda = sys.lambda.shifted_down(1);
      SubResult<K> sr = attempt(sub, cert, diag, scale, depth + 1, false);
      SubResult<K> out;
      out.p = sr.p + 1;
      out.dbar = PolyMatrix<K>(m, m, out.p - 1);
      for (int i = 0; i < m; ++i) {
        Jet<K> d(1, out.p - 1);
        for (const auto& [key, c] : sr.dbar(i, i).terms()) {
          int deg = mono_deg(key) + 1;
          if (deg <= out.p - 1) d.set_coeff_key(mono_var(0, deg), c);
        }
        out.dbar(i, i) = d;
      }
      out.cbar = sr.cbar;
      return out;
    }

    Mat<K> a0 = sys.lambda.coeff(0);
    auto eig = eigen_split(a0);

    if (eig.size() >= 2) {
      auto split = split_blocks(sys);
      for (auto& e : split.entries) cert.push_back(e);
      // recurse per block and merge
      std::vector<SubResult<K>> subs;
      int off = 0;
      int pmax = 0;
      for (size_t b = 0; b < split.block_sizes.size(); ++b) {
        int bsz = split.block_sizes[b];
        LinearSystem<K> bsys;
        bsys.rank_s = split.sys.rank_s;
        bsys.lambda = PolyMatrix<K>(bsz, bsz, split.sys.order());
        for (int i = 0; i < bsz; ++i)
          for (int j = 0; j < bsz; ++j) bsys.lambda(i, j) = split.sys.lambda(off + i, off + j);
        std::vector<GaugeEntry<K>> bcert;
        SubResult<K> sr = attempt(bsys, bcert, diag, scale, depth + 1, true);
        for (const auto& e : bcert)
          cert.push_back(lift_entry(e, off, bsz, m, split.sys.order()));
        subs.push_back(std::move(sr));
        pmax = std::max(pmax, subs.back().p);
        off += bsz;
      }
      // merge: block b rewritten at rank pmax contributes x^{shift} Dbar_b to
      // the diagonal polynomial and its Cbar_b at degree shift + p_b = pmax
      SubResult<K> merged;
      merged.p = pmax;
      merged.dbar = PolyMatrix<K>(m, m, std::max(0, pmax - 1));
      merged.cbar = Mat<K>(m, m);
      off = 0;
      for (size_t b = 0; b < split.block_sizes.size(); ++b) {
        int bsz = split.block_sizes[b];
        const SubResult<K>& sr = subs[b];
        int shift = pmax - sr.p;
        for (int i = 0; i < bsz; ++i) {
          Jet<K> d(1, std::max(0, pmax - 1));
          for (const auto& [key, c] : sr.dbar(i, i).terms()) {
            int deg = mono_deg(key) + shift;
            if (deg <= pmax - 1) d.set_coeff_key(mono_var(0, deg), c);
          }
          merged.dbar(off + i, off + i) = d;
        }
        for (int i = 0; i < bsz; ++i)
          for (int j = 0; j < bsz; ++j) merged.cbar(off + i, off + j) = sr.cbar(i, j);
        off += bsz;
      }
      return merged;
    }

    // single eigenvalue mu
    K mu = eig[0].first;
    Mat<K> nil = a0;
    for (int i = 0; i < m; ++i) nil(i, i) -= mu;
    bool scalar_a0 = true;
    for (int i = 0; i < m && scalar_a0; ++i)
      for (int j = 0; j < m && scalar_a0; ++j)
        if (!k_is_zero(nil(i, j), scale)) scalar_a0 = false;

    if (scalar_a0) {
      if (k_is_zero(mu, scale)) {
        // handled by rank renormalization above
        throw std::logic_error("reduce_linear_system: zero leading matrix not normalized");
      }
      // peel the scalar: recurse on (Lambda - mu I)/x at rank s-1
      LinearSystem<K> sub;
      sub.rank_s = sys.rank_s - 1;
      PolyMatrix<K> shifted = sys.lambda;
      for (int i = 0; i < m; ++i) {
        shifted(i, i).add_coeff_key(mono_one(), -mu);
        if constexpr (!FT<K>::exact) {
          // clustering residue at degree zero must not block the division
          if (FT<K>::abs(shifted(i, i).coeff1(0)) <= 1e-9 * scale)
            shifted(i, i).set_coeff_key(mono_one(), FT<K>::zero());
        }
      }
      sub.lambda = shifted.shifted_down(1);
      SubResult<K> sr = attempt(sub, cert, diag, scale, depth + 1, false);
      SubResult<K> out;
      out.p = sr.p + 1;
      out.dbar = PolyMatrix<K>(m, m, out.p - 1);
      for (int i = 0; i < m; ++i) {
        Jet<K> d(1, out.p - 1);
        d.set_coeff_key(mono_one(), mu);
        for (const auto& [key, c] : sr.dbar(i, i).terms()) {
          int deg = mono_deg(key) + 1;
          if (deg <= out.p - 1) d.set_coeff_key(mono_var(0, deg), c);
        }
        out.dbar(i, i) = d;
      }
      out.cbar = sr.cbar;
      return out;
    }

    // A0 = mu I + N with N != 0: search a shearing that makes progress
    LinearSystem<K> probe = sys;  // analysis on Lambda - mu I
    for (int i = 0; i < m; ++i) probe.lambda(i, i).add_coeff_key(mono_one(), -mu);

    int kcap = std::min(6, sys.rank_s * m + 2);
    std::vector<int> found;
    std::vector<int> kk(m, 0);
    auto next_tuple = [&](std::vector<int>& t) {
      int i = 0;
      while (i < m && ++t[i] > kcap) t[i++] = 0;
      return i < m;
    };
    // deterministic order: by total sum, then lexicographic
    std::vector<std::vector<int>> candidates;
    do {
      int sum = 0;
      for (int e : kk) sum += e;
      if (sum > 0) candidates.push_back(kk);
    } while (next_tuple(kk));
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const std::vector<int>& a, const std::vector<int>& b) {
                       int sa = 0, sb = 0;
                       for (int e : a) sa += e;
                       for (int e : b) sb += e;
                       if (sa != sb) return sa < sb;
                       return a < b;
                     });
    for (const auto& cand : candidates) {
      LinearSystem<K> sheared_probe, sheared_full;
      try {
        sheared_probe = apply_shearing(probe, cand);
        sheared_full = apply_shearing(sys, cand);
      } catch (const std::domain_error&) {
        continue;  // pole: impermissible for this system
      }
      sheared_probe.lambda = chop(sheared_probe.lambda, scale);
      bool progress = false;
      if (effective_val(sheared_probe, scale) >= 1) progress = true;
      if (!progress) {
        Mat<K> b0 = sheared_probe.lambda.coeff(0);
        if (!is_nilpotent(b0, FT<K>::exact ? 0.0 : 1e-8 * scale)) progress = true;
      }
      if (!progress) continue;
      GaugeEntry<K> e;
      e.kind = GaugeEntry<K>::shearing;
      e.shear = cand;
      cert.push_back(e);
      int rank_before = sys.rank_s - std::min(sys.rank_s, effective_val(sys, scale));
      sys = sheared_full;
      int rank_after = sys.rank_s - std::min(sys.rank_s, effective_val(sys, scale));
      diag.shearing_ranks.emplace_back(rank_before, rank_after);
      found = cand;
      break;
    }
    if (!found.empty()) continue;

    // no integer shearing: consult the Newton slope for a ramification order
    auto slope = newton_slope(probe, scale);
    if (slope && slope->second > 1) throw NeedRamification{static_cast<int>(slope->second)};
    throw std::domain_error(
        "reduce_linear_system: no progressing shearing within the exponent budget");
  }
}

}  // namespace turr_detail

template <class K>
ReduceOutcome<K> reduce_linear_system(const LinearSystem<K>& input) {
  int m = input.dim();
  if (m < 1) throw std::invalid_argument("reduce_linear_system: empty system");
  if (input.rank_s < 0) throw std::invalid_argument("reduce_linear_system: negative rank");
  double scale = sys_scale(input.lambda);
  if (input.rank_s > 0 && turr_detail::effective_val(input, scale) > 0 &&
      turr_detail::effective_val(input, scale) <= input.order())
    throw std::invalid_argument("reduce_linear_system: expects Lambda(0) != 0 when s >= 1");
  int need = required_linear_order(input.rank_s, m);
  if (input.order() < need)
    throw std::invalid_argument("reduce_linear_system: input truncated at order " +
                                std::to_string(input.order()) + ", needs >= " +
                                std::to_string(need));

  long alpha_budget = 1;
  for (int i = 2; i <= m; ++i) alpha_budget *= i;

  long alpha = 1;
  while (true) {
    GaugeCertificate<K> cert;
    ReduceDiagnostics diag;
    LinearSystem<K> start = input;
    if (alpha > 1) {
      auto [rsys, rentry] = ramify_step(input, static_cast<int>(alpha));
      start = rsys;
      cert.entries.push_back(rentry);
      diag.total_ramification = static_cast<int>(alpha);
    }
    try {
      auto sub = turr_detail::attempt(start, cert.entries, diag, scale, 0, true);
      // replay for the final remainder and the soundness check
      LinearSystem<K> fin = replay_certificate(input, cert);
      fin.lambda = chop(fin.lambda, scale);
      int g = fin.rank_s - sub.p;
      if (g < 0) throw std::logic_error("reduce_linear_system: negative divisor exponent");
      if (fin.order() - g < sub.p + 1)
        throw std::domain_error("reduce_linear_system: working order exhausted (deficit " +
                                std::to_string(sub.p + 1 - (fin.order() - g)) + ")");
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          if (!divisible_by_power(fin.lambda(i, j), 0, g))
            throw std::logic_error("reduce_linear_system: replay is not divisible by x^g");
      PolyMatrix<K> reduced = fin.lambda.shifted_down(g);
      // residual against Dbar + x^p Cbar must vanish through order p
      PolyMatrix<K> model = sub.dbar.truncated(reduced.order());
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          Jet<K> want = model(i, j).with_order(std::min(reduced.order(), sub.p));
          if (!FT<K>::is_zero(sub.cbar(i, j)) && sub.p <= want.order())
            want.add_coeff_key(mono_var(0, sub.p), sub.cbar(i, j));
          Jet<K> got = reduced(i, j).truncated(std::min(reduced.order(), sub.p));
          if constexpr (FT<K>::exact) {
            if (!(got == want.truncated(got.order())))
              throw std::logic_error("reduce_linear_system: replay residual is nonzero");
          } else {
            if ((got - want.truncated(got.order())).max_abs() > 1e-8 * scale)
              throw std::logic_error("reduce_linear_system: replay residual too large");
          }
        }
      RSLinearForm<K> form;
      form.p = sub.p;
      form.dbar = sub.dbar;
      form.cbar = sub.cbar;
      form.working_order = reduced.order();
      // remainder: reduced minus the principal part
      PolyMatrix<K> principal(m, m, reduced.order());
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          Jet<K> e = sub.dbar(i, j).with_order(reduced.order());
          if (!FT<K>::is_zero(sub.cbar(i, j)) && sub.p <= reduced.order())
            e.add_coeff_key(mono_var(0, sub.p), sub.cbar(i, j));
          principal(i, j) = e;
        }
      form.remainder = reduced - principal;
      // structural invariants
      if (form.p == 0) {
        bool cz = form.cbar.is_zero();
        if (cz)
          throw std::domain_error(
              "reduce_linear_system: system is formally regular with vanishing leading term");
      } else {
        if (form.dbar.coeff(0).is_zero() && chop(form.dbar, scale).is_zero())
          throw std::logic_error("reduce_linear_system: Dbar vanishes with p >= 1");
        if (form.dbar.coeff(0).is_zero()) {
          // Dbar(0) must be nonzero as a matrix for p >= 1
          throw std::logic_error("reduce_linear_system: Dbar(0) = 0 with p >= 1");
        }
      }
      // commutation [Dbar, Cbar] = 0
      {
        PolyMatrix<K> cb = PolyMatrix<K>::from_constant(form.cbar, form.dbar.order());
        PolyMatrix<K> lhs = form.dbar * cb - cb * form.dbar;
        if constexpr (FT<K>::exact) {
          if (!lhs.is_zero()) throw std::logic_error("reduce_linear_system: [Dbar,Cbar] != 0");
        } else {
          if (lhs.max_abs() > 1e-8 * scale)
            throw std::logic_error("reduce_linear_system: [Dbar,Cbar] too large");
        }
      }
      cert.shearing_ranks = diag.shearing_ranks;
      return {std::move(form), std::move(cert), std::move(diag)};
    } catch (const turr_detail::NeedRamification& nr) {
      alpha *= nr.alpha;
      if (alpha > alpha_budget * 2)
        throw std::domain_error("reduce_linear_system: ramification budget m! exceeded");
    }
  }
}

}  // namespace rsnf
