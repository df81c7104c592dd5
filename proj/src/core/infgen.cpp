#include "core/infgen.hpp"

#include <algorithm>
#include <map>

namespace rsnf {

FactoredModulus factor_modulus(const Rational& modulus) {
  FactoredModulus out;
  auto factor_into = [&](Integer v, int sign) {
    if (v < 0) throw std::invalid_argument("factor_modulus: negative");
    for (Integer p = 2; p * p <= v;) {
      if (v % p == 0) {
        long e = 0;
        while (v % p == 0) {
          v /= p;
          ++e;
        }
        out.factors.emplace_back(p, sign * e);
      }
      p += (p == 2 ? 1 : 2);
      if (p > 100000) break;
    }
    if (v > 1) {
      if (mpz_probab_prime_p(v.get_mpz_t(), 32) == 0)
        throw std::domain_error("factor_modulus: composite cofactor beyond trial bound");
      out.factors.emplace_back(v, sign);
    }
  };
  factor_into(modulus.get_num(), +1);
  factor_into(modulus.get_den(), -1);
  // merge duplicates (a prime can divide both sides only if non-canonical)
  std::map<Integer, long> merged;
  for (auto& [p, e] : out.factors) merged[p] += e;
  out.factors.assign(merged.begin(), merged.end());
  return out;
}

namespace {

void refine_insert(std::vector<Integer>& base, Integer n) {
  if (n <= 1) return;
  for (size_t i = 0; i < base.size(); ++i) {
    Integer g = gcd(n, base[i]);
    if (g == 1) continue;
    if (base[i] == n) return;  // already present
    Integer b = base[i];
    base.erase(base.begin() + i);
    refine_insert(base, g);
    refine_insert(base, b / g);
    refine_insert(base, n / g);
    return;
  }
  base.push_back(n);
}

long exponent_of(Integer v, const Integer& b) {
  long e = 0;
  while (v % b == 0) {
    v /= b;
    ++e;
  }
  return e;
}

}  // namespace

ModuliDecomposition factor_moduli(const std::vector<Rational>& moduli) {
  ModuliDecomposition out;
  for (const auto& m : moduli) {
    if (m <= 0) throw std::invalid_argument("factor_moduli: modulus must be positive");
    refine_insert(out.base, m.get_num());
    refine_insert(out.base, m.get_den());
  }
  std::sort(out.base.begin(), out.base.end());
  for (const auto& m : moduli) {
    std::vector<long> row(out.base.size(), 0);
    Integer num = m.get_num(), den = m.get_den();
    for (size_t t = 0; t < out.base.size(); ++t) {
      long en = exponent_of(num, out.base[t]);
      long ed = exponent_of(den, out.base[t]);
      row[t] = en - ed;
      Integer pw;
      mpz_pow_ui(pw.get_mpz_t(), out.base[t].get_mpz_t(), static_cast<unsigned long>(en));
      num /= pw;
      mpz_pow_ui(pw.get_mpz_t(), out.base[t].get_mpz_t(), static_cast<unsigned long>(ed));
      den /= pw;
    }
    if (num != 1 || den != 1)
      throw std::logic_error("factor_moduli: refinement did not cover a modulus");
    out.exponents.push_back(std::move(row));
  }
  return out;
}

ResonanceLattices resonance_lattices(const std::vector<PolarEigenvalue>& spec) {
  int n = static_cast<int>(spec.size());
  if (n == 0) throw std::invalid_argument("resonance_lattices: empty spectrum");

  // modulus constraints: one row per element of the refined coprime base
  std::vector<Rational> mods;
  for (const auto& ev : spec) mods.push_back(ev.modulus);
  auto dec = factor_moduli(mods);
  int nb = static_cast<int>(dec.base.size());
  IMat e_mat = imat_zero(nb, n);
  for (int j = 0; j < n; ++j)
    for (int t = 0; t < nb; ++t) e_mat[t][j] = dec.exponents[j][t];

  ResonanceLattices out;
  out.s_lambda_prime = nb == 0 ? imat_identity(n) : integer_kernel(e_mat);
  int r = irows(out.s_lambda_prime);
  if (r == 0) {
    out.s_lambda = IMat{};
    out.index = 1;
    return out;
  }

  // angle sums of the saturation basis, over a common denominator D
  Integer d_common = 1;
  std::vector<Rational> t(r, Rational(0));
  for (int k = 0; k < r; ++k) {
    for (int j = 0; j < n; ++j) t[k] += Rational(out.s_lambda_prime[k][j]) * spec[j].angle;
    d_common = lcm(d_common, t[k].get_den());
  }
  IMat rel = imat_zero(1, r + 1);
  for (int k = 0; k < r; ++k) {
    Rational scaled = t[k] * Rational(d_common);
    rel[0][k] = scaled.get_num();  // integer by construction
  }
  rel[0][r] = d_common;
  IMat kc = integer_kernel(rel);
  // project away the auxiliary last coordinate; rows stay a basis of
  // { c : sum c_k t_k in Z } because the last column is determined by c
  IMat coords;
  for (const auto& row : kc) coords.push_back(IVec(row.begin(), row.begin() + r));

  // S_lambda basis in Z^n
  out.s_lambda = imat_mul(coords, out.s_lambda_prime);

  // index as the determinant of the coordinates of S in the basis of S'
  if (irows(coords) != r) throw std::logic_error("resonance_lattices: rank drop in S_lambda");
  out.index = abs_det(coords);
  if (out.index == 0) throw std::logic_error("resonance_lattices: degenerate index");
  return out;
}

WeakResonance is_weakly_resonant(const std::vector<VFEigenvalue>& spec) {
  int n = static_cast<int>(spec.size());
  WeakResonance out;
  if (n == 0) return out;
  Integer da = 1;
  for (const auto& v : spec) da = lcm(da, v.a.get_den());
  IMat a_row = imat_zero(1, n);
  for (int j = 0; j < n; ++j) {
    Rational scaled = spec[j].a * Rational(da);
    a_row[0][j] = scaled.get_num();
  }
  IMat ker = integer_kernel(a_row);
  for (const auto& m : ker) {
    Rational bsum(0);
    for (int j = 0; j < n; ++j) bsum += Rational(m[j]) * spec[j].b;
    if (bsum != 0) {
      out.weakly_resonant = true;
      out.witness = m;
      return out;
    }
  }
  return out;
}

namespace {

void check_index(const std::vector<PolarEigenvalue>& spec, long m) {
  auto lat = resonance_lattices(spec);
  if (lat.index != m)
    throw std::domain_error("infinitesimal_generator: m does not equal the embeddability index");
}

}  // namespace

InfGenResult<QC> infinitesimal_generator(const DiffeoJet<QC>& f,
                                         const std::vector<PolarEigenvalue>& spec, long m) {
  if (static_cast<int>(spec.size()) != f.dim())
    throw std::invalid_argument("infinitesimal_generator: spectrum size mismatch");
  check_index(spec, m);
  DiffeoJet<QC> fm = f.power(static_cast<int>(m));
  Mat<QC> a = fm.linear();
  Mat<QC> u = a - Mat<QC>::identity(f.dim());
  if (!is_nilpotent(u))
    throw std::domain_error(
        "infinitesimal_generator: D_0 F^m is not unipotent; the semisimple log is "
        "transcendental, use the float field");
  InfGenResult<QC> out{log_unipotent(fm), fm, 0.0, 0.0, {}};
  auto back = exp_flow(out.generator, QC(1), fm.order());
  if (!(back.comp == fm.comp))
    throw std::logic_error("infinitesimal_generator: exact exp/log roundtrip failed");
  return out;
}

InfGenResult<CD> infinitesimal_generator(const DiffeoJet<CD>& f,
                                         const std::vector<PolarEigenvalue>& spec, long m) {
  int n = f.dim();
  if (static_cast<int>(spec.size()) != n)
    throw std::invalid_argument("infinitesimal_generator: spectrum size mismatch");
  check_index(spec, m);
  DiffeoJet<CD> fm = f.power(static_cast<int>(m));
  Mat<CD> a = fm.linear();

  // split A = S U with S the diagonal; valid in Jordan-like coordinates
  Mat<CD> s(n, n), sinv(n, n);
  for (int i = 0; i < n; ++i) {
    if (std::abs(a(i, i)) < 1e-12)
      throw std::domain_error("infinitesimal_generator: zero diagonal in D_0 F^m");
    s(i, i) = a(i, i);
    sinv(i, i) = 1.0 / a(i, i);
  }
  Mat<CD> uni = a * sinv;
  if (!is_nilpotent(uni - Mat<CD>::identity(n), 1e-8 * std::max(1.0, uni.max_abs())))
    throw std::domain_error(
        "infinitesimal_generator: D_0 F^m does not split as diagonal times unipotent in the "
        "supplied coordinates (need Jordan-like coordinates)");

  // diagonal of A must match lambda_j^m per coordinate
  std::vector<CD> lam_m(n);
  for (int j = 0; j < n; ++j) {
    lam_m[j] = std::pow(spec[j].to_cd(), double(m));
    if (std::abs(lam_m[j] - a(j, j)) > 1e-8 * std::max(1.0, std::abs(lam_m[j])))
      throw std::domain_error(
          "infinitesimal_generator: spectrum entries must match the diagonal of D_0 F^m in "
          "coordinate order");
  }

  // principal semisimple log, then project onto the Lie algebra: for every
  // saturation basis vector u, sum_j u_j (m theta_j + k_j) must vanish
  auto lat = resonance_lattices(spec);
  int r = irows(lat.s_lambda_prime);
  IVec k(n, Integer(0));
  if (r > 0) {
    IMat u_mat = lat.s_lambda_prime;
    IVec w(r, Integer(0));
    for (int row = 0; row < r; ++row) {
      Rational acc(0);
      for (int j = 0; j < n; ++j) acc += Rational(u_mat[row][j]) * spec[j].angle;
      acc *= m;
      if (acc.get_den() != 1)
        throw std::logic_error("infinitesimal_generator: non-integer angle constraint");
      w[row] = -acc.get_num();
    }
    if (!solve_integer_min(u_mat, w, k))
      throw std::domain_error("infinitesimal_generator: no valid matrix log in the Lie algebra");
  }

  std::vector<CD> v(n);
  for (int j = 0; j < n; ++j) {
    double logmod = std::log(rat_to_double(spec[j].modulus));
    double ang = 2 * M_PI * (double(m) * rat_to_double(spec[j].angle) + mpz_get_d(k[j].get_mpz_t()));
    v[j] = CD(double(m) * logmod, ang);
  }

  // Y = diag(v) x d/dx; Exp(-Y) = diag(exp(-v_j)) exactly
  int order = fm.order();
  JetTuple<CD> ycomp, emy;
  for (int j = 0; j < n; ++j) {
    Jet<CD> c(n, order);
    c.set_coeff_key(mono_var(j), v[j]);
    ycomp.push_back(c);
    Jet<CD> e(n, order);
    e.set_coeff_key(mono_var(j), std::exp(-v[j]));
    emy.push_back(e);
  }
  VectorFieldJet<CD> y(ycomp);
  DiffeoJet<CD> exp_minus_y(emy);

  DiffeoJet<CD> fprime = fm * exp_minus_y;  // F^m o Exp(-Y)
  VectorFieldJet<CD> z = log_unipotent(fprime);
  VectorFieldJet<CD> x = y + z;

  InfGenResult<CD> out{x, fm, 0.0, 0.0, k};
  auto bracket = lie_bracket(y, z);
  double scale = 1.0;
  for (const auto& c : z.comp) scale = std::max(scale, c.max_abs());
  for (const auto& c : bracket.comp) out.commutator_norm = std::max(out.commutator_norm, c.max_abs());
  if (out.commutator_norm > 1e-8 * scale)
    throw std::domain_error(
        "infinitesimal_generator: [Y, Z] does not vanish at this truncation; input outside the "
        "theorem's scope");

  auto back = exp_flow(x, CD(1.0, 0.0), order);
  for (int j = 0; j < n; ++j)
    out.exp_residual = std::max(out.exp_residual, (back.comp[j] - fm.comp[j]).max_abs());
  double fscale = 1.0;
  for (const auto& c : fm.comp) fscale = std::max(fscale, c.max_abs());
  if (out.exp_residual > 1e-9 * fscale)
    throw std::logic_error("infinitesimal_generator: exp_flow(X,1) does not reproduce F^m");
  return out;
}

}  // namespace rsnf
