#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "core/infgen.hpp"

using namespace rsnf;

namespace {

Jet<QC> from_terms(int nv, int order,
                   std::initializer_list<std::pair<std::vector<int>, Rational>> terms) {
  Jet<QC> j(nv, order);
  for (const auto& [e, c] : terms) j.set_coeff(e, QC(c));
  return j;
}

// Brute-force |R_lambda|: count distinct roots of unity among the products
// lambda^m over the box |m_j| <= B.
long brute_force_index(const std::vector<PolarEigenvalue>& spec, int box) {
  int n = static_cast<int>(spec.size());
  std::vector<Rational> mods;
  for (const auto& ev : spec) mods.push_back(ev.modulus);
  auto dec = factor_moduli(mods);
  std::set<Rational> angles;
  std::vector<int> m(n, -box);
  while (true) {
    // modulus of the product must be exactly 1
    bool mod_one = true;
    for (size_t t = 0; t < dec.base.size() && mod_one; ++t) {
      long s = 0;
      for (int j = 0; j < n; ++j) s += dec.exponents[j][t] * m[j];
      if (s != 0) mod_one = false;
    }
    if (mod_one) {
      Rational ang(0);
      for (int j = 0; j < n; ++j) ang += Rational(m[j]) * spec[j].angle;
      // reduce mod 1
      Integer q;
      mpz_fdiv_q(q.get_mpz_t(), ang.get_num().get_mpz_t(), ang.get_den().get_mpz_t());
      ang -= Rational(q);
      angles.insert(ang);
    }
    int t = 0;
    while (t < n && ++m[t] > box) m[t++] = -box;
    if (t == n) break;
  }
  return static_cast<long>(angles.size());
}

}  // namespace

TEST_CASE("resonance lattices on stated examples") {
  // spec = {2, 3}: no resonances, m = 1
  {
    auto lat = resonance_lattices({{Rational(2), Rational(0)}, {Rational(3), Rational(0)}});
    CHECK(irows(lat.s_lambda_prime) == 0);
    CHECK(lat.index == 1);
  }
  // spec = {-1}: S = 2Z, S' = Z, m = 2
  {
    auto lat = resonance_lattices({{Rational(1), rat(1, 2)}});
    REQUIRE(irows(lat.s_lambda_prime) == 1);
    CHECK(abs(lat.s_lambda_prime[0][0]) == 1);
    REQUIRE(irows(lat.s_lambda) == 1);
    CHECK(abs(lat.s_lambda[0][0]) == 2);
    CHECK(lat.index == 2);
  }
  // spec = {1, 1}: S = S' = Z^2, m = 1
  {
    auto lat = resonance_lattices({{Rational(1), Rational(0)}, {Rational(1), Rational(0)}});
    CHECK(irows(lat.s_lambda_prime) == 2);
    CHECK(lat.index == 1);
  }
}

TEST_CASE("resonance index matches the brute-force root-of-unity count") {
  using PE = PolarEigenvalue;
  std::vector<std::vector<PE>> specs = {
      {PE(Rational(1), rat(1, 3))},
      {PE(Rational(1), rat(1, 4)), PE(Rational(1), rat(1, 6))},
      {PE(Rational(2), Rational(0)), PE(rat(1, 2), rat(1, 2))},
      {PE(Rational(1), rat(2, 5)), PE(Rational(3), Rational(0))},
      {PE(rat(3, 2), rat(1, 2)), PE(rat(2, 3), rat(1, 3))},
      {PE(Rational(1), rat(1, 2)), PE(Rational(1), rat(1, 2)), PE(Rational(1), rat(1, 4))},
      {PE(Rational(4), rat(1, 8))},
      {PE(Rational(2), rat(1, 6)), PE(rat(1, 2), rat(1, 6))},
  };
  for (const auto& s : specs) {
    auto lat = resonance_lattices(s);
    long brute = brute_force_index(s, 12);
    CHECK(lat.index.get_si() == brute);
  }
}

TEST_CASE("weak resonance on stated examples") {
  // v = 2 pi i: weakly resonant with witness (1)
  {
    auto w = is_weakly_resonant({{Rational(0), Rational(1)}});
    REQUIRE(w.weakly_resonant);
    REQUIRE(w.witness.size() == 1);
    CHECK(abs(w.witness[0]) == 1);
  }
  // {(1,0), (-1,0)}: kernel vectors have zero angular sum
  {
    auto w = is_weakly_resonant({{Rational(1), Rational(0)}, {Rational(-1), Rational(0)}});
    CHECK_FALSE(w.weakly_resonant);
  }
  // all-zero spectrum (nilpotent): not weakly resonant
  {
    auto w = is_weakly_resonant({{Rational(0), Rational(0)}, {Rational(0), Rational(0)}});
    CHECK_FALSE(w.weakly_resonant);
  }
}

TEST_CASE("infinitesimal generator of a unipotent diffeo is its nilpotent log") {
  // F = exp(x^2 dx) in 1d; m = 1
  DiffeoJet<QC> f(JetTuple<QC>{from_terms(1, 5, {{{1}, 1}, {{2}, 1}, {{3}, 1}, {{4}, 1}, {{5}, 1}})});
  auto res = infinitesimal_generator(f, {{Rational(1), Rational(0)}}, 1);
  CHECK(res.generator.comp[0] == log_unipotent(f).comp[0]);
}

TEST_CASE("infinitesimal generator with m = 2 via F squared") {
  // F = (-x + x^2, -y): F^2 is tangent to the identity
  DiffeoJet<QC> f(JetTuple<QC>{from_terms(2, 6, {{{1, 0}, -1}, {{2, 0}, 1}}),
                               from_terms(2, 6, {{{0, 1}, -1}})});
  std::vector<PolarEigenvalue> spec{{Rational(1), rat(1, 2)}, {Rational(1), rat(1, 2)}};
  auto lat = resonance_lattices(spec);
  CHECK(lat.index == 2);
  auto res = infinitesimal_generator(f, spec, 2);
  // the generator must satisfy exp(X) = F^2 exactly
  auto back = exp_flow(res.generator, QC(1), 6);
  CHECK(back.comp == f.power(2).comp);
  // oracle route: log of the composed map
  CHECK(res.generator.comp == log_unipotent(f.power(2)).comp);
}

TEST_CASE("infinitesimal generator in the float field with nontrivial log") {
  // F = (2x, 4y + x^2): M = diag(log 2, 2 log 2)
  JetTuple<CD> comps;
  Jet<CD> c1(2, 6);
  c1.set_coeff({1, 0}, CD(2, 0));
  Jet<CD> c2(2, 6);
  c2.set_coeff({0, 1}, CD(4, 0));
  c2.set_coeff({2, 0}, CD(1, 0));
  comps = {c1, c2};
  DiffeoJet<CD> f(comps);
  std::vector<PolarEigenvalue> spec{{Rational(2), Rational(0)}, {Rational(4), Rational(0)}};
  auto res = infinitesimal_generator(f, spec, 1);
  CHECK(res.exp_residual <= 1e-10);
  CHECK(std::abs(res.generator.comp[0].coeff({1, 0}) - CD(std::log(2.0), 0)) < 1e-12);
  CHECK(std::abs(res.generator.comp[1].coeff({0, 1}) - CD(2 * std::log(2.0), 0)) < 1e-12);
}

TEST_CASE("eigenvalues of D0 F^m that are roots of unity equal one") {
  std::vector<PolarEigenvalue> spec{{Rational(1), rat(1, 3)}, {Rational(1), rat(1, 2)}};
  auto lat = resonance_lattices(spec);
  CHECK(lat.index == 6);
  for (const auto& ev : spec) {
    Rational ang = ev.angle * Rational(lat.index);
    CHECK(ang.get_den() == 1);  // lambda^m = e^(2 pi i integer) = 1
  }
}

TEST_CASE("invariance transfer between F^m and its generator") {
  // F = (-x + x^3, -y + x^2 y): gamma = (s, 0) invariant; check transfer
  DiffeoJet<QC> f(JetTuple<QC>{from_terms(2, 7, {{{1, 0}, -1}, {{3, 0}, 1}}),
                               from_terms(2, 7, {{{0, 1}, -1}, {{2, 1}, 1}})});
  CurveParam<QC> axis(JetTuple<QC>{from_terms(1, 7, {{{1}, 1}}), Jet<QC>(1, 7)});
  REQUIRE(is_invariant_curve(f, axis).invariant);
  std::vector<PolarEigenvalue> spec{{Rational(1), rat(1, 2)}, {Rational(1), rat(1, 2)}};
  auto res = infinitesimal_generator(f, spec, 2);
  auto invx = is_invariant_curve(res.generator, axis);
  auto invf = is_invariant_curve(res.f_power_m, axis);
  CHECK(invx.invariant == invf.invariant);
  CHECK(invx.invariant);
  // rationally neutral restriction forces inner eigenvalue 0 for X
  auto rest = restrict_to_curve(res.generator, axis);
  CHECK(rest.inner_eigenvalue == QC(0));
}
