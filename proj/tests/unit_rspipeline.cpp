#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/rspipeline.hpp"

using namespace rsnf;

namespace {

Jet<QC> from_terms(int nv, int order,
                   std::initializer_list<std::pair<std::vector<int>, Rational>> terms) {
  Jet<QC> j(nv, order);
  for (const auto& [e, c] : terms) j.set_coeff(e, QC(c));
  return j;
}

CurveParam<QC> x_axis(int n, int order) {
  JetTuple<QC> c(n, Jet<QC>(1, order));
  c[0] = Jet<QC>::variable(0, 1, order);
  return CurveParam<QC>(c);
}

}  // namespace

TEST_CASE("desingularize_curve on stated examples") {
  // (s, s^2) is already nonsingular
  CurveParam<QC> graph(JetTuple<QC>{from_terms(1, 10, {{{1}, 1}}), from_terms(1, 10, {{{2}, 1}})});
  auto [seq0, g0] = desingularize_curve(graph);
  CHECK(seq0.size() == 0);
  CHECK(g0.multiplicity() == 1);

  // cusp (s^2, s^3): one blow-up to (s^2, s), a swap, one more to nu = 1
  CurveParam<QC> cusp(JetTuple<QC>{from_terms(1, 12, {{{2}, 1}}), from_terms(1, 12, {{{3}, 1}})});
  auto [seq1, g1] = desingularize_curve(cusp);
  CHECK(g1.multiplicity() == 1);
  int blowups = 0;
  for (const auto& m : seq1.maps)
    if (m.kind == MapKind::blowup) ++blowups;
  CHECK(blowups >= 1);

  // (s^2, s^5) needs two blow-ups
  CurveParam<QC> c25(JetTuple<QC>{from_terms(1, 14, {{{2}, 1}}), from_terms(1, 14, {{{5}, 1}})});
  auto [seq2, g2] = desingularize_curve(c25);
  CHECK(g2.multiplicity() == 1);
  blowups = 0;
  for (const auto& m : seq2.maps)
    if (m.kind == MapKind::blowup) ++blowups;
  CHECK(blowups == 2);
}

TEST_CASE("validation oracle on the model RS field") {
  // X = x^2 dx - y(1+x) dy with Gamma = (s, 0) is already in RS form with
  // q = 1, nu = 0, p = 1, D = (-1), C = (-1)
  VectorFieldJet<QC> x(JetTuple<QC>{
      from_terms(2, 30, {{{2, 0}, 1}}),
      from_terms(2, 30, {{{0, 1}, -1}, {{1, 1}, -1}})});
  RSVectorField<QC> given;
  given.q = 1;
  given.nu = 0;
  given.p = 1;
  given.lambda = QC(1);
  given.lambda_normalized = false;
  given.b = QC(0);
  given.d = PolyMatrix<QC>(1, 1, 0);
  given.d(0, 0) = Jet<QC>::constant(QC(-1), 1, 0);
  given.c = Mat<QC>(1, 1);
  given.c(0, 0) = QC(-1);
  given.field = x;
  given.curve = x_axis(2, 30);
  CHECK(validate_rs(given).all_pass());
}

TEST_CASE("reduce_vf_to_rs on the model RS field") {
  // The pipeline re-derives the same invariants (q, nu, p, D) with lambda
  // normalized to -1; C shifts by integers under the blow-ups it spends.
  VectorFieldJet<QC> x(JetTuple<QC>{
      from_terms(2, 30, {{{2, 0}, 1}}),
      from_terms(2, 30, {{{0, 1}, -1}, {{1, 1}, -1}})});
  auto red = reduce_vf_to_rs(x, x_axis(2, 30));
  CHECK(red.form.q == 1);
  CHECK(red.form.nu == 0);
  CHECK(red.form.p == 1);
  CHECK(red.form.lambda == QC(-1));
  CHECK(red.form.d(0, 0).coeff1(0) == QC(-1));
  CHECK(red.form.c(0, 0).im == 0);
  auto rep = validate_rs(red.form);
  CHECK(rep.all_pass());
}

TEST_CASE("reduce_vf_to_rs on a field needing the nonsingular branch") {
  // X = x(dx + y dy), Gamma = (s, 0): q = e-1 = 0, p = 0
  VectorFieldJet<QC> x(JetTuple<QC>{from_terms(2, 20, {{{1, 0}, 1}}),
                                    from_terms(2, 20, {{{1, 1}, 1}})});
  auto red = reduce_vf_to_rs(x, x_axis(2, 20));
  CHECK(red.form.q == 0);
  CHECK(red.form.p == 0);
  CHECK(validate_rs(red.form).all_pass());
}

TEST_CASE("reduce_vf_to_rs exercises the linear-system branch") {
  // X = x^3 dx + y(1 + x) dy, Gamma = (s, 0): restriction order 3, s = 1
  VectorFieldJet<QC> x(JetTuple<QC>{
      from_terms(2, 40, {{{3, 0}, 1}}),
      from_terms(2, 40, {{{0, 1}, 1}, {{1, 1}, 1}})});
  auto red = reduce_vf_to_rs(x, x_axis(2, 40));
  CHECK(validate_rs(red.form).all_pass());
  CHECK(red.form.q + 1 == red.diag.restriction_order);
  CHECK(red.diag.chosen_m >= red.diag.linear_p + 2);
}

TEST_CASE("q equals the input restriction order minus one") {
  // invariant: ord(X|_Gamma) = q+1 before and after (no ramification here)
  VectorFieldJet<QC> x(JetTuple<QC>{
      from_terms(2, 34, {{{2, 0}, 1}, {{3, 0}, 2}}),
      from_terms(2, 34, {{{0, 1}, -2}, {{1, 1}, 3}})});
  auto inv = is_invariant_curve(x, x_axis(2, 34));
  REQUIRE(inv.invariant);
  auto red = reduce_vf_to_rs(x, x_axis(2, 34));
  CHECK(red.form.q + 1 == inv.factor.val());
  CHECK(validate_rs(red.form).all_pass());
}

TEST_CASE("validate_rs flags broken fixtures") {
  VectorFieldJet<QC> x(JetTuple<QC>{
      from_terms(2, 30, {{{2, 0}, 1}}),
      from_terms(2, 30, {{{0, 1}, -1}, {{1, 1}, -1}})});
  auto red = reduce_vf_to_rs(x, x_axis(2, 30));
  // perturb C so [D, C] stays zero but D + x^q C changes order inconsistently
  auto broken = red.form;
  broken.nu = broken.nu + 1;
  CHECK_FALSE(validate_rs(broken).all_pass());

  auto broken2 = red.form;
  broken2.c(0, 0) = QC(5);  // no longer matches the map
  CHECK_FALSE(validate_rs(broken2).all_pass());
}

TEST_CASE("three-dimensional reduction with a diagonal linear part") {
  // X = x^2 dx + y1(1 + x) dy1 + y2(-2 + x^2) dy2
  VectorFieldJet<QC> x(JetTuple<QC>{
      from_terms(3, 40, {{{2, 0, 0}, 1}}),
      from_terms(3, 40, {{{0, 1, 0}, 1}, {{1, 1, 0}, 1}}),
      from_terms(3, 40, {{{0, 0, 1}, -2}, {{2, 0, 1}, 1}})});
  auto red = reduce_vf_to_rs(x, x_axis(3, 40));
  CHECK(validate_rs(red.form).all_pass());
  CHECK(red.form.q + 1 == 2);
  // D(0) carries the two distinct eigenvalues 1 and -2 up to ordering/scaling
  std::vector<QC> d0{red.form.d(0, 0).coeff1(0), red.form.d(1, 1).coeff1(0)};
  CHECK(((d0[0] == QC(1) && d0[1] == QC(-2)) || (d0[0] == QC(-2) && d0[1] == QC(1))));
}

TEST_CASE("reduce_diffeo_to_rs via the unipotent exact path") {
  // F = Exp(X) for X = x^2 dx - y(1+x) dy is unipotent; m = 1
  VectorFieldJet<QC> x(JetTuple<QC>{
      from_terms(2, 24, {{{2, 0}, 1}}),
      from_terms(2, 24, {{{0, 1}, 0}, {{2, 1}, -1}})});
  // use a nilpotent-linear-part field so Exp is exact
  auto f = exp_flow(x, QC(1), 24);
  std::vector<PolarEigenvalue> spec{{Rational(1), Rational(0)}, {Rational(1), Rational(0)}};
  auto red = reduce_diffeo_to_rs(f, x_axis(2, 24), spec);
  REQUIRE(red.verdict == DiffeoVerdict::reduced);
  CHECK(red.m == 1);
  CHECK(red.form.q >= 1);
  CHECK(validate_rs(red.form).all_pass());
  CHECK(red.exp_residual <= 1e-9);
}

TEST_CASE("reduce_diffeo_to_rs reports the periodic-curve verdict") {
  // F = (x, -y): F^2 = identity, Gamma = x-axis inside Fix(F^2)
  DiffeoJet<QC> f(JetTuple<QC>{from_terms(2, 10, {{{1, 0}, 1}}),
                               from_terms(2, 10, {{{0, 1}, -1}})});
  std::vector<PolarEigenvalue> spec{{Rational(1), Rational(0)}, {Rational(1), rat(1, 2)}};
  auto red = reduce_diffeo_to_rs(f, x_axis(2, 10), spec);
  CHECK(red.verdict == DiffeoVerdict::periodic_curve);
}

TEST_CASE("float pipeline: F = Exp(x^2 dx - y(1+x) dy) reduces with m = 1") {
  // the second multiplier e^{-1} enters as a high-precision decimal rational,
  // which the resonance lattice treats as generic (no accidental relations)
  int order = 26;
  JetTuple<CD> xcomp;
  Jet<CD> a1(2, order);
  a1.set_coeff({2, 0}, CD(1, 0));
  Jet<CD> a2(2, order);
  a2.set_coeff({0, 1}, CD(-1, 0));
  a2.set_coeff({1, 1}, CD(-1, 0));
  VectorFieldJet<CD> x(JetTuple<CD>{a1, a2});
  auto f = exp_flow(x, CD(1, 0), order);
  JetTuple<CD> gc(2, Jet<CD>(1, order));
  gc[0] = Jet<CD>::variable(0, 1, order);
  CurveParam<CD> axis(gc);

  std::vector<PolarEigenvalue> spec{
      {Rational(1), Rational(0)},
      {parse_rational("0.36787944117144233"), Rational(0)}};
  auto red = reduce_diffeo_to_rs(f, axis, spec);
  REQUIRE(red.verdict == DiffeoVerdict::reduced);
  CHECK(red.m == 1);
  CHECK(red.form.q == 1);
  CHECK(red.exp_residual <= 1e-9);
  CHECK(std::abs(red.vf_form.d(0, 0).coeff1(0) - CD(-1, 0)) < 1e-9);
  CHECK(validate_rs(red.form).all_pass());
}

TEST_CASE("transform sequence replays to the emitted RS form") {
  VectorFieldJet<QC> x(JetTuple<QC>{
      from_terms(2, 40, {{{3, 0}, 1}}),
      from_terms(2, 40, {{{0, 1}, 1}, {{1, 1}, 1}})});
  auto axis = x_axis(2, 40);
  auto red = reduce_vf_to_rs(x, axis);
  VectorFieldJet<QC> cur = x;
  CurveParam<QC> g = axis;
  for (const auto& mp : red.sequence.maps) {
    auto [xt, gt] = apply_to_vf(mp, cur, g);
    cur = std::move(xt);
    g = std::move(gt);
  }
  for (int i = 0; i < 2; ++i) {
    int c = std::min(cur.comp[i].order(), red.form.field.comp[i].order());
    CHECK(cur.comp[i].truncated(c) == red.form.field.comp[i].truncated(c));
  }
  for (int i = 0; i < 2; ++i) {
    int c = std::min(g.comp[i].order(), red.form.curve.comp[i].order());
    CHECK(g.comp[i].truncated(c) == red.form.curve.comp[i].truncated(c));
  }
}

TEST_CASE("restriction conjugacy survives the diffeo reduction") {
  VectorFieldJet<QC> x(JetTuple<QC>{
      from_terms(2, 24, {{{2, 0}, 1}}),
      from_terms(2, 24, {{{2, 1}, -1}})});
  auto f = exp_flow(x, QC(1), 24);
  auto axis = x_axis(2, 24);
  std::vector<PolarEigenvalue> spec{{Rational(1), Rational(0)}, {Rational(1), Rational(0)}};
  auto before = restrict_to_curve(f, axis);
  auto red = reduce_diffeo_to_rs(f, axis, spec);
  REQUIRE(red.verdict == DiffeoVerdict::reduced);
  auto after = restrict_to_curve(red.form.map, red.form.curve);
  CHECK(before.inner_eigenvalue == after.inner_eigenvalue);
  // order of tangency to the identity of the restricted series is preserved
  auto tangency = [](const Jet<QC>& th) {
    Jet<QC> diff = th - Jet<QC>::variable(0, 1, th.order());
    return diff.is_zero() ? th.order() + 1 : diff.val();
  };
  CHECK(tangency(before.series) == tangency(after.series));
}
