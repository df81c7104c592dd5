#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/classify.hpp"

using namespace rsnf;

namespace {

// an RSDiffeo fixture directly in normal form: f(x) = x - x^{q+1},
// y_j o F = exp(d_j(x) + x^q c_jj) y_j + (optional tail)
RSDiffeo<CD> make_form(int q, int k, std::vector<std::vector<CD>> dbar_coeffs, Mat<CD> c,
                       int order = 24) {
  int ny = static_cast<int>(dbar_coeffs.size());
  int n = ny + 1;
  RSDiffeo<CD> f;
  f.q = q;
  f.k = k;
  f.p = q - k;
  f.b = CD(0, 0);
  f.d = PolyMatrix<CD>(ny, ny, std::max(0, q - 1));
  for (int j = 0; j < ny; ++j)
    for (int l = 0; l < static_cast<int>(dbar_coeffs[j].size()); ++l)
      if (std::abs(dbar_coeffs[j][l]) > 0)
        f.d(j, j).set_coeff_key(mono_var(0, k + l), dbar_coeffs[j][l]);
  f.c = c;

  JetTuple<CD> comps;
  Jet<CD> fx(n, order);
  {
    std::vector<int> e(n, 0);
    e[0] = 1;
    fx.set_coeff(e, CD(1, 0));
    e[0] = q + 1;
    fx.set_coeff(e, CD(-1, 0));
  }
  comps.push_back(fx);
  for (int j = 0; j < ny; ++j) {
    // exp(d_j(x) + x^q c_jj) as a univariate jet, times y_j
    Jet<CD> expo(1, order);
    for (int l = 0; l < static_cast<int>(dbar_coeffs[j].size()); ++l)
      expo.set_coeff({k + l}, dbar_coeffs[j][l]);
    expo.add_coeff_key(mono_var(0, q), c(j, j));
    Jet<CD> ex = Jet<CD>::constant(CD(1, 0), 1, order);
    Jet<CD> term = Jet<CD>::constant(CD(1, 0), 1, order);
    for (int t = 1; t <= order + 1; ++t) {
      term = CD(1.0 / t, 0) * (term * expo);
      if (term.is_zero() || term.max_abs() < 1e-18) break;
      ex += term;
    }
    Jet<CD> comp(n, order);
    for (const auto& [key, v] : ex.terms()) {
      std::vector<int> e(n, 0);
      e[0] = mono_deg(key);
      e[1 + j] = 1;
      comp.set_coeff(e, v);
    }
    // superdiagonal coupling from C
    if (j + 1 < ny && std::abs(c(j, j + 1)) > 0) {
      std::vector<int> e(n, 0);
      e[0] = q;
      e[2 + j] = 1;
      comp.add_coeff_key(mono_pack(e.data(), n), c(j, j + 1));
    }
    comps.push_back(comp);
  }
  f.map = DiffeoJet<CD>(comps);
  JetTuple<CD> gc(n, Jet<CD>(1, order));
  gc[0] = Jet<CD>::variable(0, 1, order);
  f.curve = CurveParam<CD>(gc);
  return f;
}

}  // namespace

TEST_CASE("attracting direction counts") {
  Mat<CD> c1(1, 1);
  c1(0, 0) = CD(1, 0);
  auto f1 = make_form(1, 0, {{CD(-1, 0)}}, c1);
  CHECK(attracting_directions(f1).size() == 1);
  auto f2 = make_form(2, 1, {{CD(-1, 0)}}, c1);
  CHECK(attracting_directions(f2).size() == 2);
  auto f4 = make_form(4, 3, {{CD(-1, 0)}}, c1);
  auto dirs = attracting_directions(f4);
  REQUIRE(dirs.size() == 4);
  CHECK(std::abs(dirs[1] - CD(0, 1)) < 1e-12);
}

TEST_CASE("node and saddle tags at the stated examples") {
  // k=0, p=1, d2 = -1, xi = 1 -> node, r2 = 0, s = 2
  Mat<CD> c0(1, 1);
  auto node_form = make_form(1, 0, {{CD(-1, 0)}}, c0);
  auto rep = classify_direction(node_form, 0);
  CHECK(rep.node[0]);
  CHECK(rep.r[0] == 0);
  CHECK(rep.stable_dim == 2);

  // d2 = +1 -> saddle, r2 = 0
  auto saddle_form = make_form(1, 0, {{CD(1, 0)}}, c0);
  auto rep2 = classify_direction(saddle_form, 0);
  CHECK_FALSE(rep2.node[0]);
  CHECK(rep2.r[0] == 0);

  // p = 0: every variable is saddle with r_j = 0
  Mat<CD> cpos(1, 1);
  cpos(0, 0) = CD(2, 0);
  auto p0 = make_form(1, 1, {{}}, cpos);
  auto rep3 = classify_direction(p0, 0);
  CHECK_FALSE(rep3.node[0]);
  CHECK(rep3.r[0] == 0);
  CHECK(rep3.stable_dim == 1);
}

TEST_CASE("direction count equals q and tags vary per direction") {
  // q = 2, k = 1, p = 1: dbar coefficient A; Re(xi^{k} A) flips with xi = -1
  Mat<CD> c0(1, 1);
  auto f = make_form(2, 1, {{CD(-1, 0)}}, c0);
  auto r0 = classify_direction(f, 0);
  auto r1 = classify_direction(f, 1);
  CHECK(r0.node[0]);          // Re(1 * -1) < 0
  CHECK_FALSE(r1.node[0]);    // xi = -1: Re((-1)^{1}* -1) = +1
}

TEST_CASE("classification invariant under C -> C + I blow-up shift") {
  Mat<CD> c(2, 2);
  c(0, 0) = CD(0.4, 0);
  c(1, 1) = CD(-0.3, 0);
  auto f = make_form(1, 0, {{CD(-1, 0)}, {CD(0, 1)}}, c);
  auto rep = classify_direction(f, 0);
  Mat<CD> cshift = c;
  cshift(0, 0) += CD(1, 0);
  cshift(1, 1) += CD(1, 0);
  auto f2 = make_form(1, 0, {{CD(-1, 0)}, {CD(0, 1)}}, cshift);
  auto rep2 = classify_direction(f2, 0);
  for (int j = 0; j < 2; ++j) {
    CHECK(rep.node[j] == rep2.node[j]);
    CHECK(rep.r[j] == rep2.r[j]);
  }
}

TEST_CASE("exact signs via the quadratic ring") {
  // exact RSDiffeo with q = 4 directions: angles in 24ths
  RSDiffeo<QC> f;
  f.q = 4;
  f.k = 3;
  f.p = 1;
  f.b = QC(0);
  f.d = PolyMatrix<QC>(1, 1, 3);
  f.d(0, 0).set_coeff_key(mono_var(0, 3), QC(-1));
  f.c = Mat<QC>(1, 1);
  // minimal consistent map jets
  JetTuple<QC> comps;
  Jet<QC> fx(2, 12);
  fx.set_coeff({1, 0}, QC(1));
  fx.set_coeff({5, 0}, QC(-1));
  comps.push_back(fx);
  Jet<QC> fy(2, 12);
  fy.set_coeff({0, 1}, QC(1));
  fy.set_coeff({3, 1}, QC(-1));
  comps.push_back(fy);
  f.map = DiffeoJet<QC>(comps);
  JetTuple<QC> gc(2, Jet<QC>(1, 12));
  gc[0] = Jet<QC>::variable(0, 1, 12);
  f.curve = CurveParam<QC>(gc);

  auto rep = classify_direction(f, 1);  // xi = i
  CHECK(rep.exact_signs);
  // Re(i^{3} * (-1)) = Re(i) = 0 exactly -> r = p, saddle falls to C-part
  CHECK(rep.r[0] == 1);
  CHECK_FALSE(rep.node[0]);
}

TEST_CASE("block partition rescales Jordan entries to c/2") {
  Mat<CD> c(2, 2);
  c(0, 0) = CD(1, 0);
  c(1, 1) = CD(1, 0);
  c(0, 1) = CD(1, 0);  // Jordan block
  auto f = make_form(1, 0, {{CD(1, 0)}, {CD(1, 0)}}, c);
  auto rep = classify_direction(f, 0);
  REQUIRE(rep.stable_dim == 1);  // both saddle
  auto bm = block_partition(f, rep, 0.5);
  CHECK(std::abs(bm.c2(0, 1) - CD(0.25, 0)) < 1e-12);
  CHECK(bm.c2_positive_real);
}

TEST_CASE("sector synthesis verifies the two inequalities") {
  // d2 = -1 node, k = 0, p = 1 -> c = 1/3 verified at eps = 0.2
  Mat<CD> c(2, 2);
  c(1, 1) = CD(1, 0);
  auto f = make_form(1, 0, {{CD(-1, 0)}, {CD(1, 0)}}, c);
  auto rep = classify_direction(f, 0);
  CHECK(rep.node[0]);
  CHECK_FALSE(rep.node[1]);
  auto bm = block_partition(f, rep, 1.0 / 3.0);
  auto sp = synthesize_sector(bm, rep, 3);
  REQUIRE(sp.verified);
  CHECK(sp.c == doctest::Approx(1.0 / 3.0));
  CHECK(sp.eps == doctest::Approx(0.2));
  // fresh 128-grid verification
  CHECK(verify_sector(bm, rep, sp, 128));
}

TEST_CASE("pure-imaginary polynomial part classifies as saddle via C2") {
  // d2 = i (r2 = p case on the real direction), C2 = 1
  Mat<CD> c(1, 1);
  c(0, 0) = CD(1, 0);
  auto f = make_form(1, 0, {{CD(0, 1)}}, c);
  auto rep = classify_direction(f, 0);
  CHECK_FALSE(rep.node[0]);
  CHECK(rep.r[0] == 1);  // = p
  auto bm = block_partition(f, rep, 1.0 / 3.0);
  auto sp = synthesize_sector(bm, rep, 3);
  REQUIRE(sp.verified);
  CHECK(verify_sector(bm, rep, sp, 128));
}

TEST_CASE("empty node block with identity C2 passes at c = 1/3") {
  Mat<CD> c(2, 2);
  c(0, 0) = CD(1, 0);
  c(1, 1) = CD(1, 0);
  auto f = make_form(1, 1, {{}, {}}, c);  // p = 0
  auto rep = classify_direction(f, 0);
  CHECK(rep.stable_dim == 1);
  auto bm = block_partition(f, rep, 1.0 / 3.0);
  auto sp = synthesize_sector(bm, rep, 3);
  REQUIRE(sp.verified);
  CHECK(sp.c == doctest::Approx(1.0 / 3.0));
}
