#include "core/manifold.hpp"

#include <cmath>
#include <memory>

namespace rsnf {

namespace {

// Flat evaluator for sparse polynomial maps: per-variable power tables, then
// one multiply chain per stored monomial.
struct CompiledMap {
  int n = 0;
  int max_exp = 0;
  struct Term {
    MonoKey key;
    CD c;
  };
  std::vector<std::vector<Term>> comps;

  explicit CompiledMap(const DiffeoJet<CD>& f) {
    n = f.dim();
    comps.resize(n);
    for (int i = 0; i < n; ++i) {
      for (const auto& [key, c] : f.comp[i].terms()) {
        comps[i].push_back({key, c});
        for (int v = 0; v < n; ++v) max_exp = std::max(max_exp, mono_exp(key, v));
      }
    }
  }

  void eval(const CD* pt, CD* out) const {
    CD pows[kMaxVars][32];
    for (int v = 0; v < n; ++v) {
      pows[v][0] = CD(1, 0);
      for (int e = 1; e <= max_exp; ++e) pows[v][e] = pows[v][e - 1] * pt[v];
    }
    for (int i = 0; i < n; ++i) {
      CD acc(0, 0);
      for (const auto& t : comps[i]) {
        CD m = t.c;
        for (int v = 0; v < n; ++v) {
          int e = mono_exp(t.key, v);
          if (e) m *= pows[v][e];
        }
        acc += m;
      }
      out[i] = acc;
    }
  }
};

Mat<CD> mat_exp_commuting(const Mat<CD>& a) {
  int n = a.rows();
  Mat<CD> diag(n, n), nil(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) (i == j ? diag : nil)(i, j) = a(i, j);
  Mat<CD> comm = diag * nil - nil * diag;
  if (comm.max_abs() > 1e-9 * std::max(1.0, a.max_abs())) {
    // fall back to scaling and squaring
    Mat<CD> x = a;
    int sq = 0;
    while (x.max_abs() > 0.5) {
      x = CD(0.5, 0) * x;
      ++sq;
    }
    Mat<CD> r = Mat<CD>::identity(n), term = Mat<CD>::identity(n);
    for (int k = 1; k <= 24; ++k) {
      term = CD(1.0 / k, 0) * (term * x);
      r = r + term;
      if (term.max_abs() < 1e-18) break;
    }
    for (int s = 0; s < sq; ++s) r = r * r;
    return r;
  }
  Mat<CD> ed(n, n);
  for (int i = 0; i < n; ++i) ed(i, i) = std::exp(diag(i, i));
  Mat<CD> en = Mat<CD>::identity(n), term = Mat<CD>::identity(n);
  for (int k = 1; k <= n; ++k) {
    term = CD(1.0 / k, 0) * (term * nil);
    if (term.max_abs() == 0.0) break;
    en = en + term;
  }
  return ed * en;
}

double op_norm2(const Mat<CD>& a) {
  int n = a.rows();
  if (n == 0) return 0;
  std::vector<CD> v(n, CD(1.0 / std::sqrt(double(n)), 0));
  double lam = 0;
  for (int it = 0; it < 30; ++it) {
    std::vector<CD> av = a.apply(v);
    std::vector<CD> aav(n, CD(0, 0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) aav[j] += std::conj(a(i, j)) * av[i];
    double norm = 0;
    for (const auto& c : aav) norm += std::norm(c);
    norm = std::sqrt(norm);
    if (norm == 0) return 0;
    lam = norm;
    for (auto& c : aav) c /= norm;
    v = aav;
  }
  return std::sqrt(lam);
}

}  // namespace

CocycleData build_cocycle(const BlockModel& bm) {
  CocycleData cd;
  int nnode = bm.sdim - 1;
  int nsad = static_cast<int>(bm.dbar.size()) - nnode;
  cd.nsad = nsad;
  cd.rho = (bm.k == 0) ? bm.b - CD(bm.p + 1, 0) / CD(2, 0) : CD(0, 0);

  int p = bm.p;
  std::vector<Mat<CD>> num(p + 1, Mat<CD>(nsad, nsad));
  for (int i = 0; i < nsad; ++i)
    for (int l = 0; l <= p - 1; ++l) num[l](i, i) = bm.dbar[nnode + i][l];
  num[p] = num[p] + bm.c2;

  std::map<int, Mat<CD>> anti;
  cd.residue = Mat<CD>(nsad, nsad);
  if (p == 0) {
    CD factor = CD(1, 0) / (CD(1, 0) - cd.rho);
    cd.residue = factor * num[0];
    cd.power_terms.clear();
    return cd;
  }
  const int cutoff = 40;
  CD rhoj(1, 0);
  for (int j = 0; j * p <= cutoff + p + 1; ++j) {
    for (int l = 0; l <= p; ++l) {
      int e = l + p * j - p - 1;
      if (e > cutoff) continue;
      Mat<CD> coeff = rhoj * num[l];
      if (coeff.max_abs() < 1e-300) continue;
      if (e == -1) {
        cd.residue = cd.residue + coeff;
      } else {
        Mat<CD> term = (CD(1.0 / (e + 1), 0)) * coeff;
        auto it = anti.find(e + 1);
        if (it == anti.end())
          anti.emplace(e + 1, term);
        else
          it->second = it->second + term;
      }
    }
    rhoj *= cd.rho;
    if (std::abs(rhoj) < 1e-18 && j > 0) break;
  }
  for (auto& [e, m] : anti)
    if (m.max_abs() > 0) cd.power_terms.emplace_back(e, m);
  return cd;
}

namespace {

Mat<CD> cocycle_exponent(const CocycleData& cd, CD x) {
  Mat<CD> acc(cd.nsad, cd.nsad);
  // Horner over the negative then positive exponents
  CD xinv = CD(1, 0) / x;
  for (const auto& [e, m] : cd.power_terms) {
    CD xp = e >= 0 ? std::pow(x, double(e)) : std::pow(xinv, double(-e));
    acc = acc + xp * m;
  }
  acc = acc + std::log(x) * cd.residue;
  return acc;
}

}  // namespace

Mat<CD> cocycle_E(const CocycleData& cd, CD x) {
  Mat<CD> ex = cocycle_exponent(cd, x);
  return mat_exp_commuting(CD(-1, 0) * ex);
}

Mat<CD> cocycle_ratio(const CocycleData& cd, CD x0, CD x1) {
  Mat<CD> diff = cocycle_exponent(cd, x1) - cocycle_exponent(cd, x0);
  return mat_exp_commuting(diff);
}

/// Per-instance caches: compiled map, scalar cocycle coefficients, psi fits.
struct StableGraph::Engine {
  std::unique_ptr<CompiledMap> cm;
  // scalar cocycle (nsad == 1): exponent(x) = sum c_e x^e + res log x,
  // stored densely for Horner evaluation
  bool scalar = false;
  std::vector<CD> spos;  // exponents 0, 1, 2, ...
  std::vector<CD> sneg;  // exponents -1, -2, ... (index e-1 holds x^{-e})
  CD sres{};
  // fitted psi coefficients per (ir, ia): c0[i], c1[i] for each saddle coord
  std::vector<CD> fit0, fit1;
  std::vector<CD> nodex;
  // least-squares normal data for the fixed relative w grid
  CD s00{}, s01{}, s11{}, det{};
};

namespace {
CD scalar_exponent_impl(const std::vector<CD>& spos, const std::vector<CD>& sneg, const CD& sres,
                        CD x) {
  CD acc(0, 0);
  for (int i = static_cast<int>(spos.size()) - 1; i >= 0; --i) acc = acc * x + spos[i];
  if (!sneg.empty()) {
    CD xinv = CD(1, 0) / x;
    CD neg(0, 0);
    for (int i = static_cast<int>(sneg.size()) - 1; i >= 0; --i) neg = (neg + sneg[i]) * xinv;
    acc += neg;
  }
  return acc + sres * std::log(x);
}
}  // namespace

StableGraph::StableGraph(BlockModel bm, GraphDomain dom)
    : bm_(std::move(bm)), dom_(std::move(dom)) {
  if (dom_.eps_cap > 0) dom_.sector.eps = std::min(dom_.sector.eps, dom_.eps_cap);
  coc_ = build_cocycle(bm_);
  nnode_ = bm_.sdim - 1;
  nsad_ = static_cast<int>(bm_.dbar.size()) - nnode_;
  if (nnode_ > 1)
    throw std::domain_error("StableGraph: more than one node variable is beyond this solver");
  const auto& sp = dom_.sector;
  double r_hi = sp.eps * 0.95;
  double r_lo = sp.eps * dom_.rmin_factor;
  logr_.resize(dom_.nx_radial);
  for (int i = 0; i < dom_.nx_radial; ++i)
    logr_[i] = std::log(r_hi) + (std::log(r_lo) - std::log(r_hi)) *
                                    (dom_.nx_radial == 1 ? 0.0 : double(i) / (dom_.nx_radial - 1));
  angf_.resize(dom_.nx_angular);
  for (int j = 0; j < dom_.nx_angular; ++j)
    angf_[j] = dom_.nx_angular == 1 ? 0.5 : double(j) / (dom_.nx_angular - 1);
  if (nnode_ == 0) {
    wgrid_.push_back({});
  } else {
    wgrid_.push_back({CD(0, 0)});
    for (int t = 1; t < dom_.nw; ++t) {
      double radius = (t <= dom_.nw / 2) ? 0.45 : 0.85;
      double ang = 2 * M_PI * t / std::max(1, dom_.nw - 1);
      wgrid_.push_back({radius * std::exp(CD(0, ang))});
    }
  }
  dom_.nw = static_cast<int>(wgrid_.size());
  values_.assign(size_t(dom_.nx_radial) * dom_.nx_angular * dom_.nw,
                 std::vector<CD>(nsad_, CD(0, 0)));

  eng_ = std::make_shared<Engine>();
  eng_->cm = std::make_unique<CompiledMap>(bm_.map);
  eng_->scalar = (nsad_ == 1);
  if (eng_->scalar) {
    int maxpos = 0, maxneg = 0;
    for (const auto& [e, m] : coc_.power_terms) {
      if (e >= 0) maxpos = std::max(maxpos, e);
      else maxneg = std::max(maxneg, -e);
    }
    eng_->spos.assign(maxpos + 1, CD(0, 0));
    eng_->sneg.assign(maxneg, CD(0, 0));
    for (const auto& [e, m] : coc_.power_terms) {
      if (e >= 0) eng_->spos[e] = m(0, 0);
      else eng_->sneg[-e - 1] = m(0, 0);
    }
    eng_->sres = coc_.residue(0, 0);
  }
  eng_->s00 = CD(double(dom_.nw), 0);
  eng_->s01 = CD(0, 0);
  eng_->s11 = CD(0, 0);
  for (int t = 0; t < dom_.nw && nnode_ > 0; ++t) {
    CD wt = wgrid_[t][0];
    eng_->s01 += wt;
    eng_->s11 += wt * std::conj(wt);
  }
  eng_->det = eng_->s00 * eng_->s11 - eng_->s01 * std::conj(eng_->s01);
  eng_->nodex.resize(size_t(dom_.nx_radial) * dom_.nx_angular);
  for (int ir = 0; ir < dom_.nx_radial; ++ir)
    for (int ia = 0; ia < dom_.nx_angular; ++ia)
      eng_->nodex[ir * dom_.nx_angular + ia] = node_x(ir, ia);
  rebuild_fits();
}

void StableGraph::angular_span(double re, double& lo, double& hi) const {
  const auto& sp = dom_.sector;
  double wedge = std::pow(re, double(sp.r_max + 1));
  double cap2 = sp.eps * 0.995 * sp.eps * 0.995 - re * re;
  double cap = cap2 > 0 ? std::sqrt(cap2) : 0.0;
  lo = -std::min(sp.d * wedge, cap);
  hi = std::min(sp.e * wedge, cap);
}

CD StableGraph::node_x(int ir, int ia) const {
  double re = std::exp(logr_[ir]);
  double lo, hi;
  angular_span(re, lo, hi);
  return CD(re, lo + (hi - lo) * angf_[ia]);
}

std::vector<CD> StableGraph::node_w(int ir, int ia, int iw) const {
  std::vector<CD> w(nnode_);
  CD x = node_x(ir, ia);
  double scalew = std::pow(std::abs(x), double(dom_.m - 1)) * 0.98;
  for (int i = 0; i < nnode_; ++i) w[i] = wgrid_[iw][i] * scalew;
  return w;
}

void StableGraph::node_coords(int idx, CD& x, std::vector<CD>& w) const {
  int iw = idx % dom_.nw;
  int ia = (idx / dom_.nw) % dom_.nx_angular;
  int ir = idx / (dom_.nw * dom_.nx_angular);
  x = node_x(ir, ia);
  w = node_w(ir, ia, iw);
}

void StableGraph::rebuild_fits() {
  auto& e = *eng_;
  size_t cells = size_t(dom_.nx_radial) * dom_.nx_angular;
  e.fit0.assign(cells * nsad_, CD(0, 0));
  e.fit1.assign(cells * nsad_, CD(0, 0));
  for (int ir = 0; ir < dom_.nx_radial; ++ir)
    for (int ia = 0; ia < dom_.nx_angular; ++ia) {
      size_t cell = size_t(ir) * dom_.nx_angular + ia;
      CD xc = e.nodex[cell];
      CD xm = std::pow(xc, double(dom_.m));
      if (nnode_ == 0) {
        const auto& v = values_[index_of(ir, ia, 0)];
        for (int i = 0; i < nsad_; ++i) e.fit0[cell * nsad_ + i] = v[i] / xm;
        continue;
      }
      for (int i = 0; i < nsad_; ++i) {
        CD b0(0, 0), b1(0, 0);
        for (int t = 0; t < dom_.nw; ++t) {
          CD psi = values_[index_of(ir, ia, t)][i] / xm;
          b0 += psi;
          b1 += psi * std::conj(wgrid_[t][0]);
        }
        CD c0, c1;
        if (std::abs(e.det) > 1e-30) {
          c0 = (b0 * e.s11 - b1 * e.s01) / e.det;
          c1 = (e.s00 * b1 - std::conj(e.s01) * b0) / e.det;
        } else {
          c0 = b0 / e.s00;
          c1 = CD(0, 0);
        }
        e.fit0[cell * nsad_ + i] = c0;
        e.fit1[cell * nsad_ + i] = c1;
      }
    }
}

namespace {

// cubic Lagrange stencil on a uniform grid, clamped at the edges
inline void stencil4(double s, int count, int idx[4], double wgt[4]) {
  if (count == 1) {
    idx[0] = idx[1] = idx[2] = idx[3] = 0;
    wgt[0] = 1;
    wgt[1] = wgt[2] = wgt[3] = 0;
    return;
  }
  if (count < 4) {
    int i0 = std::clamp(static_cast<int>(std::floor(s)), 0, count - 2);
    double t = std::clamp(s - i0, 0.0, 1.0);
    idx[0] = i0;
    idx[1] = i0 + 1;
    idx[2] = idx[3] = i0;
    wgt[0] = 1 - t;
    wgt[1] = t;
    wgt[2] = wgt[3] = 0;
    return;
  }
  int base = std::clamp(static_cast<int>(std::floor(s)) - 1, 0, count - 4);
  double t = s - base;
  static const double o[4] = {0, 1, 2, 3};
  for (int a = 0; a < 4; ++a) {
    double wv = 1;
    for (int b = 0; b < 4; ++b)
      if (a != b) wv *= (t - o[b]) / (o[a] - o[b]);
    idx[a] = base + a;
    wgt[a] = wv;
  }
}

}  // namespace

std::vector<CD> StableGraph::interp(CD x, const std::vector<CD>& w) const {
  const auto& e = *eng_;
  double u = std::log(std::max(std::abs(x), 1e-300));
  double hu = dom_.nx_radial > 1 ? (logr_[1] - logr_[0]) : -1.0;
  double su = dom_.nx_radial > 1 ? (u - logr_[0]) / hu : 0.0;
  double lo, hi;
  angular_span(std::max(x.real(), 1e-300), lo, hi);
  double f = hi > lo ? (x.imag() - lo) / (hi - lo) : 0.5;
  f = std::clamp(f, 0.0, 1.0);
  double sa = f * (dom_.nx_angular - 1);

  double scalew = std::pow(std::abs(x), double(dom_.m - 1)) * 0.98;
  CD what = (nnode_ > 0 && scalew > 0) ? w[0] / scalew : CD(0, 0);

  int iu[4], ia4[4];
  double wu[4], wa[4];
  stencil4(su, dom_.nx_radial, iu, wu);
  stencil4(sa, dom_.nx_angular, ia4, wa);

  CD xm_query = std::pow(x, double(dom_.m));
  std::vector<CD> out(nsad_, CD(0, 0));
  for (int a = 0; a < 4; ++a) {
    if (wu[a] == 0.0) continue;
    for (int b = 0; b < 4; ++b) {
      if (wa[b] == 0.0) continue;
      size_t cell = size_t(iu[a]) * dom_.nx_angular + ia4[b];
      double wgt = wu[a] * wa[b];
      for (int i = 0; i < nsad_; ++i)
        out[i] += wgt * (e.fit0[cell * nsad_ + i] + e.fit1[cell * nsad_ + i] * what);
    }
  }
  for (int i = 0; i < nsad_; ++i) out[i] *= xm_query;
  double bound = clamp_bound(x);
  double norm = 0;
  for (const auto& v : out) norm += std::norm(v);
  norm = std::sqrt(norm);
  if (norm > bound && norm > 0)
    for (auto& v : out) v *= bound / norm;
  return out;
}

std::vector<CD> StableGraph::apply_T(CD x0, const std::vector<CD>& w0, double tail_tol,
                                     int lookahead) const {
  const auto& sp = dom_.sector;
  const auto& eng = *eng_;
  CD x = x0;
  std::vector<CD> w = w0;
  const int hard_cap = 2000000;
  int kp = bm_.k + bm_.p;
  int j = 0;
  double tail_guard = 0;

  // scalar fast path (one saddle coordinate)
  if (eng.scalar) {
    CD cum(1, 0), acc(0, 0);
    CD expo_cur = scalar_exponent_impl(eng.spos, eng.sneg, eng.sres, x);
    CD pt[kMaxVars], img[kMaxVars];
    while (true) {
      std::vector<CD> zv = interp(x, w);
      pt[0] = x;
      for (int i = 0; i < nnode_; ++i) pt[1 + i] = w[i];
      pt[1 + nnode_] = zv[0];
      eng.cm->eval(pt, img);
      CD xn = img[0];
      {
        double wedge = std::pow(std::max(xn.real(), 0.0), double(sp.r_max + 1));
        double cap2 = sp.eps * sp.eps - std::norm(xn);
        bool inside = xn.real() > 0 && cap2 > 0 && xn.imag() > -sp.d * wedge * 1.0000001 &&
                      xn.imag() < sp.e * wedge * 1.0000001;
        if (!inside)
          throw std::domain_error(
              "apply_T: orbit leaves the domain (sector parameters too large)");
      }
      CD expo_next = scalar_exponent_impl(eng.spos, eng.sneg, eng.sres, xn);
      CD ratio = std::exp(expo_next - expo_cur);
      CD h = zv[0] - ratio * img[1 + nnode_];
      acc += cum * h;
      cum *= ratio;
      ++j;
      x = xn;
      for (int i = 0; i < nnode_; ++i) w[i] = img[1 + i];
      expo_cur = expo_next;
      if (lookahead > 0) {
        double closure_err = 1e-5 * std::pow(std::abs(x), double(dom_.m));
        if ((j >= lookahead && closure_err <= tail_tol) || j >= 64 * lookahead + 4000) {
          acc += cum * interp(x, w)[0];
          break;
        }
      } else {
        double hn = std::abs(cum * h);
        double xm = std::pow(std::abs(x), double(dom_.m));
        if (hn < tail_tol * 0.01 && xm * (1.0 + tail_guard) < tail_tol * 0.1) break;
        tail_guard = std::max(tail_guard,
                              hn / std::max(std::pow(std::abs(x), double(kp + dom_.m)), 1e-300));
        if (j >= hard_cap)
          throw std::domain_error("apply_T: series did not reach the tail tolerance at the cap");
      }
    }
    double bound = clamp_bound(x0);
    if (std::abs(acc) > bound) acc *= bound / std::abs(acc);
    return {acc};
  }

  // general matrix path
  Mat<CD> cum = Mat<CD>::identity(nsad_);
  std::vector<CD> acc(nsad_, CD(0, 0));
  Mat<CD> expo_cur = cocycle_exponent(coc_, x);
  while (true) {
    std::vector<CD> z = interp(x, w);
    CD xn;
    std::vector<CD> wn, zn;
    step(x, w, z, xn, wn, zn);
    {
      double wedge = std::pow(std::max(xn.real(), 0.0), double(sp.r_max + 1));
      double cap2 = sp.eps * sp.eps - std::norm(xn);
      bool inside = xn.real() > 0 && cap2 > 0 && xn.imag() > -sp.d * wedge * 1.0000001 &&
                    xn.imag() < sp.e * wedge * 1.0000001;
      if (!inside)
        throw std::domain_error("apply_T: orbit leaves the domain (sector parameters too large)");
    }
    Mat<CD> expo_next = cocycle_exponent(coc_, xn);
    Mat<CD> ratio = mat_exp_commuting(expo_next - expo_cur);
    std::vector<CD> rz = ratio.apply(zn);
    std::vector<CD> h(nsad_);
    for (int i = 0; i < nsad_; ++i) h[i] = z[i] - rz[i];
    std::vector<CD> term = cum.apply(h);
    for (int i = 0; i < nsad_; ++i) acc[i] += term[i];
    cum = cum * ratio;
    ++j;
    x = xn;
    w = wn;
    expo_cur = expo_next;
    if (lookahead > 0) {
      double closure_err = 1e-5 * std::pow(std::abs(x), double(dom_.m));
      if ((j >= lookahead && closure_err <= tail_tol) || j >= 64 * lookahead + 4000) {
        std::vector<CD> closure = cum.apply(interp(x, w));
        for (int i = 0; i < nsad_; ++i) acc[i] += closure[i];
        break;
      }
    } else {
      double hn = 0;
      for (const auto& v : term) hn = std::max(hn, std::abs(v));
      double xm = std::pow(std::abs(x), double(dom_.m));
      if (hn < tail_tol * 0.01 && xm * (1.0 + tail_guard) < tail_tol * 0.1) break;
      tail_guard = std::max(
          tail_guard, hn / std::max(std::pow(std::abs(x), double(kp + dom_.m)), 1e-300));
      if (j >= hard_cap)
        throw std::domain_error("apply_T: series did not reach the tail tolerance at the cap");
    }
  }
  double bound = clamp_bound(x0);
  double norm = 0;
  for (const auto& v : acc) norm += std::norm(v);
  norm = std::sqrt(norm);
  if (norm > bound && norm > 0)
    for (auto& v : acc) v *= bound / norm;
  return acc;
}

void StableGraph::step(CD x, const std::vector<CD>& w, const std::vector<CD>& z, CD& xn,
                       std::vector<CD>& wn, std::vector<CD>& zn) const {
  CD pt[kMaxVars], out[kMaxVars];
  pt[0] = x;
  for (int i = 0; i < nnode_; ++i) pt[1 + i] = w[i];
  for (int i = 0; i < nsad_; ++i) pt[1 + nnode_ + i] = z[i];
  eng_->cm->eval(pt, out);
  xn = out[0];
  wn.assign(nnode_, CD(0, 0));
  for (int i = 0; i < nnode_; ++i) wn[i] = out[1 + i];
  zn.assign(nsad_, CD(0, 0));
  for (int i = 0; i < nsad_; ++i) zn[i] = out[1 + nnode_ + i];
}

std::vector<CD> StableGraph::f2_of(CD x, const std::vector<CD>& w,
                                   const std::vector<CD>& z) const {
  CD xn;
  std::vector<CD> wn, zn;
  step(x, w, z, xn, wn, zn);
  return zn;
}

std::vector<CD> StableGraph::eval(CD x, const std::vector<CD>& w) const {
  return apply_T(x, w, 1e-13, 32);
}

StableGraph::SolveStats StableGraph::solve(double tol, int max_sweeps) {
  stats_ = SolveStats{};
  int total = nodes();
  std::vector<std::vector<CD>> next(total);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double delta = 0;
    for (int idx = 0; idx < total; ++idx) {
      CD x;
      std::vector<CD> w;
      node_coords(idx, x, w);
      next[idx] = apply_T(x, w, tol * 0.1, 32);
      for (int i = 0; i < nsad_; ++i)
        delta = std::max(delta, std::abs(next[idx][i] - values_[idx][i]));
    }
    values_.swap(next);
    rebuild_fits();
    stats_.sweeps = sweep;
    stats_.final_delta = delta;
    if (delta < tol) {
      stats_.converged = true;
      break;
    }
  }
  // invariance residual over the grid with the T-backed evaluation rule
  double resid = 0, supn = 0;
  for (int idx = 0; idx < total; ++idx) {
    CD x;
    std::vector<CD> w;
    node_coords(idx, x, w);
    std::vector<CD> a = eval(x, w);
    for (const auto& v : a) supn = std::max(supn, std::abs(v));
    CD xn;
    std::vector<CD> wn, zn;
    step(x, w, a, xn, wn, zn);
    std::vector<CD> b = eval(xn, wn);
    for (int i = 0; i < nsad_; ++i) resid = std::max(resid, std::abs(b[i] - zn[i]));
  }
  stats_.residual = resid;
  stats_.sup_norm = supn;
  {
    double excess = 0;
    for (int ir = 0; ir < dom_.nx_radial; ir += std::max(1, dom_.nx_radial / 8))
      for (int ia = 0; ia < dom_.nx_angular; ia += std::max(1, dom_.nx_angular / 8)) {
        CD x = node_x(ir, ia);
        std::vector<CD> w = node_w(ir, ia, 0);
        std::vector<CD> z = interp(x, w);
        CD xn;
        std::vector<CD> wn, zn;
        try {
          step(x, w, z, xn, wn, zn);
          Mat<CD> ratio = cocycle_ratio(coc_, x, xn);
          excess = std::max(excess, op_norm2(ratio) - 1.0);
        } catch (...) {
        }
      }
    stats_.cocycle_excess = excess;
  }
  return stats_;
}

OrbitTrace iterate_orbit(const DiffeoJet<CD>& map, std::vector<CD> start, int max_steps,
                         const SectorParams& sector, int k_plus_p, int m_bound,
                         double escape_factor) {
  OrbitTrace tr;
  CompiledMap cm(map);
  int n = map.dim();
  std::vector<CD> pt = start;
  CD cur[kMaxVars], nxt[kMaxVars];
  for (int i = 0; i < n; ++i) cur[i] = pt[i];
  int record_stride = std::max(1, max_steps / 4096);
  for (int j = 0; j < max_steps; ++j) {
    if (j % record_stride == 0 || j < 64)
      tr.points.push_back(std::vector<CD>(cur, cur + n));
    cm.eval(cur, nxt);
    for (int i = 0; i < n; ++i) cur[i] = nxt[i];
    ++tr.steps;
    double norm = 0;
    for (int i = 0; i < n; ++i) norm = std::max(norm, std::abs(cur[i]));
    if (!std::isfinite(norm) || norm > 1.0) {
      tr.escaped = true;
      break;
    }
    CD x = cur[0];
    double ax = std::abs(x);
    double est = double(k_plus_p) * (j + 1) * std::pow(x, double(k_plus_p)).real();
    if (j % record_stride == 0) tr.estimate.push_back(est);
    double wedge = std::pow(std::max(x.real(), 0.0), double(sector.r_max + 1));
    bool inside = x.real() > 0 && ax < sector.eps && x.imag() > -sector.d * wedge &&
                  x.imag() < sector.e * wedge;
    if (!inside && ax < sector.eps) tr.stayed_in_sector = false;
    double zn = 0;
    for (int i = 1; i < n; ++i) zn = std::max(zn, std::abs(cur[i]));
    if (zn > escape_factor * std::pow(ax, double(m_bound - 1)) && zn > 1e-13) {
      tr.escaped = true;
      break;
    }
    if (ax < 1e-14) {
      tr.converged = true;
      break;
    }
  }
  if (!tr.escaped) {
    double ax = std::abs(cur[0]);
    if (ax < 5e-3) tr.converged = true;
  }
  tr.points.push_back(std::vector<CD>(cur, cur + n));
  return tr;
}

OrbitTrace iterate_orbit_on_graph(const StableGraph& graph, CD x0, std::vector<CD> w0,
                                  int max_steps) {
  OrbitTrace tr;
  const auto& bm = graph.model();
  int nnode = bm.sdim - 1;
  CompiledMap cm(bm.map);
  int n = bm.n;
  CD cur[kMaxVars], nxt[kMaxVars];
  cur[0] = x0;
  for (int i = 0; i < nnode; ++i) cur[1 + i] = w0[i];
  int kp = bm.k + bm.p;
  int record_stride = std::max(1, max_steps / 4096);
  for (int j = 0; j < max_steps; ++j) {
    CD x = cur[0];
    std::vector<CD> w(cur + 1, cur + 1 + nnode);
    std::vector<CD> z;
    try {
      z = graph.eval(x, w);
    } catch (const std::exception&) {
      z = graph.interp(x, w);
    }
    for (size_t i = 0; i < z.size(); ++i) cur[1 + nnode + i] = z[i];
    if (j % record_stride == 0 || j < 64)
      tr.points.push_back(std::vector<CD>(cur, cur + n));
    cm.eval(cur, nxt);
    // advance the base; z is recomputed from the graph next round
    cur[0] = nxt[0];
    for (int i = 0; i < nnode; ++i) cur[1 + i] = nxt[1 + i];
    ++tr.steps;
    double ax = std::abs(cur[0]);
    if (!std::isfinite(ax)) {
      tr.escaped = true;
      break;
    }
    double est = double(kp) * (j + 1) * std::pow(cur[0], double(kp)).real();
    if (j % record_stride == 0) tr.estimate.push_back(est);
    if (ax < 2e-4) {
      tr.converged = true;
      break;
    }
  }
  if (!tr.escaped && std::abs(cur[0]) < 5e-3) tr.converged = true;
  {
    CD x = cur[0];
    std::vector<CD> w(cur + 1, cur + 1 + nnode);
    std::vector<CD> z;
    try {
      z = graph.eval(x, w);
    } catch (const std::exception&) {
      z = graph.interp(x, w);
    }
    for (size_t i = 0; i < z.size(); ++i) cur[1 + nnode + i] = z[i];
    tr.points.push_back(std::vector<CD>(cur, cur + n));
  }
  return tr;
}

BlockModel shift_to_m_frame(const BlockModel& bm, int m) {
  BlockModel out = bm;
  CurveParam<CD> g = graph_form(bm.curve);
  int n = bm.n;
  int cut = bm.p + m - 1;
  JetTuple<CD> shift;
  bool nontrivial = false;
  for (int j = 1; j < n; ++j) {
    shift.push_back(g.comp[j].truncated(std::min(cut, g.order())));
    if (!shift.back().is_zero()) nontrivial = true;
  }
  if (!nontrivial) return out;
  auto mp = rsp_detail::y_shift_map(shift, n, bm.map.order());
  auto [ft, gt] = apply_to_diffeo(mp, bm.map, bm.curve);
  out.map = ft;
  out.curve = gt;
  return out;
}

MembershipReport membership_and_asymptoticity(const OrbitTrace& orbit,
                                              const CurveParam<CD>& gamma,
                                              const StableGraph& graph) {
  MembershipReport rep;
  if (orbit.points.empty()) return rep;
  int nnode = graph.model().sdim - 1;
  int m = graph.domain().m;

  {
    int tail = std::max(1, static_cast<int>(orbit.points.size()) / 4);
    bool ok = true;
    for (size_t i = orbit.points.size() - tail; i < orbit.points.size(); ++i) {
      CD x = orbit.points[i][0];
      if (std::abs(x) > 0 && std::abs(std::arg(x)) > 0.2) ok = false;
    }
    rep.tangent_to_rplus = ok && orbit.converged;
  }

  const auto& sp = graph.domain().sector;
  for (size_t i = 0; i < orbit.points.size(); ++i) {
    const auto& ptv = orbit.points[i];
    CD x = ptv[0];
    double ax = std::abs(x);
    double wedge = std::pow(std::max(x.real(), 0.0), double(sp.r_max + 1));
    bool inside = x.real() > 0 && ax < sp.eps && x.imag() > -sp.d * wedge && x.imag() < sp.e * wedge;
    if (!inside) continue;
    std::vector<CD> w(ptv.begin() + 1, ptv.begin() + 1 + nnode);
    double wb = std::pow(ax, double(m - 1));
    bool wok = true;
    for (const auto& c : w)
      if (std::abs(c) >= wb) wok = false;
    if (!wok) continue;
    std::vector<CD> z(ptv.begin() + 1 + nnode, ptv.end());
    std::vector<CD> zg;
    try {
      zg = graph.eval(x, w);
    } catch (const std::exception&) {
      continue;
    }
    double dist = 0;
    for (size_t t = 0; t < z.size(); ++t) dist = std::max(dist, std::abs(z[t] - zg[t]));
    double tol_graph = std::max(1e-11, 1e-3 * wb);
    if (dist <= tol_graph) {
      if (rep.graph_entry_index < 0) rep.graph_entry_index = static_cast<int>(i);
      rep.eventually_on_graph = true;
      rep.final_graph_distance = dist;
    } else if (rep.eventually_on_graph) {
      rep.eventually_on_graph = false;
      rep.graph_entry_index = -1;
    }
  }

  rep.contact_orders.assign(std::max(0, m - 1), 0);
  {
    int checked = 0;
    for (size_t i = orbit.points.size() / 2; i < orbit.points.size(); ++i) {
      const auto& ptv = orbit.points[i];
      if (std::abs(ptv[0]) == 0.0) continue;
      int got;
      try {
        got = asymptotic_contact_order(gamma, ptv);
      } catch (const std::exception&) {
        continue;
      }
      ++checked;
      for (int N = 1; N <= m - 1; ++N)
        if (got >= N) rep.contact_orders[N - 1] += 1;
    }
    for (int N = 1; N <= m - 1; ++N)
      rep.contact_orders[N - 1] =
          (checked > 0 && rep.contact_orders[N - 1] >= checked * 3 / 4) ? 1 : 0;
  }
  {
    std::vector<std::vector<CD>> tail(orbit.points.begin() + orbit.points.size() / 2,
                                      orbit.points.end());
    rep.slope = contact_loglog_slope(gamma, tail, m - 1);
    rep.asymptotic_bootstrap = rep.slope >= (m - 1) + 0.75;
  }
  return rep;
}

}  // namespace rsnf
