#include "core/classify.hpp"

namespace rsnf {

namespace {

// Re(sum_l a_l x^{k+l}) for the node test and Re(... + x^{k+p} A_p) for the
// saddle test, evaluated on sector sample points.
CD poly_eval(const std::vector<CD>& coeffs, CD x, int k) {
  CD acc(0, 0);
  CD xp = std::pow(x, double(k));
  for (size_t l = 0; l < coeffs.size(); ++l) {
    acc += coeffs[l] * xp;
    xp *= x;
  }
  return acc;
}

struct GridPoint {
  CD x;
};

std::vector<GridPoint> sector_grid(const SectorParams& sp, int r_plus_1, int grid) {
  std::vector<GridPoint> pts;
  pts.reserve(size_t(grid) * grid);
  for (int i = 1; i <= grid; ++i) {
    double re = sp.eps * i / (grid + 1);
    double span_lo = -sp.d * std::pow(re, double(r_plus_1));
    double span_hi = sp.e * std::pow(re, double(r_plus_1));
    for (int j = 0; j < grid; ++j) {
      double im = span_lo + (span_hi - span_lo) * (j + 0.5) / grid;
      CD x(re, im);
      if (std::abs(x) >= sp.eps) continue;
      pts.push_back({x});
    }
  }
  return pts;
}

bool check_point(const BlockModel& bm, const DirectionReport& rep, double c, CD x) {
  int nnode = bm.sdim - 1;
  int ny = static_cast<int>(bm.dbar.size());
  double ax = std::abs(x);
  for (int j = 0; j < nnode; ++j) {
    double lhs = poly_eval(bm.dbar[j], x, bm.k).real();
    if (!(lhs <= -c * std::pow(ax, double(bm.k + rep.t)))) return false;
  }
  for (int j = nnode; j < ny; ++j) {
    std::vector<CD> coeffs = bm.dbar[j];
    coeffs.push_back(bm.cdiag[j]);
    double lhs = poly_eval(coeffs, x, bm.k).real();
    if (!(lhs >= c * std::pow(ax, double(bm.k + bm.p)))) return false;
  }
  return true;
}

}  // namespace

SectorParams synthesize_sector(const BlockModel& bm, const DirectionReport& rep, int m, int grid,
                               int max_halvings) {
  SectorParams sp;
  sp.m = m;
  sp.grid = grid;
  int ny = static_cast<int>(bm.dbar.size());

  // c from the dominant coefficients: |Re A_{j, r_j}| / 3, minimum over the
  // variables whose first significant coefficient is nonzero; saddle
  // variables with r_j = p contribute Re(C2 diagonal) / 3
  double c = 1e300;
  for (int j = 0; j < ny; ++j) {
    int rj = rep.r[bm.order[j]];
    double re;
    if (rj < bm.p)
      re = std::abs(bm.dbar[j][rj].real());
    else
      re = bm.cdiag[j].real();
    if (re > 1e-14) c = std::min(c, re / 3.0);
  }
  if (c >= 1e299) {
    sp.failure = "no nonzero dominant real parts; classification is degenerate";
    return sp;
  }
  sp.c = c;
  sp.r_max = rep.r_max;

  int r_plus_1 = rep.r_max + 1;
  for (sp.halvings = 0; sp.halvings <= max_halvings; ++sp.halvings) {
    bool ok = true;
    for (const auto& gp : sector_grid(sp, r_plus_1, grid)) {
      if (!check_point(bm, rep, sp.c, gp.x)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      sp.verified = true;
      sp.interval_pass = verify_sector_intervals(bm, rep, sp, grid / 2);
      return sp;
    }
    sp.d /= 2;
    sp.e /= 2;
    sp.eps /= 2;
  }
  sp.failure =
      "sector inequalities persistently fail; misclassification or indeterminate signs";
  return sp;
}

bool verify_sector(const BlockModel& bm, const DirectionReport& rep, const SectorParams& sp,
                   int grid) {
  int r_plus_1 = rep.r_max + 1;
  SectorParams fresh = sp;
  for (const auto& gp : sector_grid(fresh, r_plus_1, grid))
    if (!check_point(bm, rep, sp.c, gp.x)) return false;
  return true;
}

namespace {

struct Interval {
  double lo = 0, hi = 0;
  static Interval pt(double v) { return {v, v}; }
  static Interval hull(double a, double b) { return {std::min(a, b), std::max(a, b)}; }
  Interval operator+(const Interval& o) const {
    return {std::nextafter(lo + o.lo, -1e308), std::nextafter(hi + o.hi, 1e308)};
  }
  Interval operator-(const Interval& o) const {
    return {std::nextafter(lo - o.hi, -1e308), std::nextafter(hi - o.lo, 1e308)};
  }
  Interval operator*(const Interval& o) const {
    double a = lo * o.lo, b = lo * o.hi, c = hi * o.lo, d = hi * o.hi;
    return {std::nextafter(std::min({a, b, c, d}), -1e308),
            std::nextafter(std::max({a, b, c, d}), 1e308)};
  }
};

struct CInterval {
  Interval re, im;
  CInterval operator+(const CInterval& o) const { return {re + o.re, im + o.im}; }
  CInterval operator*(const CInterval& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
};

}  // namespace

bool verify_sector_intervals(const BlockModel& bm, const DirectionReport& rep,
                             const SectorParams& sp, int grid) {
  if (grid < 2) return false;
  int nnode = bm.sdim - 1;
  int ny = static_cast<int>(bm.dbar.size());
  int r_plus_1 = rep.r_max + 1;
  // cells in (re, im-fraction) space covering the sector
  for (int i = 0; i < grid; ++i) {
    double re0 = sp.eps * (i) / double(grid);
    double re1 = sp.eps * (i + 1) / double(grid);
    if (re0 == 0.0) re0 = sp.eps * 0.25 / double(grid);
    double span0 = std::pow(re1, double(r_plus_1));
    for (int j = 0; j < grid; ++j) {
      double f0 = -sp.d + (sp.d + sp.e) * j / double(grid);
      double f1 = -sp.d + (sp.d + sp.e) * (j + 1) / double(grid);
      CInterval x{Interval::hull(re0, re1), Interval::hull(f0 * span0, f1 * span0)};
      // |x|^t bounds
      double ax_hi = std::hypot(re1, std::max(std::abs(f0), std::abs(f1)) * span0);
      auto pow_int = [&](const CInterval& base, int e) {
        CInterval acc{Interval::pt(1), Interval::pt(0)};
        for (int t = 0; t < e; ++t) acc = acc * base;
        return acc;
      };
      for (int v = 0; v < ny; ++v) {
        std::vector<CD> coeffs = bm.dbar[v];
        bool saddle = v >= nnode;
        if (saddle) coeffs.push_back(bm.cdiag[v]);
        CInterval acc{Interval::pt(0), Interval::pt(0)};
        for (size_t l = 0; l < coeffs.size(); ++l) {
          CInterval cl{Interval::pt(coeffs[l].real()), Interval::pt(coeffs[l].imag())};
          acc = acc + cl * pow_int(x, bm.k + static_cast<int>(l));
        }
        if (!saddle) {
          double bound = -sp.c * std::pow(ax_hi, double(bm.k + rep.t));
          if (!(acc.re.hi <= bound)) return false;
        } else {
          // need Re >= c |x|^{k+p} for all x in the cell; use the max of |x|
          double bound = sp.c * std::pow(ax_hi, double(bm.k + bm.p));
          if (!(acc.re.lo >= bound)) return false;
        }
      }
    }
  }
  return true;
}

}  // namespace rsnf
