#include "core/dynamics.hpp"

#include <cmath>

namespace rsnf {

int asymptotic_contact_order(const CurveParam<CD>& gamma, const std::vector<CD>& point) {
  int n = gamma.dim();
  if (static_cast<int>(point.size()) != n)
    throw std::invalid_argument("asymptotic_contact_order: dimension mismatch");
  // gamma must be the graph (s, h(s))
  if (gamma.comp[0] != Jet<CD>::variable(0, 1, gamma.comp[0].order()))
    throw std::domain_error("asymptotic_contact_order: curve is not a graph over x");
  CD x = point[0];
  if (x == CD(0.0, 0.0))
    throw std::domain_error("asymptotic_contact_order: x = 0 rejected");
  double ax = std::abs(x);
  int best = -1;
  for (int N = 0; N <= gamma.order(); ++N) {
    double err = 0;
    for (int j = 1; j < n; ++j) {
      CD hj = gamma.comp[j].truncated(N).eval({x});
      err = std::hypot(err, std::abs(point[j] - hj));
    }
    if (err <= std::pow(ax, N + 0.5))
      best = N;
    else
      break;
  }
  return best;
}

double contact_loglog_slope(const CurveParam<CD>& gamma,
                            const std::vector<std::vector<CD>>& orbit_points, int N) {
  // least-squares fit of log(err_k) = slope * log|x_k| + b
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& p : orbit_points) {
    CD x = p[0];
    double ax = std::abs(x);
    if (ax <= 0) continue;
    double err = 0;
    for (int j = 1; j < gamma.dim(); ++j)
      err = std::hypot(err, std::abs(p[j] - gamma.comp[j].truncated(N).eval({x})));
    if (err <= 1e-300) err = 1e-300;
    double lx = std::log(ax), ly = std::log(err);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return 0.0;
  double denom = m * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) return 0.0;
  return (m * sxy - sx * sy) / denom;
}

}  // namespace rsnf
