#pragma once

#include <memory>

#include "core/classify.hpp"

namespace rsnf {

/// Closed-form data for the cocycle E(x) = exp(-P(1/x, log x)) obtained by
/// termwise integration of (Dbar2(x) + x^p C2) / (x^{p+1} (1 - rho x^p)).
/// All matrix coefficients commute (Dbar2 diagonal, [Dbar2, C2] = 0), so the
/// exponent splits into a Laurent-polynomial part and a residue times log x.
struct CocycleData {
  int nsad = 0;
  std::vector<std::pair<int, Mat<CD>>> power_terms;  // exponent e != 0: coeff x^e
  Mat<CD> residue;                                   // log-term coefficient
  CD rho{};
};

CocycleData build_cocycle(const BlockModel& bm);

/// E(x) itself (moderate |x| only: the entries scale like exp(1/x^p)).
Mat<CD> cocycle_E(const CocycleData& cd, CD x);

/// E(x0) E(x1)^{-1}, safe near the origin: only exponent differences appear.
Mat<CD> cocycle_ratio(const CocycleData& cd, CD x0, CD x1);

struct GraphDomain {
  SectorParams sector;
  int m = 3;
  int nx_radial = 64;
  int nx_angular = 64;
  int nw = 8;             // samples per w disc (s-1 complex dims; 1 supported fully)
  double rmin_factor = 0.05;  // innermost radius = eps * rmin_factor
  // The solver works on a sub-sector: interpolation accuracy (hence the
  // invariance residual) improves like a power of the radius, so the sector
  // radius is capped before gridding. Any sub-sector of a verified sector is
  // itself verified.
  double eps_cap = 0.04;
};

/// Sampled stable graph phi: S^m -> C^{n-s} with a T-backed evaluation rule:
/// off-grid queries re-apply the operator T over the grid interpolant, which
/// keeps the invariance residual at the Picard tolerance instead of the raw
/// interpolation error.
class StableGraph {
 public:
  StableGraph(BlockModel bm, GraphDomain dom);

  const BlockModel& model() const { return bm_; }
  const GraphDomain& domain() const { return dom_; }

  // grid interpolation in (log|x|, arg-fraction, w)
  std::vector<CD> interp(CD x, const std::vector<CD>& w) const;
  // T-backed evaluation (one operator application over the interpolant)
  std::vector<CD> eval(CD x, const std::vector<CD>& w) const;

  struct SolveStats {
    int sweeps = 0;
    double final_delta = 0;
    double residual = 0;      // sup invariance residual over the grid
    double sup_norm = 0;
    double cocycle_excess = 0;  // max(||ratio|| - 1) observed
    bool converged = false;
  };

  /// Picard iteration phi <- T phi from phi = 0 until sup-change < tol.
  SolveStats solve(double tol, int max_sweeps);

  /// One full application of T at a point, using the current grid as the
  /// inner iterate. Returns the partial sum with a monitored tail bound.
  std::vector<CD> apply_T(CD x0, const std::vector<CD>& w0, double tail_tol,
                          int lookahead = -1) const;

  const SolveStats& stats() const { return stats_; }
  double clamp_bound(CD x) const { return std::pow(std::abs(x), dom_.m - 1); }

  // grid accessors for serialization
  int nodes() const { return static_cast<int>(values_.size()); }
  void node_coords(int idx, CD& x, std::vector<CD>& w) const;
  const std::vector<CD>& node_value(int idx) const { return values_[idx]; }

  /// Recompute the per-node linear w-fits of psi = phi / x^m (called by the
  /// solver after every sweep; interp reads the cache).
  void rebuild_fits();

 private:
  friend struct StableGraphTestAccess;
  struct Engine;
  BlockModel bm_;
  GraphDomain dom_;
  CocycleData coc_;
  std::shared_ptr<Engine> eng_;
  int nnode_ = 0, nsad_ = 0;
  std::vector<double> logr_;                 // radial knots (log |x|)
  std::vector<double> angf_;                 // angular fractions in [0, 1]
  std::vector<std::vector<CD>> wgrid_;       // relative w samples (|w| <= 1)
  std::vector<std::vector<CD>> values_;      // per node, C^{nsad}
  SolveStats stats_;

  int index_of(int ir, int ia, int iw) const {
    return (ir * dom_.nx_angular + ia) * dom_.nw + iw;
  }
  void angular_span(double re, double& lo, double& hi) const;
  CD node_x(int ir, int ia) const;
  std::vector<CD> node_w(int ir, int ia, int iw) const;
  // map evaluation split into blocks
  void step(CD x, const std::vector<CD>& w, const std::vector<CD>& z, CD& xn,
            std::vector<CD>& wn, std::vector<CD>& zn) const;
  std::vector<CD> f2_of(CD x, const std::vector<CD>& w, const std::vector<CD>& z) const;
};

struct OrbitTrace {
  std::vector<std::vector<CD>> points;
  bool stayed_in_sector = true;
  bool converged = false;
  bool escaped = false;
  int steps = 0;
  std::vector<double> estimate;  // (k+p) j x_j^{k+p} samples (real part)
};

/// Iterate an evaluable map; flags per the classical parabolic estimate.
OrbitTrace iterate_orbit(const DiffeoJet<CD>& map, std::vector<CD> start, int max_steps,
                         const SectorParams& sector, int k_plus_p, int m_bound,
                         double escape_factor = 4.0);

/// Orbit of a point of the computed stable manifold, i.e. the restriction of
/// the map to the invariant graph: the base (x, w) iterates under
/// (f_phi, F1_phi) and z rides along as phi(x_j, w_j). Ambient forward
/// iteration is ill-posed on a saddle graph (roundoff is amplified by the
/// expanding multiplier), so this is the faithful realization of F|_S.
OrbitTrace iterate_orbit_on_graph(const StableGraph& graph, CD x0, std::vector<CD> w0,
                                  int max_steps);

struct MembershipReport {
  bool tangent_to_rplus = false;
  bool eventually_on_graph = false;
  int graph_entry_index = -1;
  double final_graph_distance = 0;
  std::vector<int> contact_orders;   // per N = 1 .. m-1: achieved (1) or not (0)
  double slope = 0;                  // log-log regression slope vs J_{m-1}
  bool asymptotic_bootstrap = false; // contact grows with m on the sampled tail
};

MembershipReport membership_and_asymptoticity(const OrbitTrace& orbit,
                                              const CurveParam<CD>& gamma,
                                              const StableGraph& graph);

/// Change to the y^m frame: y -> y - J_{p+m-1} gbar(x). Raises the contact of
/// the curve with the x-axis to at least p+m; D, C and b are unchanged.
BlockModel shift_to_m_frame(const BlockModel& bm, int m);

}  // namespace rsnf
