#pragma once

#include "core/dynamics.hpp"
#include "core/intlattice.hpp"
#include "core/roots.hpp"

namespace rsnf {

/// lambda = modulus * e^(2 pi i angle), both rational, angle taken mod 1.
struct PolarEigenvalue {
  Rational modulus;
  Rational angle;

  PolarEigenvalue(Rational m, Rational a) : modulus(std::move(m)), angle(std::move(a)) {
    if (modulus <= 0) throw std::invalid_argument("PolarEigenvalue: modulus must be positive");
    normalize();
  }
  void normalize() {
    Integer q;
    mpz_fdiv_q(q.get_mpz_t(), angle.get_num().get_mpz_t(), angle.get_den().get_mpz_t());
    angle -= Rational(q);
  }
  CD to_cd() const {
    double th = 2 * M_PI * rat_to_double(angle);
    return rat_to_double(modulus) * CD(std::cos(th), std::sin(th));
  }
};

/// v = a + 2 pi i b with rational a, b.
struct VFEigenvalue {
  Rational a;
  Rational b;
};

struct ResonanceLattices {
  IMat s_lambda;        // basis rows in Z^n
  IMat s_lambda_prime;  // basis rows in Z^n (saturation)
  Integer index;        // |S' : S| = m(F)
};

/// S_lambda, its saturation, and the embeddability index m(F) = |R_lambda|.
ResonanceLattices resonance_lattices(const std::vector<PolarEigenvalue>& spec);

struct WeakResonance {
  bool weakly_resonant = false;
  IVec witness;  // integer tuple with sum m_j a_j = 0 and sum m_j b_j != 0
};

WeakResonance is_weakly_resonant(const std::vector<VFEigenvalue>& spec);

// Multiplies a tuple lambda^m in exact polar arithmetic; helpers shared with
// the brute-force test oracle.
struct FactoredModulus {
  std::vector<std::pair<Integer, long>> factors;  // (prime, signed exponent)
};
FactoredModulus factor_modulus(const Rational& modulus);

/// Joint multiplicative decomposition of a family of rational moduli over a
/// pairwise-coprime base (factor refinement - no integer factoring needed, so
/// high-precision decimal moduli are fine). exponents[j][t] is the exponent
/// of base[t] in spec[j].
struct ModuliDecomposition {
  std::vector<Integer> base;
  std::vector<std::vector<long>> exponents;
};
ModuliDecomposition factor_moduli(const std::vector<Rational>& moduli);

template <class K>
struct InfGenResult {
  VectorFieldJet<K> generator;
  DiffeoJet<K> f_power_m;   // F^m, kept for validation and the RS pipeline
  double commutator_norm = 0.0;
  double exp_residual = 0.0;  // max-abs of exp_flow(X,1) - F^m (0 in exact runs)
  IVec log_branch;            // the 2 pi i k ambiguity resolved per coordinate
};

/// Constructive infinitesimal generator of F^m following the linear-part
/// recipe: semisimple log constrained by the saturated resonance lattice,
/// unipotent remainder via log_unipotent, commutation verified.
InfGenResult<QC> infinitesimal_generator(const DiffeoJet<QC>& f,
                                         const std::vector<PolarEigenvalue>& spec, long m);
InfGenResult<CD> infinitesimal_generator(const DiffeoJet<CD>& f,
                                         const std::vector<PolarEigenvalue>& spec, long m);

}  // namespace rsnf
