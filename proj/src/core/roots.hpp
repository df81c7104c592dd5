#pragma once

#include <cmath>
#include <vector>

#include "core/matrix.hpp"

namespace rsnf {

// Roots of a monic complex polynomial c[0] + c[1] T + ... + T^n by
// Durand-Kerner iteration.
std::vector<CD> poly_roots_numeric(const std::vector<CD>& monic_coeffs);

struct ExactEigen {
  QC value;
  int multiplicity = 0;
};

// Eigenvalues of an exact matrix, provided the characteristic polynomial
// splits over the Gaussian rationals. Numeric roots guide the search; every
// candidate is verified exactly and deflated exactly, so a `true` return is a
// proof. `false` means some irreducible factor of degree >= 2 remains.
bool exact_eigenvalues(const Mat<QC>& a, std::vector<ExactEigen>& out);

struct FloatEigen {
  CD value;
  int multiplicity = 0;
};
std::vector<FloatEigen> float_eigenvalues(const Mat<CD>& a, double cluster_tol = 1e-8);

// Nearest Gaussian rational with bounded denominator; used only as a
// candidate generator (callers verify exactly).
QC qc_from_double(const CD& z, unsigned long max_den = 1000000);
Rational rational_from_double(double x, unsigned long max_den = 1000000);

}  // namespace rsnf
