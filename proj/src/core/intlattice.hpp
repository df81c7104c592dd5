#pragma once

#include <vector>

#include "core/field.hpp"

namespace rsnf {

/// Dense integer matrix helpers for resonance-lattice computations.
using IMat = std::vector<std::vector<Integer>>;
using IVec = std::vector<Integer>;

inline int irows(const IMat& a) { return static_cast<int>(a.size()); }
inline int icols(const IMat& a) { return a.empty() ? 0 : static_cast<int>(a[0].size()); }

IMat imat_zero(int r, int c);
IMat imat_identity(int n);
IMat imat_mul(const IMat& a, const IMat& b);

// Column-style Hermite form: returns H and unimodular U with A * U = H,
// H lower-staircase by columns (zero columns last).
void hermite_col(const IMat& a, IMat& h, IMat& u);

// Basis of { x in Z^n : A x = 0 }, one basis vector per row of the result.
IMat integer_kernel(const IMat& a);

// Solve B^T y = v over the integers (rows of `basis` span a lattice; find the
// coordinates of `v` in that basis). Returns false if v is not in the lattice.
bool in_lattice(const IMat& basis, const IVec& v, IVec& coords);

// |det| of a square integer matrix (0 if singular), via rational elimination.
Integer abs_det(const IMat& a);

// Smallest-norm solution heuristic for A k = w over Z: particular solution
// plus a bounded search over the kernel. Returns false if unsolvable.
bool solve_integer_min(const IMat& a, const IVec& w, IVec& k);

}  // namespace rsnf
