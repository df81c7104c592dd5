#include "core/intlattice.hpp"

#include <algorithm>
#include <stdexcept>

namespace rsnf {

IMat imat_zero(int r, int c) { return IMat(r, IVec(c, Integer(0))); }

IMat imat_identity(int n) {
  IMat m = imat_zero(n, n);
  for (int i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

IMat imat_mul(const IMat& a, const IMat& b) {
  IMat r = imat_zero(irows(a), icols(b));
  for (int i = 0; i < irows(a); ++i)
    for (int k = 0; k < icols(a); ++k) {
      if (a[i][k] == 0) continue;
      for (int j = 0; j < icols(b); ++j) r[i][j] += a[i][k] * b[k][j];
    }
  return r;
}

namespace {

void col_swap(IMat& m, int i, int j) {
  for (auto& row : m) std::swap(row[i], row[j]);
}

void col_addmul(IMat& m, int dst, int src, const Integer& f) {
  if (f == 0) return;
  for (auto& row : m) row[dst] += f * row[src];
}

void col_neg(IMat& m, int i) {
  for (auto& row : m) row[i] = -row[i];
}

}  // namespace

void hermite_col(const IMat& a, IMat& h, IMat& u) {
  int r = irows(a), c = icols(a);
  h = a;
  u = imat_identity(c);
  int col = 0;
  for (int row = 0; row < r && col < c; ++row) {
    // gcd-reduce the entries h[row][col..c) into position col
    while (true) {
      int piv = -1;
      for (int j = col; j < c; ++j)
        if (h[row][j] != 0 && (piv < 0 || abs(h[row][j]) < abs(h[row][piv]))) piv = j;
      if (piv < 0) break;
      if (piv != col) {
        col_swap(h, col, piv);
        col_swap(u, col, piv);
      }
      bool done = true;
      for (int j = col + 1; j < c; ++j) {
        if (h[row][j] == 0) continue;
        Integer q = h[row][j] / h[row][col];
        col_addmul(h, j, col, -q);
        col_addmul(u, j, col, -q);
        if (h[row][j] != 0) done = false;
      }
      if (done) break;
    }
    if (h[row][col] != 0) {
      if (h[row][col] < 0) {
        col_neg(h, col);
        col_neg(u, col);
      }
      ++col;
    }
  }
}

IMat integer_kernel(const IMat& a) {
  int c = icols(a);
  if (irows(a) == 0) return imat_identity(c);
  IMat h, u;
  hermite_col(a, h, u);
  IMat kernel;
  for (int j = 0; j < c; ++j) {
    bool zero = true;
    for (int i = 0; i < irows(h); ++i)
      if (h[i][j] != 0) {
        zero = false;
        break;
      }
    if (!zero) continue;
    IVec v(c);
    for (int i = 0; i < c; ++i) v[i] = u[i][j];
    kernel.push_back(std::move(v));
  }
  return kernel;
}

bool in_lattice(const IMat& basis, const IVec& v, IVec& coords) {
  int r = irows(basis);
  int n = static_cast<int>(v.size());
  // Solve sum_k coords[k] * basis[k] = v by Hermite form of basis^T.
  IMat bt = imat_zero(n, r);
  for (int k = 0; k < r; ++k)
    for (int j = 0; j < n; ++j) bt[j][k] = basis[k][j];
  IMat h, u;
  hermite_col(bt, h, u);
  // back-substitute v against staircase columns of h
  IVec y(r, Integer(0));
  IVec rem = v;
  int cc = 0;
  for (int row = 0; row < n && cc < r; ++row) {
    if (h[row][cc] == 0) continue;
    Integer q = rem[row] / h[row][cc];
    if (q * h[row][cc] != rem[row]) return false;
    y[cc] = q;
    for (int j = 0; j < n; ++j) rem[j] -= q * h[j][cc];
    ++cc;
  }
  for (int j = 0; j < n; ++j)
    if (rem[j] != 0) return false;
  coords.assign(r, Integer(0));
  for (int k = 0; k < r; ++k)
    for (int j = 0; j < r; ++j) coords[k] += u[k][j] * y[j];
  return true;
}

Integer abs_det(const IMat& a) {
  int n = irows(a);
  if (n == 0) return 1;
  std::vector<std::vector<Rational>> m(n, std::vector<Rational>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[i][j] = Rational(a[i][j]);
  Rational det = 1;
  for (int c = 0; c < n; ++c) {
    int piv = -1;
    for (int i = c; i < n; ++i)
      if (m[i][c] != 0) {
        piv = i;
        break;
      }
    if (piv < 0) return 0;
    if (piv != c) {
      std::swap(m[piv], m[c]);
      det = -det;
    }
    det *= m[c][c];
    Rational inv = 1 / m[c][c];
    for (int i = c + 1; i < n; ++i) {
      if (m[i][c] == 0) continue;
      Rational f = m[i][c] * inv;
      for (int j = c; j < n; ++j) m[i][j] -= f * m[c][j];
    }
  }
  det = abs(det);
  if (det.get_den() != 1) throw std::logic_error("abs_det: non-integer determinant");
  return det.get_num();
}

bool solve_integer_min(const IMat& a, const IVec& w, IVec& k) {
  int rows = irows(a), n = icols(a);
  // particular solution via Hermite form of a
  IMat h, u;
  hermite_col(a, h, u);
  IVec y(n, Integer(0));
  IVec rem = w;
  int cc = 0;
  for (int row = 0; row < rows && cc < n; ++row) {
    if (h[row][cc] == 0) continue;
    Integer q = rem[row] / h[row][cc];
    if (q * h[row][cc] != rem[row]) return false;
    y[cc] = q;
    for (int j = 0; j < rows; ++j) rem[j] -= q * h[j][cc];
    ++cc;
  }
  for (int j = 0; j < rows; ++j)
    if (rem[j] != 0) return false;
  IVec part(n, Integer(0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) part[i] += u[i][j] * y[j];

  IMat ker = integer_kernel(a);
  auto norm1 = [](const IVec& v) {
    Integer s = 0;
    for (const auto& x : v) s += abs(x);
    return s;
  };
  k = part;
  Integer best = norm1(part);
  int kr = irows(ker);
  if (kr == 0) return true;
  // bounded search over small kernel combinations, deterministic order
  const int B = kr <= 2 ? 8 : (kr == 3 ? 4 : 2);
  std::vector<int> idx(kr, -B);
  while (true) {
    IVec cand = part;
    for (int t = 0; t < kr; ++t)
      for (int j = 0; j < n; ++j) cand[j] += Integer(idx[t]) * ker[t][j];
    Integer nn = norm1(cand);
    if (nn < best) {
      best = nn;
      k = cand;
    }
    int t = 0;
    while (t < kr && ++idx[t] > B) idx[t++] = -B;
    if (t == kr) break;
  }
  return true;
}

}  // namespace rsnf
