#pragma once

#include <vector>

#include "core/jet.hpp"

namespace rsnf {

/// Dense matrix over the coefficient field.
template <class K>
class Mat {
 public:
  Mat() : r_(0), c_(0) {}
  Mat(int rows, int cols) : r_(rows), c_(cols), a_(size_t(rows) * cols, FT<K>::zero()) {}

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = FT<K>::one();
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }
  K& operator()(int i, int j) { return a_[size_t(i) * c_ + j]; }
  const K& operator()(int i, int j) const { return a_[size_t(i) * c_ + j]; }

  bool is_zero() const {
    for (const auto& v : a_)
      if (!FT<K>::is_zero(v)) return false;
    return true;
  }

  friend Mat operator+(const Mat& a, const Mat& b) {
    Mat r(a.r_, a.c_);
    for (size_t i = 0; i < a.a_.size(); ++i) r.a_[i] = a.a_[i] + b.a_[i];
    return r;
  }
  friend Mat operator-(const Mat& a, const Mat& b) {
    Mat r(a.r_, a.c_);
    for (size_t i = 0; i < a.a_.size(); ++i) r.a_[i] = a.a_[i] - b.a_[i];
    return r;
  }
  friend Mat operator*(const Mat& a, const Mat& b) {
    if (a.c_ != b.r_) throw std::invalid_argument("Mat: shape mismatch");
    Mat r(a.r_, b.c_);
    for (int i = 0; i < a.r_; ++i)
      for (int k = 0; k < a.c_; ++k) {
        if (FT<K>::is_zero(a(i, k))) continue;
        for (int j = 0; j < b.c_; ++j) r(i, j) += a(i, k) * b(k, j);
      }
    return r;
  }
  friend Mat operator*(const K& s, const Mat& a) {
    Mat r(a.r_, a.c_);
    for (size_t i = 0; i < a.a_.size(); ++i) r.a_[i] = s * a.a_[i];
    return r;
  }
  friend bool operator==(const Mat& a, const Mat& b) {
    return a.r_ == b.r_ && a.c_ == b.c_ && a.a_ == b.a_;
  }

  std::vector<K> apply(const std::vector<K>& x) const {
    std::vector<K> y(r_, FT<K>::zero());
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

  double max_abs() const {
    double m = 0;
    for (const auto& v : a_) m = std::max(m, FT<K>::abs(v));
    return m;
  }

 private:
  int r_, c_;
  std::vector<K> a_;
};

template <class K>
K field_div(const K& a, const K& b) {
  if constexpr (FT<K>::exact)
    return a * b.inv();
  else
    return a / b;
}

// Gaussian elimination with pivot-by-magnitude (float) / first-nonzero (exact).
// Returns false when the matrix is singular.
template <class K>
bool solve_linear(Mat<K> a, std::vector<std::vector<K>>& rhs) {
  int n = a.rows();
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    if constexpr (FT<K>::exact) {
      for (int i = col; i < n; ++i)
        if (!FT<K>::is_zero(a(i, col))) {
          piv = i;
          break;
        }
    } else {
      double best = 0;
      for (int i = col; i < n; ++i)
        if (FT<K>::abs(a(i, col)) > best) {
          best = FT<K>::abs(a(i, col));
          piv = i;
        }
    }
    if (piv < 0) return false;
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
      for (auto& r : rhs) std::swap(r[piv], r[col]);
    }
    K inv = field_div(FT<K>::one(), a(col, col));
    for (int j = 0; j < n; ++j) a(col, j) = inv * a(col, j);
    for (auto& r : rhs) r[col] = inv * r[col];
    for (int i = 0; i < n; ++i) {
      if (i == col || FT<K>::is_zero(a(i, col))) continue;
      K f = a(i, col);
      for (int j = 0; j < n; ++j) a(i, j) -= f * a(col, j);
      for (auto& r : rhs) r[i] -= f * r[col];
    }
  }
  return true;
}

template <class K>
bool invert(const Mat<K>& a, Mat<K>& out) {
  int n = a.rows();
  std::vector<std::vector<K>> cols(n, std::vector<K>(n, FT<K>::zero()));
  for (int j = 0; j < n; ++j) cols[j][j] = FT<K>::one();
  if (!solve_linear(a, cols)) return false;
  out = Mat<K>(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out(i, j) = cols[j][i];
  return true;
}

template <class K>
Mat<K> mat_pow(Mat<K> a, int e) {
  Mat<K> acc = Mat<K>::identity(a.rows());
  while (e > 0) {
    if (e & 1) acc = acc * a;
    a = a * a;
    e >>= 1;
  }
  return acc;
}

template <class K>
bool is_nilpotent(const Mat<K>& a, double tol = 0.0) {
  Mat<K> p = a;
  for (int i = 1; i < a.rows(); ++i) p = p * a;
  if constexpr (FT<K>::exact)
    return p.is_zero();
  else
    return p.max_abs() <= tol;
}

// Characteristic polynomial by Faddeev-LeVerrier; coefficients c[0..n] with
// c[0] the constant term and c[n] = 1 (monic, det(T I - A)).
template <class K>
std::vector<K> char_poly(const Mat<K>& a) {
  int n = a.rows();
  std::vector<K> c(n + 1, FT<K>::zero());
  c[n] = FT<K>::one();
  Mat<K> m = Mat<K>::identity(n);  // M_0 = I
  for (int k = 1; k <= n; ++k) {
    m = a * m;
    K tr = FT<K>::zero();
    for (int i = 0; i < n; ++i) tr += m(i, i);
    K ck;
    if constexpr (FT<K>::exact)
      ck = -(tr * QC(Rational(1, k)));
    else
      ck = -tr / K(double(k), 0.0);
    c[n - k] = ck;
    for (int i = 0; i < n; ++i) m(i, i) += ck;
  }
  return c;
}

/// Jet of a map's linear part as a matrix (row i = d components[i]).
template <class K>
Mat<K> linear_part(const JetTuple<K>& f) {
  int n = static_cast<int>(f.size());
  Mat<K> m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = f[i].coeff_key(mono_var(j));
  return m;
}

template <class K>
JetTuple<K> apply_matrix(const Mat<K>& m, const JetTuple<K>& v) {
  JetTuple<K> r;
  r.reserve(v.size());
  for (int i = 0; i < m.rows(); ++i) {
    Jet<K> acc(v[0].num_vars(), v[0].order());
    for (int j = 0; j < m.cols(); ++j)
      if (!FT<K>::is_zero(m(i, j))) acc += m(i, j) * v[j];
    r.push_back(acc);
  }
  return r;
}

/// Two-sided inverse of a formal map with invertible linear part.
template <class K>
JetTuple<K> functional_inverse(const JetTuple<K>& f) {
  for (const auto& fi : f)
    if (!FT<K>::is_zero(fi.coeff_key(mono_one())))
      throw std::domain_error("functional_inverse: nonzero constant term");
  Mat<K> lin = linear_part(f);
  Mat<K> linv;
  if (!invert(lin, linv)) throw std::domain_error("functional_inverse: singular linear part");
  return functional_inverse_impl(f, [&](const JetTuple<K>& v) { return apply_matrix(linv, v); });
}

/// Basis of the right kernel of a (possibly rectangular) matrix.
template <class K>
std::vector<std::vector<K>> kernel_basis(Mat<K> a, double tol = 1e-10) {
  int rows = a.rows(), cols = a.cols();
  std::vector<int> pivot_col;
  int r = 0;
  double scale = std::max(1.0, a.max_abs());
  for (int c = 0; c < cols && r < rows; ++c) {
    int piv = -1;
    if constexpr (FT<K>::exact) {
      for (int i = r; i < rows; ++i)
        if (!FT<K>::is_zero(a(i, c))) {
          piv = i;
          break;
        }
    } else {
      double best = tol * scale;
      for (int i = r; i < rows; ++i)
        if (FT<K>::abs(a(i, c)) > best) {
          best = FT<K>::abs(a(i, c));
          piv = i;
        }
    }
    if (piv < 0) continue;
    if (piv != r)
      for (int j = 0; j < cols; ++j) std::swap(a(piv, j), a(r, j));
    K inv = field_div(FT<K>::one(), a(r, c));
    for (int j = 0; j < cols; ++j) a(r, j) = inv * a(r, j);
    for (int i = 0; i < rows; ++i) {
      if (i == r) continue;
      K f = a(i, c);
      if (FT<K>::is_zero(f)) continue;
      for (int j = 0; j < cols; ++j) a(i, j) -= f * a(r, j);
    }
    pivot_col.push_back(c);
    ++r;
  }
  std::vector<bool> is_pivot(cols, false);
  for (int c : pivot_col) is_pivot[c] = true;
  std::vector<std::vector<K>> basis;
  for (int c = 0; c < cols; ++c) {
    if (is_pivot[c]) continue;
    std::vector<K> v(cols, FT<K>::zero());
    v[c] = FT<K>::one();
    for (int i = 0; i < r; ++i) v[pivot_col[i]] = -a(i, c);
    basis.push_back(std::move(v));
  }
  return basis;
}

/// Rectangular matrix of univariate jets sharing one truncation order.
template <class K>
class PolyMatrix {
 public:
  PolyMatrix() : r_(0), c_(0), ord_(0) {}
  PolyMatrix(int rows, int cols, int order)
      : r_(rows), c_(cols), ord_(order), e_(size_t(rows) * cols, Jet<K>(1, order)) {}

  int rows() const { return r_; }
  int cols() const { return c_; }
  int order() const { return ord_; }

  Jet<K>& operator()(int i, int j) { return e_[size_t(i) * c_ + j]; }
  const Jet<K>& operator()(int i, int j) const { return e_[size_t(i) * c_ + j]; }

  static PolyMatrix from_constant(const Mat<K>& m, int order) {
    PolyMatrix p(m.rows(), m.cols(), order);
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j)
        p(i, j) = Jet<K>::constant(m(i, j), 1, order);
    return p;
  }

  Mat<K> coeff(int k) const {
    Mat<K> m(r_, c_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) m(i, j) = e_[size_t(i) * c_ + j].coeff1(k);
    return m;
  }

  Mat<K> eval(const K& x) const {
    Mat<K> m(r_, c_);
    std::vector<K> pt{x};
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) m(i, j) = e_[size_t(i) * c_ + j].eval(pt);
    return m;
  }

  int val() const {
    int v = ord_ + 1;
    for (const auto& e : e_) v = std::min(v, e.val());
    return v;
  }

  bool is_zero() const {
    for (const auto& e : e_)
      if (!e.is_zero()) return false;
    return true;
  }

  PolyMatrix truncated(int n) const {
    PolyMatrix p(r_, c_, std::min(ord_, n));
    for (size_t i = 0; i < e_.size(); ++i) p.e_[i] = e_[i].truncated(p.ord_);
    return p;
  }

  PolyMatrix shifted_down(int k) const {  // divide every entry by x^k
    PolyMatrix p(r_, c_, std::max(0, ord_ - k));
    for (size_t i = 0; i < e_.size(); ++i) p.e_[i] = divide_by_power(e_[i], 0, k);
    return p;
  }

  PolyMatrix shifted_up(int k) const {  // multiply every entry by x^k
    PolyMatrix p(r_, c_, ord_ + k <= 255 ? ord_ + k : 255);
    Jet<K> xk(1, p.ord_);
    xk.set_coeff_key(mono_var(0, k), FT<K>::one());
    for (size_t i = 0; i < e_.size(); ++i) p.e_[i] = e_[i].with_order(p.ord_) * xk;
    return p;
  }

  friend PolyMatrix operator+(const PolyMatrix& a, const PolyMatrix& b) {
    PolyMatrix p(a.r_, a.c_, std::min(a.ord_, b.ord_));
    for (size_t i = 0; i < a.e_.size(); ++i) p.e_[i] = a.e_[i] + b.e_[i];
    return p;
  }
  friend PolyMatrix operator-(const PolyMatrix& a, const PolyMatrix& b) {
    PolyMatrix p(a.r_, a.c_, std::min(a.ord_, b.ord_));
    for (size_t i = 0; i < a.e_.size(); ++i) p.e_[i] = a.e_[i] - b.e_[i];
    return p;
  }
  friend PolyMatrix operator*(const PolyMatrix& a, const PolyMatrix& b) {
    if (a.c_ != b.r_) throw std::invalid_argument("PolyMatrix: shape mismatch");
    PolyMatrix p(a.r_, b.c_, std::min(a.ord_, b.ord_));
    for (int i = 0; i < a.r_; ++i)
      for (int k = 0; k < a.c_; ++k) {
        if (a(i, k).is_zero()) continue;
        for (int j = 0; j < b.c_; ++j) p(i, j) += a(i, k) * b(k, j);
      }
    return p;
  }
  friend bool operator==(const PolyMatrix& a, const PolyMatrix& b) {
    return a.r_ == b.r_ && a.c_ == b.c_ && a.ord_ == b.ord_ && a.e_ == b.e_;
  }

  PolyMatrix derivative() const {
    PolyMatrix p(r_, c_, std::max(0, ord_ - 1));
    for (size_t i = 0; i < e_.size(); ++i) p.e_[i] = e_[i].derive(0);
    return p;
  }

  double max_abs() const {
    double m = 0;
    for (const auto& e : e_) m = std::max(m, e.max_abs());
    return m;
  }

 private:
  int r_, c_;
  int ord_;
  std::vector<Jet<K>> e_;
};

/// Univariate Laurent-capable series: exponents in [min_exp, order].
template <class K>
class LaurentJet {
 public:
  LaurentJet(int min_exp, int order) : lo_(min_exp), hi_(order) {
    if (min_exp > order) throw std::invalid_argument("LaurentJet: empty range");
  }

  int min_exp() const { return lo_; }
  int order() const { return hi_; }
  const std::map<int, K>& terms() const { return t_; }

  K coeff(int e) const {
    auto it = t_.find(e);
    return it == t_.end() ? FT<K>::zero() : it->second;
  }
  void set_coeff(int e, const K& c) {
    if (e < lo_ || e > hi_) throw std::out_of_range("LaurentJet: exponent out of range");
    if (FT<K>::is_zero(c))
      t_.erase(e);
    else
      t_[e] = c;
  }
  void add_coeff(int e, const K& c) {
    if (e < lo_ || e > hi_) return;
    auto it = t_.find(e);
    if (it == t_.end()) {
      if (!FT<K>::is_zero(c)) t_[e] = c;
    } else {
      it->second += c;
      if (FT<K>::is_zero(it->second)) t_.erase(it);
    }
  }

  friend LaurentJet operator*(const LaurentJet& a, const LaurentJet& b) {
    LaurentJet r(a.lo_ + b.lo_, std::min(a.hi_ + b.lo_, b.hi_ + a.lo_));
    for (const auto& [ea, ca] : a.t_)
      for (const auto& [eb, cb] : b.t_) r.add_coeff(ea + eb, ca * cb);
    return r;
  }
  friend LaurentJet operator+(const LaurentJet& a, const LaurentJet& b) {
    LaurentJet r(std::min(a.lo_, b.lo_), std::min(a.hi_, b.hi_));
    for (const auto& [e, c] : a.t_) r.add_coeff(e, c);
    for (const auto& [e, c] : b.t_) r.add_coeff(e, c);
    return r;
  }

 private:
  int lo_, hi_;
  std::map<int, K> t_;
};

}  // namespace rsnf
