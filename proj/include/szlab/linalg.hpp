#pragma once

// Dense self-adjoint eigenproblems, matrix functions and norms.
//
// Real symmetric input goes through Householder tridiagonalization followed
// by implicit-shift QL. A complex Hermitian H = X + iY is handled through the
// real embedding [[X,-Y],[Y,X]], whose spectrum is that of H with every
// eigenvalue doubled.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace szlab {

using cplx = std::complex<double>;

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

inline double conj_of(double x) { return x; }
inline cplx conj_of(cplx z) { return std::conj(z); }

template <class T>
class DenseMatrix {
public:
  using value_type = T;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, T fill = T{}) : rows_(r), cols_(c), a_(r * c, fill) {}
  DenseMatrix(std::size_t r, std::size_t c, std::vector<T> entries)
      : rows_(r), cols_(c), a_(std::move(entries)) {
    if (a_.size() != r * c) throw std::invalid_argument("DenseMatrix: entry count != rows*cols");
  }
  DenseMatrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    for (auto& r : rows) {
      if (r.size() != cols_) throw std::invalid_argument("DenseMatrix: ragged initializer");
      a_.insert(a_.end(), r.begin(), r.end());
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }
  static DenseMatrix diagonal(const std::vector<double>& d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = T(d[i]);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  T& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
  std::vector<T>& data() { return a_; }
  const std::vector<T>& data() const { return a_; }

  DenseMatrix& operator+=(const DenseMatrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  DenseMatrix& operator-=(const DenseMatrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  DenseMatrix& operator*=(T s) {
    for (auto& v : a_) v *= s;
    return *this;
  }
  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
  friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
  friend DenseMatrix operator*(T s, DenseMatrix a) { return a *= s; }

  friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matmul: shape mismatch");
    DenseMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const T aik = a(i, k);
        if (aik == T{}) continue;
        const T* brow = &b.a_[k * b.cols_];
        T* crow = &c.a_[i * c.cols_];
        for (std::size_t j = 0; j < b.cols_; ++j) crow[j] += aik * brow[j];
      }
    return c;
  }

  std::vector<T> apply(const std::vector<T>& x) const {
    if (x.size() != cols_) throw std::invalid_argument("apply: shape mismatch");
    std::vector<T> y(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      T s{};
      const T* row = &a_[i * cols_];
      for (std::size_t j = 0; j < cols_; ++j) s += row[j] * x[j];
      y[i] = s;
    }
    return y;
  }

  DenseMatrix adjoint() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = conj_of(a_[i * cols_ + j]);
    return t;
  }

private:
  void check_same(const DenseMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("shape mismatch");
  }
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<T> a_;
};

using RealMatrix = DenseMatrix<double>;
using ComplexMatrix = DenseMatrix<cplx>;

template <class T>
double max_abs(const DenseMatrix<T>& a) {
  double m = 0.0;
  for (const auto& v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

template <class T>
T trace(const DenseMatrix<T>& a) {
  T s{};
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) s += a(i, i);
  return s;
}

template <class T>
double frobenius_norm(const DenseMatrix<T>& a) {
  double s = 0.0;
  for (const auto& v : a.data()) s += std::norm(v);
  return std::sqrt(s);
}

// max |A_ij - conj(A_ji)|
template <class T>
double hermitian_defect(const DenseMatrix<T>& a) {
  if (!a.square()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - conj_of(a(j, i))));
  return d;
}

template <class T>
bool is_self_adjoint(const DenseMatrix<T>& a, double rel_tol = 1e-12) {
  return a.square() && hermitian_defect(a) <= rel_tol * max_abs(a);
}

// (A + A*)/2
template <class T>
DenseMatrix<T> symmetrize(const DenseMatrix<T>& a) {
  DenseMatrix<T> s = a;
  s += a.adjoint();
  s *= T(0.5);
  return s;
}

template <class T>
DenseMatrix<T> commutator(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  return a * b - b * a;
}

struct symmetry_error : std::domain_error {
  using std::domain_error::domain_error;
};

namespace detail {

// Householder reduction of a real symmetric matrix (row-major, n x n) to
// tridiagonal form. On return d holds the diagonal, e the subdiagonal in
// e[1..n-1], and a the accumulated orthogonal transform when vecs is set.
inline void tridiagonalize(std::vector<double>& a, std::size_t n, std::vector<double>& d,
                           std::vector<double>& e, bool vecs) {
  auto A = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t l = i - 1;
    double h = 0.0;
    if (l > 0) {
      double scale = 0.0;
      for (std::size_t k = 0; k < i; ++k) scale += std::abs(A(i, k));
      if (scale == 0.0) {
        e[i] = A(i, l);
      } else {
        for (std::size_t k = 0; k < i; ++k) {
          A(i, k) /= scale;
          h += A(i, k) * A(i, k);
        }
        double f = A(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        A(i, l) = f - g;
        f = 0.0;
        for (std::size_t j = 0; j < i; ++j) {
          if (vecs) A(j, i) = A(i, j) / h;
          g = 0.0;
          for (std::size_t k = 0; k <= j; ++k) g += A(j, k) * A(i, k);
          for (std::size_t k = j + 1; k < i; ++k) g += A(k, j) * A(i, k);
          e[j] = g / h;
          f += e[j] * A(i, j);
        }
        const double hh = f / (h + h);
        for (std::size_t j = 0; j < i; ++j) {
          f = A(i, j);
          e[j] = g = e[j] - hh * f;
          for (std::size_t k = 0; k <= j; ++k) A(j, k) -= (f * e[k] + g * A(i, k));
        }
      }
    } else {
      e[i] = A(i, l);
    }
    d[i] = h;
  }
  if (vecs) d[0] = 0.0;
  e[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (vecs) {
      if (d[i] != 0.0) {
        for (std::size_t j = 0; j < i; ++j) {
          double g = 0.0;
          for (std::size_t k = 0; k < i; ++k) g += A(i, k) * A(k, j);
          for (std::size_t k = 0; k < i; ++k) A(k, j) -= g * A(k, i);
        }
      }
      d[i] = A(i, i);
      A(i, i) = 1.0;
      for (std::size_t j = 0; j < i; ++j) A(j, i) = A(i, j) = 0.0;
    } else {
      d[i] = A(i, i);
    }
  }
}

// Implicit-shift QL on the tridiagonal (d, e). z is rotated alongside when
// vecs is set.
inline void ql_implicit(std::vector<double>& d, std::vector<double>& e, std::vector<double>& z,
                        std::size_t n, bool vecs) {
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  const long N = static_cast<long>(n);
  double anorm = 0.0;
  for (std::size_t i = 0; i < n; ++i) anorm = std::max(anorm, std::abs(d[i]) + std::abs(e[i]));
  // absolute floor (normwise backward stable); clusters near zero otherwise stall
  const double tiny = eps * anorm;
  for (long l = 0; l < N; ++l) {
    int iter = 0;
    long m;
    do {
      for (m = l; m < N - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd || std::abs(e[m]) <= tiny) break;
      }
      if (m != l) {
        if (iter++ == 200) throw std::runtime_error("eig_self_adjoint: QL iteration did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        long i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          e[i + 1] = (r = std::hypot(f, g));
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          d[i + 1] = g + (p = s * r);
          g = c * r - b;
          if (vecs) {
            for (std::size_t k = 0; k < n; ++k) {
              f = z[k * n + i + 1];
              z[k * n + i + 1] = s * z[k * n + i] + c * f;
              z[k * n + i] = c * z[k * n + i] - s * f;
            }
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

// Eigen-decomposition of a real symmetric row-major matrix; values ascending,
// vectors as columns of z (row-major n x n) when requested.
inline void symmetric_eig(std::vector<double> a, std::size_t n, std::vector<double>& values,
                          std::vector<double>* vectors) {
  values.clear();
  if (n == 0) return;
  std::vector<double> d, e;
  const bool vecs = vectors != nullptr;
  if (n == 1) {
    values = {a[0]};
    if (vecs) *vectors = {1.0};
    return;
  }
  tridiagonalize(a, n, d, e, vecs);
  ql_implicit(d, e, a, n, vecs);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d[i] < d[j]; });
  values.resize(n);
  for (std::size_t k = 0; k < n; ++k) values[k] = d[order[k]];
  if (vecs) {
    vectors->assign(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t src = order[k];
      // first component that is not negligible is made positive
      double sign = 1.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double v = a[r * n + src];
        if (std::abs(v) > 1e-12) {
          sign = v < 0 ? -1.0 : 1.0;
          break;
        }
      }
      for (std::size_t r = 0; r < n; ++r) (*vectors)[r * n + k] = sign * a[r * n + src];
    }
  }
}

template <class T>
void require_self_adjoint(const DenseMatrix<T>& a) {
  if (!a.square()) throw symmetry_error("eig_self_adjoint: matrix is not square");
  if (a.rows() == 0) throw std::invalid_argument("eig_self_adjoint: empty matrix");
  const double defect = hermitian_defect(a);
  const double scale = max_abs(a);
  if (defect > 1e-12 * scale) {
    std::ostringstream os;
    os << "eig_self_adjoint: symmetry violation max|A-A*| = " << defect << " exceeds 1e-12 * max|A| = "
       << 1e-12 * scale;
    throw symmetry_error(os.str());
  }
}

inline std::vector<double> embed_hermitian(const ComplexMatrix& h) {
  const std::size_t n = h.rows(), m = 2 * n;
  std::vector<double> a(m * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      // symmetrize the tiny admissible defect so the kernel sees exact symmetry
      const cplx v = 0.5 * (h(i, j) + std::conj(h(j, i)));
      a[i * m + j] = v.real();
      a[i * m + (j + n)] = -v.imag();
      a[(i + n) * m + j] = v.imag();
      a[(i + n) * m + (j + n)] = v.real();
    }
  return a;
}

}  // namespace detail

template <class T>
struct SpectralDecomposition {
  std::vector<double> values;  // ascending
  DenseMatrix<T> vectors;      // orthonormal columns
  std::size_t size() const { return values.size(); }
  std::vector<T> vector(std::size_t k) const {
    std::vector<T> v(vectors.rows());
    for (std::size_t r = 0; r < v.size(); ++r) v[r] = vectors(r, k);
    return v;
  }
};

inline SpectralDecomposition<double> eig_self_adjoint(const RealMatrix& a) {
  detail::require_self_adjoint(a);
  const std::size_t n = a.rows();
  std::vector<double> sym(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sym[i * n + j] = 0.5 * (a(i, j) + a(j, i));
  SpectralDecomposition<double> out;
  std::vector<double> z;
  detail::symmetric_eig(std::move(sym), n, out.values, &z);
  out.vectors = RealMatrix(n, n, std::move(z));
  return out;
}

inline SpectralDecomposition<cplx> eig_self_adjoint(const ComplexMatrix& h) {
  detail::require_self_adjoint(h);
  const std::size_t n = h.rows(), m = 2 * n;
  std::vector<double> dvals, z;
  detail::symmetric_eig(detail::embed_hermitian(h), m, dvals, &z);

  SpectralDecomposition<cplx> out;
  out.values.reserve(n);
  out.vectors = ComplexMatrix(n, n);
  const double tol = 1e-9 * (1.0 + std::max(std::abs(dvals.front()), std::abs(dvals.back())));
  std::size_t filled = 0;
  std::size_t k = 0;
  while (k < m) {
    // cluster of numerically equal doubled eigenvalues
    std::size_t e = k + 1;
    while (e < m && dvals[e] - dvals[e - 1] <= tol) ++e;
    const std::size_t want = (e - k) / 2;
    std::vector<std::vector<cplx>> basis;
    for (std::size_t c = k; c < e && basis.size() < want; ++c) {
      std::vector<cplx> v(n);
      for (std::size_t r = 0; r < n; ++r) v[r] = cplx(z[r * m + c], z[(r + n) * m + c]);
      for (int pass = 0; pass < 2; ++pass)
        for (auto& b : basis) {
          cplx dot{};
          for (std::size_t r = 0; r < n; ++r) dot += std::conj(b[r]) * v[r];
          for (std::size_t r = 0; r < n; ++r) v[r] -= dot * b[r];
        }
      double nv = 0.0;
      for (auto& x : v) nv += std::norm(x);
      nv = std::sqrt(nv);
      if (nv < 0.5) continue;
      for (auto& x : v) x /= nv;
      basis.push_back(std::move(v));
    }
    if (basis.size() != want) throw std::runtime_error("eig_self_adjoint: failed to unfold doubled eigenspace");
    for (std::size_t b = 0; b < want; ++b) {
      auto& v = basis[b];
      for (std::size_t r = 0; r < n; ++r)
        if (std::abs(v[r]) > 1e-12) {
          const cplx phase = std::conj(v[r]) / std::abs(v[r]);
          for (auto& x : v) x *= phase;
          break;
        }
      out.values.push_back(dvals[k + 2 * b]);
      for (std::size_t r = 0; r < n; ++r) out.vectors(r, filled) = v[r];
      ++filled;
    }
    k = e;
  }
  return out;
}

// Eigenvalues only (cheaper: no vector accumulation).
inline std::vector<double> eigenvalues_self_adjoint(const RealMatrix& a) {
  detail::require_self_adjoint(a);
  const std::size_t n = a.rows();
  bool tridiagonal = n > 2;
  for (std::size_t i = 0; i < n && tridiagonal; ++i)
    for (std::size_t j = i + 2; j < n; ++j)
      if (a(i, j) != 0.0 || a(j, i) != 0.0) {
        tridiagonal = false;
        break;
      }
  std::vector<double> vals;
  if (tridiagonal) {
    // already reduced: go straight to QL, O(n^2)
    std::vector<double> d(n), e(n, 0.0), z;
    for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
    for (std::size_t i = 1; i < n; ++i) e[i] = 0.5 * (a(i, i - 1) + a(i - 1, i));
    detail::ql_implicit(d, e, z, n, false);
    std::sort(d.begin(), d.end());
    return d;
  }
  std::vector<double> sym(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sym[i * n + j] = 0.5 * (a(i, j) + a(j, i));
  detail::symmetric_eig(std::move(sym), n, vals, nullptr);
  return vals;
}

inline std::vector<double> eigenvalues_self_adjoint(const ComplexMatrix& h) {
  detail::require_self_adjoint(h);
  std::vector<double> dvals, vals;
  detail::symmetric_eig(detail::embed_hermitian(h), 2 * h.rows(), dvals, nullptr);
  for (std::size_t k = 0; k < dvals.size(); k += 2) vals.push_back(dvals[k]);
  return vals;
}

// Sum_k f(lambda_k) v_k v_k^*.
template <class T>
DenseMatrix<T> matrix_function(const SpectralDecomposition<T>& dec, const std::function<double(double)>& f) {
  const std::size_t n = dec.vectors.rows(), m = dec.values.size();
  std::vector<double> fv(m);
  for (std::size_t k = 0; k < m; ++k) {
    fv[k] = f(dec.values[k]);
    if (!std::isfinite(fv[k])) {
      std::ostringstream os;
      os << "matrix_function: f is undefined at eigenvalue " << dec.values[k];
      throw std::domain_error(os.str());
    }
  }
  DenseMatrix<T> out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      T s{};
      for (std::size_t k = 0; k < m; ++k) s += fv[k] * dec.vectors(i, k) * conj_of(dec.vectors(j, k));
      out(i, j) = s;
      out(j, i) = conj_of(s);
    }
  return out;
}

// Largest singular value by power iteration on A*A; dense fallback when the
// iteration stalls on a tight singular-value gap.
template <class T>
double operator_norm(const DenseMatrix<T>& a) {
  const std::size_t n = a.cols();
  if (n == 0 || a.rows() == 0 || max_abs(a) == 0.0) return 0.0;
  const DenseMatrix<T> ah = a.adjoint();
  std::vector<T> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = T(1.0 + 0.37 * std::sin(1.3 * static_cast<double>(i) + 0.2));
  auto normalize = [](std::vector<T>& x) {
    double s = 0.0;
    for (auto& c : x) s += std::norm(c);
    s = std::sqrt(s);
    for (auto& c : x) c /= s;
    return s;
  };
  normalize(v);
  double prev = 0.0, est = 0.0;
  int stable = 0;
  const int max_iter = 20000;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<T> w = ah.apply(a.apply(v));
    est = normalize(w);  // ||A*A v|| with ||v|| = 1
    v.swap(w);
    if (it > 0 && std::abs(est - prev) <= 1e-15 * est) {
      if (++stable >= 3) return std::sqrt(est);
    } else {
      stable = 0;
    }
    prev = est;
    if (it == 2000 && n <= 600) break;
  }
  // slow convergence: settle it densely
  const DenseMatrix<T> g = ah * a;
  const auto vals = eigenvalues_self_adjoint(symmetrize(g));
  return std::sqrt(std::max(0.0, vals.back()));
}

// V^* A V for a matrix V whose columns span the target subspace.
template <class T>
DenseMatrix<T> compress(const DenseMatrix<T>& a, const DenseMatrix<T>& v) {
  return v.adjoint() * (a * v);
}

// Columns k in [first, last) of the eigenvector matrix.
template <class T>
DenseMatrix<T> eigenvector_block(const SpectralDecomposition<T>& dec, std::size_t first, std::size_t last) {
  const std::size_t n = dec.vectors.rows();
  DenseMatrix<T> out(n, last - first);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = first; k < last; ++k) out(r, k - first) = dec.vectors(r, k);
  return out;
}

}  // namespace szlab
