#pragma once

// Normalized Hermite functions, multi-index bookkeeping, and the shell sum
// Sum_alpha (1 + |lambda| (2|alpha| + n))^(-2N).

#include <cmath>
#include <stdexcept>
#include <vector>

#include "support.hpp"

namespace szlab {

// h_k(x) = (2^k sqrt(pi) k!)^(-1/2) H_k(x) exp(-x^2/2), evaluated through the
// normalized three-term recurrence so nothing overflows for large k.
inline double hermite_function(int k, double x) {
  if (k < 0) throw std::invalid_argument("hermite_function: k < 0");
  const double h0 = std::pow(pi, -0.25) * std::exp(-0.5 * x * x);
  if (k == 0) return h0;
  double hm = h0, h = std::sqrt(2.0) * x * h0;
  for (int j = 1; j < k; ++j) {
    const double hp = std::sqrt(2.0 / (j + 1)) * x * h - std::sqrt(static_cast<double>(j) / (j + 1)) * hm;
    hm = h;
    h = hp;
  }
  return h;
}

// All h_0..h_max at x.
inline std::vector<double> hermite_functions_upto(int max_degree, double x) {
  if (max_degree < 0) throw std::invalid_argument("hermite_functions_upto: negative degree");
  std::vector<double> out(static_cast<std::size_t>(max_degree) + 1);
  out[0] = std::pow(pi, -0.25) * std::exp(-0.5 * x * x);
  if (max_degree >= 1) out[1] = std::sqrt(2.0) * x * out[0];
  for (int j = 1; j < max_degree; ++j)
    out[j + 1] = std::sqrt(2.0 / (j + 1)) * x * out[j] - std::sqrt(static_cast<double>(j) / (j + 1)) * out[j - 1];
  return out;
}

class HermiteTable {
public:
  HermiteTable(int max_degree, std::vector<double> nodes) : max_degree_(max_degree), nodes_(std::move(nodes)) {
    if (max_degree < 0) throw std::invalid_argument("HermiteTable: negative degree");
    values_.resize(static_cast<std::size_t>(max_degree + 1) * nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      auto col = hermite_functions_upto(max_degree, nodes_[i]);
      for (int k = 0; k <= max_degree; ++k) values_[k * nodes_.size() + i] = col[k];
    }
  }

  int max_degree() const { return max_degree_; }
  const std::vector<double>& nodes() const { return nodes_; }
  double operator()(int k, std::size_t i) const { return values_[k * nodes_.size() + i]; }

  // max over nodes of |h_{k+1} - sqrt(2/(k+1)) x h_k + sqrt(k/(k+1)) h_{k-1}|
  double recurrence_residual() const {
    double worst = 0.0;
    for (int k = 1; k < max_degree_; ++k)
      for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const double r = (*this)(k + 1, i) - std::sqrt(2.0 / (k + 1)) * nodes_[i] * (*this)(k, i) +
                         std::sqrt(static_cast<double>(k) / (k + 1)) * (*this)(k - 1, i);
        worst = std::max(worst, std::abs(r));
      }
    return worst;
  }

private:
  int max_degree_;
  std::vector<double> nodes_;
  std::vector<double> values_;
};

inline double binomial(long n, long k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (long i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

// Number of alpha in N_0^n with |alpha| = j.
inline double shell_count(long j, int n) { return binomial(j + n - 1, n - 1); }

using MultiIndex = std::vector<int>;

inline int degree(const MultiIndex& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

inline double eigenvalue_multiindex(const MultiIndex& alpha, int n) {
  if (static_cast<int>(alpha.size()) != n) throw std::invalid_argument("eigenvalue_multiindex: size != n");
  return 2.0 * degree(alpha) + n;
}

// Streams alpha in N_0^n by ascending degree, lexicographically descending
// within a degree: (j,0,..,0) first, (0,..,0,j) last.
class MultiIndexEnumerator {
public:
  MultiIndexEnumerator(int n, int max_degree) : n_(n), max_degree_(max_degree), cur_(n, 0) {
    if (n < 1) throw std::invalid_argument("MultiIndexEnumerator: n < 1");
    done_ = max_degree < 0;
  }

  bool done() const { return done_; }
  const MultiIndex& current() const { return cur_; }

  void advance() {
    if (done_) return;
    // next composition of the same degree: move one unit rightwards
    const int d = degree(cur_);
    int i = n_ - 2;
    while (i >= 0 && cur_[i] == 0) --i;
    if (i >= 0) {
      const int tail = cur_[n_ - 1];
      cur_[n_ - 1] = 0;
      cur_[i] -= 1;
      cur_[i + 1] = tail + 1;
      return;
    }
    if (d + 1 > max_degree_) {
      done_ = true;
      return;
    }
    std::fill(cur_.begin(), cur_.end(), 0);
    cur_[0] = d + 1;
  }

  std::vector<MultiIndex> all() {
    std::vector<MultiIndex> out;
    for (; !done(); advance()) out.push_back(cur_);
    return out;
  }

private:
  int n_, max_degree_;
  MultiIndex cur_;
  bool done_ = false;
};

struct TraceSum {
  double value = 0.0;       // partial sum plus Euler-Maclaurin tail estimate
  double tail_bound = 0.0;  // bound on |value - exact|
  double partial_sum = 0.0;  // shells 0..shells-1
  double crude_tail_bound = 0.0;  // integral comparison bound on the bare tail
  long shells = 0;
};

namespace detail {

// Truncated Taylor jet c0 + c1 e + c2 e^2 + c3 e^3 + c4 e^4.
struct Jet {
  double c[5] = {0, 0, 0, 0, 0};
};

inline Jet jet_mul(const Jet& a, const Jet& b) {
  Jet r;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; i + j < 5; ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

// g(x) = C(x+n-1, n-1) (1 + L(2x+n))^(-2N) as a jet around x0.
inline Jet shell_term_jet(double x0, int n, double L, int N) {
  Jet poly;
  poly.c[0] = 1.0;
  for (int i = 1; i <= n - 1; ++i) {
    Jet lin;
    lin.c[0] = (x0 + i) / i;
    lin.c[1] = 1.0 / i;
    poly = jet_mul(poly, lin);
  }
  const double y0 = 1.0 + L * (2.0 * x0 + n), y1 = 2.0 * L;
  const double p = -2.0 * N;
  Jet pw;
  double coef = std::pow(y0, p), ratio = y1 / y0;
  double binom = 1.0;
  for (int k = 0; k < 5; ++k) {
    pw.c[k] = coef * binom;
    binom *= (p - k) / (k + 1);
    coef *= ratio;
  }
  return jet_mul(poly, pw);
}

// Integral over [x0, inf) of the same g, by expanding the shell polynomial in
// powers of y = 1 + L(2x+n).
inline double shell_term_tail_integral(double x0, int n, double L, int N) {
  // coefficients of C(x+n-1,n-1) in powers of x
  std::vector<double> px{1.0};
  for (int i = 1; i <= n - 1; ++i) {
    std::vector<double> nx(px.size() + 1, 0.0);
    for (std::size_t k = 0; k < px.size(); ++k) {
      nx[k] += px[k];  // (x + i)/i = 1 + x/i
      nx[k + 1] += px[k] / i;
    }
    px = nx;
  }
  // x = (y - y0)/(2L), y0 = 1 + L n
  const double y0 = 1.0 + L * n, s = 1.0 / (2.0 * L);
  const std::size_t deg = px.size() - 1;
  std::vector<double> py(deg + 1, 0.0);
  for (std::size_t k = 0; k <= deg; ++k) {
    // (s (y - y0))^k
    for (std::size_t j = 0; j <= k; ++j)
      py[j] += px[k] * std::pow(s, static_cast<double>(k)) * binomial(static_cast<long>(k), static_cast<long>(j)) *
               std::pow(-y0, static_cast<double>(k - j));
  }
  const double yJ = 1.0 + L * (2.0 * x0 + n);
  double total = 0.0;
  for (std::size_t j = 0; j <= deg; ++j) {
    const double e = static_cast<double>(j) - 2.0 * N + 1.0;  // < 0 by 2N > n
    total += py[j] * std::pow(yJ, e) / (-e);
  }
  return total * s;  // dx = dy/(2L)
}

}  // namespace detail

// Sum over alpha in N_0^n of (1 + |lambda|(2|alpha|+n))^(-2N), summed by
// degree shells. The tail past the last shell is added by Euler-Maclaurin
// (integral + g/2 - g'/12 + g'''/720) with remainder bound |g'''|/720, valid
// once the summand's derivatives have settled sign. The crude bound from the
// shell density (j+1)^(n-1) is reported alongside.
inline TraceSum rescaled_trace(int n, double lambda, int N, double tol = 1e-12) {
  if (n < 1) throw std::invalid_argument("rescaled_trace: n < 1");
  if (lambda == 0.0) throw std::invalid_argument("rescaled_trace: lambda == 0");
  if (!(tol > 0.0)) throw std::invalid_argument("rescaled_trace: tol must be positive");
  if (2 * N <= n) throw divergence_error("rescaled_trace: sum diverges for 2N <= n");
  const double L = std::abs(lambda);
  auto term = [&](long j) {
    return shell_count(j, n) * std::pow(1.0 + L * (2.0 * static_cast<double>(j) + n), -2.0 * N);
  };

  TraceSum res;
  KahanSum partial;
  long J = 0;
  long target = 64;
  for (;;) {
    for (; J < target; ++J) partial.add(term(J));
    const detail::Jet g = detail::shell_term_jet(static_cast<double>(J), n, L, N);
    // g^(k)(J) = k! c_k
    const double g0 = g.c[0], g1 = g.c[1], g3 = 6.0 * g.c[3];
    const double integral = detail::shell_term_tail_integral(static_cast<double>(J), n, L, N);
    const double tail = integral + 0.5 * g0 - g1 / 12.0 + g3 / 720.0;
    // remainder <= (1/720) int_J^inf |g''''| = |g'''(J)|/720 when g'''' keeps its sign
    const double rem = std::abs(g3) / 720.0;
    const double yJ = 1.0 + L * (2.0 * static_cast<double>(J) + n);
    res.crude_tail_bound = std::pow(2.0 * L, 1.0 - n) * std::pow(yJ, n - 2.0 * N) / (2.0 * L * (2.0 * N - n));
    const double roundoff = 4.0 * std::numeric_limits<double>::epsilon() * (partial.value() + std::abs(tail));
    res.partial_sum = partial.value();
    res.value = partial.value() + tail;
    res.tail_bound = rem + roundoff;
    res.shells = J;
    // the EM bound is trusted only once the shell index dominates n
    if (res.tail_bound < tol && J >= 8L * n + 32) break;
    if (target > (1L << 26)) break;
    target *= 2;
  }
  return res;
}

}  // namespace szlab
