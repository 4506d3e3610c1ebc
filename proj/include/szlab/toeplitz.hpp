#pragma once

// Toeplitz truncations of circle symbols and the classical Szego limits.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "support.hpp"

namespace szlab {

class CircleSymbol {
public:
  // `even` (f(-theta) = f(theta)) selects the real symmetric eigensolver path.
  CircleSymbol(std::function<double(double)> f, std::string name = "f", bool positive = true, bool even = false)
      : f_(std::move(f)), name_(std::move(name)), positive_(positive), even_(even) {
    if (positive_) {
      double lo = std::numeric_limits<double>::infinity();
      for (int m = 0; m < 4096; ++m) lo = std::min(lo, (*this)(2.0 * pi * m / 4096.0));
      if (!(lo > 0.0)) {
        std::ostringstream os;
        os << "CircleSymbol '" << name_ << "': flagged positive but min on the 4096-point grid is " << lo;
        throw std::invalid_argument(os.str());
      }
    }
  }

  double operator()(double theta) const { return f_(theta); }
  const std::string& name() const { return name_; }
  bool positive() const { return positive_; }
  bool even() const { return even_; }

  // min/max on a 4096-point grid
  std::pair<double, double> range() const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int m = 0; m < 4096; ++m) {
      const double v = (*this)(2.0 * pi * m / 4096.0);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return {lo, hi};
  }

  // c_k for |k| <= K from one trapezoid pass with M >= max(4096, 4(K+1)) nodes.
  std::vector<cplx> coefficients(long K) const {
    std::lock_guard<std::mutex> lock(*mu_);
    if (cache_K_ >= K) return std::vector<cplx>(cache_.begin() + (cache_K_ - K), cache_.begin() + (cache_K_ + K + 1));
    const long M = std::max<long>(4096, 4 * (K + 1));
    std::vector<double> vals(M);
    for (long m = 0; m < M; ++m) vals[m] = f_(2.0 * pi * static_cast<double>(m) / static_cast<double>(M));
    std::vector<cplx> c(2 * K + 1);
    double mean_abs = 0.0;
    for (double v : vals) mean_abs += std::abs(v);
    mean_abs /= static_cast<double>(M);
    // parts below the summation roundoff are set to zero so constant symbols stay exact
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * mean_abs;
    for (long k = -K; k <= K; ++k) {
      KahanSum re, im;
      for (long m = 0; m < M; ++m) {
        // reduce k*m mod M before forming the angle
        const long km = ((k * m) % M + M) % M;
        const double ang = 2.0 * pi * static_cast<double>(km) / static_cast<double>(M);
        re.add(vals[m] * std::cos(ang));
        im.add(-vals[m] * std::sin(ang));
      }
      double cr = re.value() / static_cast<double>(M), ci = im.value() / static_cast<double>(M);
      if (std::abs(cr) < floor) cr = 0.0;
      if (std::abs(ci) < floor) ci = 0.0;
      c[k + K] = cplx(cr, ci);
    }
    cache_ = c;
    cache_K_ = K;
    return c;
  }

private:
  std::function<double(double)> f_;
  std::string name_;
  bool positive_, even_;
  mutable std::shared_ptr<std::mutex> mu_ = std::make_shared<std::mutex>();
  mutable std::vector<cplx> cache_;
  mutable long cache_K_ = -1;
};

inline cplx fourier_coeff(const CircleSymbol& f, long k) {
  const long K = std::abs(k);
  return f.coefficients(K)[k + K];
}

// (1/2pi) int_0^{2pi} F(f(theta)) dtheta by trapezoid on M nodes.
inline double circle_average(const CircleSymbol& f, const std::function<double(double)>& F, long M = 1 << 16) {
  KahanSum s;
  for (long m = 0; m < M; ++m) s.add(F(f(2.0 * pi * static_cast<double>(m) / static_cast<double>(M))));
  return s.value() / static_cast<double>(M);
}

// A[j][k] = c_{j-k}, 0 <= j,k <= n.
inline ComplexMatrix toeplitz_matrix(const CircleSymbol& f, long n) {
  const auto c = f.coefficients(n);
  ComplexMatrix A(n + 1, n + 1);
  for (long j = 0; j <= n; ++j)
    for (long k = 0; k <= n; ++k) A(j, k) = c[j - k + n];
  return A;
}

inline RealMatrix toeplitz_matrix_real(const CircleSymbol& f, long n) {
  const auto c = f.coefficients(n);
  RealMatrix A(n + 1, n + 1);
  for (long j = 0; j <= n; ++j)
    for (long k = 0; k <= n; ++k) A(j, k) = c[j - k + n].real();
  return A;
}

// Eigenvalues of P_n T_f P_n. Even symbols take the real path.
inline std::vector<double> toeplitz_eigenvalues(const CircleSymbol& f, long n) {
  if (n < 0) throw std::invalid_argument("toeplitz: n must be >= 0");
  if (f.even()) return eigenvalues_self_adjoint(toeplitz_matrix_real(f, n));
  return eigenvalues_self_adjoint(toeplitz_matrix(f, n));
}

struct definiteness_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Spectral inclusion min f <= lambda_i <= max f, with slack for the coefficient quadrature.
inline void check_spectral_inclusion(const CircleSymbol& f, const std::vector<double>& ev) {
  const auto [lo, hi] = f.range();
  const double slack = 1e-9 * std::max({1.0, std::abs(lo), std::abs(hi)});
  // the 4096 grid can miss the true extremum by O(h^2)
  const double grid_slack = 1e-6 * (hi - lo);
  for (double v : ev)
    if (v < lo - slack - grid_slack || v > hi + slack + grid_slack) {
      std::ostringstream os;
      os << "toeplitz eigenvalue " << v << " outside [" << lo << ", " << hi << "]";
      throw std::logic_error(os.str());
    }
}

inline double szego_logdet(const CircleSymbol& f, long n) {
  const auto ev = toeplitz_eigenvalues(f, n);
  check_spectral_inclusion(f, ev);
  KahanSum s;
  for (double v : ev) {
    if (!(v > 0.0)) {
      std::ostringstream os;
      os << "szego_logdet: P_n T_f P_n not positive definite (eigenvalue " << v << ")";
      throw definiteness_error(os.str());
    }
    s.add(std::log(v));
  }
  return s.value() / static_cast<double>(n + 1);
}

inline double szego_functional(const CircleSymbol& f, const std::function<double(double)>& F, long n) {
  const auto ev = toeplitz_eigenvalues(f, n);
  check_spectral_inclusion(f, ev);
  KahanSum s;
  for (double v : ev) {
    const double y = F(v);
    if (!std::isfinite(y)) {
      std::ostringstream os;
      os << "szego_functional: F undefined at eigenvalue " << v;
      throw std::domain_error(os.str());
    }
    s.add(y);
  }
  return s.value() / static_cast<double>(n + 1);
}

inline double szego_logdet_limit(const CircleSymbol& f) {
  return circle_average(f, [](double x) { return std::log(x); });
}

struct ConvergenceRow {
  long n;
  double value, limit, gap;
};

// mode "logdet" uses szego_logdet; otherwise F is applied.
inline std::vector<ConvergenceRow> convergence_table(const CircleSymbol& f, const std::function<double(double)>* F,
                                                     const std::vector<long>& n_values) {
  for (std::size_t i = 1; i < n_values.size(); ++i)
    if (n_values[i] <= n_values[i - 1]) throw std::invalid_argument("convergence_table: n values must ascend");
  const double limit = F ? circle_average(f, *F) : szego_logdet_limit(f);
  f.coefficients(n_values.empty() ? 0 : n_values.back());
  std::vector<ConvergenceRow> rows(n_values.size());
  parallel_for(n_values.size(), [&](std::size_t i) {
    const long n = n_values[i];
    const double v = F ? szego_functional(f, *F, n) : szego_logdet(f, n);
    rows[i] = {n, v, limit, std::abs(v - limit)};
  });
  return rows;
}

inline CsvTable convergence_csv(const std::vector<ConvergenceRow>& rows) {
  CsvTable t({"n", "value", "limit", "gap"});
  for (auto& r : rows) t.add_row({r.n, r.value, r.limit, r.gap});
  return t;
}

}  // namespace szlab
