#pragma once

// Weyl quantization on grids, the truncated Moyal star product, the
// Heisenberg composition correction and a few symbol-calculus experiments.
//
// A sampled symbol is a GridFunction whose phase-space axes are named
// xi1..xin and u1..un; extra axes (x*, y*, t, lambda) are carried along.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "heisenberg.hpp"
#include "linalg.hpp"
#include "support.hpp"

namespace szlab {

using SampledSymbol = GridFunction;

inline std::string xi_axis(int j) { return "xi" + std::to_string(j); }
inline std::string u_axis(int j) { return "u" + std::to_string(j); }

// Symbol on the (xi,u) box [-xi_half, xi_half]^n x [-u_half, u_half]^n.
inline SampledSymbol phase_symbol(int n, double xi_half, std::size_t xi_count, double u_half, std::size_t u_count,
                                  const std::function<cplx(const std::vector<double>&, const std::vector<double>&)>& a,
                                  int smoothness = std::numeric_limits<int>::max()) {
  std::vector<GridFunction::Axis> ax;
  for (int j = 1; j <= n; ++j) ax.push_back({xi_axis(j), -xi_half, xi_half, xi_count});
  for (int j = 1; j <= n; ++j) ax.push_back({axis_name('u', j), -u_half, u_half, u_count});
  SampledSymbol s = GridFunction::from_axes(ax);
  s.blocks().assign(2 * n, "xi");
  std::fill(s.blocks().begin() + n, s.blocks().end(), "u");
  std::vector<double> xi(n), u(n);
  s.fill([&](const std::vector<double>& c) {
    for (int j = 0; j < n; ++j) {
      xi[j] = c[j];
      u[j] = c[n + j];
    }
    return a(xi, u);
  });
  s.smoothness = smoothness;
  return s;
}

// Number of xi axes (= number of u axes) in a symbol grid.
inline int phase_dim(const SampledSymbol& a) {
  int n = 0;
  while (a.has_axis(xi_axis(n + 1))) ++n;
  for (int j = 1; j <= n; ++j)
    if (!a.has_axis(u_axis(j))) throw std::invalid_argument("symbol grid has " + xi_axis(j) + " but no " + u_axis(j));
  if (n == 0) throw std::invalid_argument("symbol grid has no xi axes");
  return n;
}

// Second-order central stencil for the order-th derivative along one axis,
// order 1..4. Nodes whose stencil leaves the grid become NaN.
inline GridFunction derivative(const GridFunction& f, std::size_t axis, int order) {
  static const std::vector<std::vector<double>> weights = {
      {-0.5, 0.0, 0.5}, {1.0, -2.0, 1.0}, {-0.5, 1.0, 0.0, -1.0, 0.5}, {1.0, -4.0, 6.0, -4.0, 1.0}};
  if (order == 0) return f;
  if (order < 0 || order > 4) throw std::invalid_argument("derivative: stencil order " + std::to_string(order) + " not available");
  const auto& w = weights[order - 1];
  const long half = static_cast<long>(w.size() / 2);
  const double scale = std::pow(f.spacing()[axis], -order);
  const std::size_t st = f.strides()[axis];
  const long len = static_cast<long>(f.shape()[axis]);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  GridFunction out = f;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const long i = static_cast<long>(f.index_along(k, axis));
    if (i - half < 0 || i + half >= len) {
      out[k] = cplx(nan, nan);
      continue;
    }
    cplx s{};
    for (long m = -half; m <= half; ++m)
      if (w[m + half] != 0.0) s += w[m + half] * f[static_cast<std::size_t>(static_cast<long>(k) + m * static_cast<long>(st))];
    out[k] = s * scale;
  }
  return out;
}

// d_xi^alpha d_u^beta a
inline GridFunction phase_derivative(const SampledSymbol& a, const std::vector<int>& alpha, const std::vector<int>& beta) {
  GridFunction d = a;
  for (std::size_t j = 0; j < alpha.size(); ++j)
    if (alpha[j]) d = derivative(d, a.axis_index(xi_axis(static_cast<int>(j) + 1)), alpha[j]);
  for (std::size_t j = 0; j < beta.size(); ++j)
    if (beta[j]) d = derivative(d, a.axis_index(u_axis(static_cast<int>(j) + 1)), beta[j]);
  return d;
}

struct StarTruncation {
  int order = 4;
  explicit StarTruncation(int N = 4) : order(N) {
    if (N < 0) throw std::invalid_argument("StarTruncation: order must be >= 0");
    if (N > 4) throw std::invalid_argument("StarTruncation: order > 4 needs stencils beyond order 4");
  }
  // (1/s!)(i/2)^s
  cplx coefficient(int s) const {
    cplx c = 1.0;
    for (int k = 1; k <= s; ++k) c *= cplx(0.0, 0.5) / static_cast<double>(k);
    return c;
  }
};

namespace detail {

inline void for_each_multiindex_pair(int n, int N, const std::function<void(const std::vector<int>&, const std::vector<int>&)>& fn) {
  std::vector<int> ab(2 * n, 0);
  // all (alpha,beta) with |alpha|+|beta| <= N
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == 2 * n) {
      fn(std::vector<int>(ab.begin(), ab.begin() + n), std::vector<int>(ab.begin() + n, ab.end()));
      return;
    }
    for (int k = 0; k <= left; ++k) {
      ab[pos] = k;
      rec(pos + 1, left - k);
    }
    ab[pos] = 0;
  };
  rec(0, N);
}

inline double factorial_multi(const std::vector<int>& a) {
  double f = 1.0;
  for (int v : a)
    for (int k = 2; k <= v; ++k) f *= k;
  return f;
}

}  // namespace detail

// Truncated Moyal product
//   sum_{|alpha|+|beta| <= N} (i/2)^{|alpha|+|beta|} (-1)^{|beta|} / (alpha! beta!)
//       (d_xi^alpha d_u^beta a)(d_u^alpha d_xi^beta b),
// the multinomial expansion of a (<-d_xi ->d_u - ->d_xi <-d_u)^s b.
inline SampledSymbol moyal_star(const SampledSymbol& a, const SampledSymbol& b, const StarTruncation& trunc = StarTruncation{}) {
  if (!a.same_layout(b)) throw std::invalid_argument("moyal_star: symbols live on different grids");
  const int n = phase_dim(a);
  const int N = trunc.order;
  const int smooth = std::min(a.smoothness, b.smoothness);
  if (smooth < 2 * N) {
    std::ostringstream os;
    os << "moyal_star: smoothness order " << smooth << " < 2N = " << 2 * N;
    throw std::invalid_argument(os.str());
  }
  SampledSymbol out = a;
  for (auto& z : out.samples()) z = 0.0;
  detail::for_each_multiindex_pair(n, N, [&](const std::vector<int>& alpha, const std::vector<int>& beta) {
    const int s = degree(alpha) + degree(beta);
    cplx c = std::pow(cplx(0.0, 0.5), s) / (detail::factorial_multi(alpha) * detail::factorial_multi(beta));
    if (degree(beta) % 2) c = -c;
    const GridFunction da = phase_derivative(a, alpha, beta);
    const GridFunction db = phase_derivative(b, beta, alpha);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += c * da[k] * db[k];
  });
  out.smoothness = smooth - 2 * N;
  return out;
}

// Largest |z| over nodes where z is not NaN.
inline double interior_sup(const GridFunction& f) { return f.max_abs(); }

inline std::size_t interior_count(const GridFunction& f) {
  std::size_t c = 0;
  for (auto& z : f.samples())
    if (!std::isnan(z.real())) ++c;
  return c;
}

// ------------------------------------------------------------ Weyl quantization

// Matrix of Op^W(a) on the u-grid `grid` (a GridFunction over u1..un):
//   K_ij = (2 pi)^{-n} h_v sum_xi w_xi e^{i (u_i - v_j) xi} a(xi, (u_i + v_j)/2),
// trapezoid in xi over the symbol's xi nodes, linear interpolation in the midpoint.
inline ComplexMatrix weyl_matrix(const SampledSymbol& a, const GridFunction& grid) {
  const int n = phase_dim(a);
  if (static_cast<int>(grid.rank()) != n) throw std::invalid_argument("weyl_matrix: grid rank != symbol dimension");
  std::vector<std::size_t> xa(n), ua(n);
  for (int j = 0; j < n; ++j) {
    xa[j] = a.axis_index(xi_axis(j + 1));
    ua[j] = a.axis_index(u_axis(j + 1));
  }
  if (a.rank() != static_cast<std::size_t>(2 * n))
    throw std::invalid_argument("weyl_matrix: symbol must depend on (xi,u) only; slice other axes first");
  for (int j = 0; j < n; ++j) {
    const double lo = a.origin()[ua[j]], hi = a.coord(ua[j], a.shape()[ua[j]] - 1);
    const double glo = grid.origin()[j], ghi = grid.coord(j, grid.shape()[j] - 1);
    if (glo < lo - 1e-12 || ghi > hi + 1e-12)
      throw std::invalid_argument("weyl_matrix: function grid leaves the symbol's u-box");
  }
  const std::size_t M = grid.size();
  std::size_t nxi = 1;
  for (int j = 0; j < n; ++j) nxi *= a.shape()[xa[j]];
  // xi nodes, trapezoid weights, and flat offsets into the symbol
  std::vector<std::vector<double>> xi(nxi, std::vector<double>(n));
  std::vector<double> wxi(nxi, 1.0);
  std::vector<std::size_t> xoff(nxi, 0);
  for (std::size_t q = 0; q < nxi; ++q) {
    std::size_t rest = q;
    for (int j = n - 1; j >= 0; --j) {
      const std::size_t len = a.shape()[xa[j]];
      const std::size_t i = rest % len;
      rest /= len;
      xi[q][j] = a.coord(xa[j], i);
      wxi[q] *= a.spacing()[xa[j]] * ((i == 0 || i + 1 == len) ? 0.5 : 1.0);
      xoff[q] += i * a.strides()[xa[j]];
    }
  }
  const double pref = std::pow(2.0 * pi, -n) * grid.cell_volume();
  // e^{i u.xi} per grid point, when the table fits in memory
  std::vector<cplx> phase;
  if (M * nxi <= (std::size_t{1} << 25)) {
    phase.resize(M * nxi);
    std::vector<double> c;
    for (std::size_t i = 0; i < M; ++i) {
      grid.coords(i, c);
      for (std::size_t q = 0; q < nxi; ++q) {
        double ph = 0.0;
        for (int j = 0; j < n; ++j) ph += c[j] * xi[q][j];
        phase[i * nxi + q] = std::exp(cplx(0.0, ph));
      }
    }
  }
  ComplexMatrix K(M, M);
  parallel_for(M, [&](std::size_t i) {
    std::vector<double> ui, vj;
    grid.coords(i, ui);
    std::vector<std::size_t> cidx(std::size_t{1} << n);
    std::vector<double> cw(std::size_t{1} << n);
    for (std::size_t jj = 0; jj < M; ++jj) {
      grid.coords(jj, vj);
      // interpolation corners for the midpoint
      std::size_t base = 0;
      double frac[8];
      for (int j = 0; j < n; ++j) {
        const double m = 0.5 * (ui[j] + vj[j]);
        const double s = (m - a.origin()[ua[j]]) / a.spacing()[ua[j]];
        const double last = static_cast<double>(a.shape()[ua[j]] - 1);
        double fl = std::floor(std::clamp(s, 0.0, last));
        if (fl >= last) fl = last - 1.0;
        frac[j] = std::clamp(s - fl, 0.0, 1.0);
        base += static_cast<std::size_t>(fl) * a.strides()[ua[j]];
      }
      for (std::size_t c = 0; c < cidx.size(); ++c) {
        double w = 1.0;
        std::size_t off = base;
        for (int j = 0; j < n; ++j) {
          if (c >> j & 1) {
            w *= frac[j];
            off += a.strides()[ua[j]];
          } else {
            w *= 1.0 - frac[j];
          }
        }
        cidx[c] = off;
        cw[c] = w;
      }
      cplx s{};
      for (std::size_t q = 0; q < nxi; ++q) {
        cplx av{};
        for (std::size_t c = 0; c < cidx.size(); ++c)
          if (cw[c] != 0.0) av += cw[c] * a[xoff[q] + cidx[c]];
        if (av == cplx{}) continue;
        if (!phase.empty()) {
          s += wxi[q] * phase[i * nxi + q] * std::conj(phase[jj * nxi + q]) * av;
          continue;
        }
        double ph = 0.0;
        for (int j = 0; j < n; ++j) ph += (ui[j] - vj[j]) * xi[q][j];
        s += wxi[q] * std::exp(cplx(0.0, ph)) * av;
      }
      K(i, jj) = pref * s;
    }
  });
  return K;
}

// Raised by weyl_quantize when f has spectral content at the edge of the xi-box.
struct aliasing_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// |f^(xi)| at the xi-box edge relative to its peak along each coordinate axis.
inline double edge_spectrum_ratio(const SampledSymbol& a, const GridFunction& f) {
  const int n = phase_dim(a);
  double peak = 0.0, edge = 0.0;
  std::vector<double> c;
  for (int j = 0; j < n; ++j) {
    const std::size_t ax = a.axis_index(xi_axis(j + 1));
    for (std::size_t i = 0; i < a.shape()[ax]; ++i) {
      const double xi = a.coord(ax, i);
      cplx s{};
      for (std::size_t k = 0; k < f.size(); ++k) {
        f.coords(k, c);
        s += f[k] * std::exp(cplx(0.0, -xi * c[j]));
      }
      const double m = std::abs(s) * f.cell_volume();
      peak = std::max(peak, m);
      if (i == 0 || i + 1 == a.shape()[ax]) edge = std::max(edge, m);
    }
  }
  return peak > 0.0 ? edge / peak : 0.0;
}

inline GridFunction weyl_quantize(const SampledSymbol& a, const GridFunction& f, double alias_tol = 1e-6) {
  const double r = edge_spectrum_ratio(a, f);
  if (r > alias_tol) {
    std::ostringstream os;
    os << "weyl_quantize: f has spectral content " << r << " (relative) at the edge of the xi-box; widen the xi-box";
    throw aliasing_error(os.str());
  }
  const ComplexMatrix K = weyl_matrix(a, f);
  GridFunction out = f;
  const std::size_t M = f.size();
  for (std::size_t i = 0; i < M; ++i) {
    cplx s{};
    for (std::size_t j = 0; j < M; ++j) s += K(i, j) * f[j];
    out[i] = s;
  }
  return out;
}

// ------------------------------------------------------------ Heisenberg composition

struct ComposeResult {
  SampledSymbol value;          // b#a + first + second
  SampledSymbol first_order;    // (1/2 sqrt(lambda)) sum_j (X_j b # T_j a + Y_j b # T'_j a)
  SampledSymbol second_order;   // (1/8|lambda|) sum_{j,k} four terms
  double remainder_estimate = 0.0;  // size of the next (third-order) term, R_2 itself is not formed
  bool convention_dependent = false;  // lambda < 0: sqrt(lambda) = -sqrt|lambda|
};

// T_j a = -d_{u_j} a, T'_j a = d_{xi_j} a
inline GridFunction T_op(const SampledSymbol& a, int j) {
  GridFunction d = derivative(a, a.axis_index(u_axis(j)), 1);
  for (auto& z : d.samples()) z = -z;
  return d;
}
inline GridFunction Tprime_op(const SampledSymbol& a, int j) { return derivative(a, a.axis_index(xi_axis(j)), 1); }

// Symbols over (x, y, t, xi, u) at a fixed lambda.
inline ComposeResult heisenberg_compose(const SampledSymbol& a, const SampledSymbol& b, double lambda,
                                        const StarTruncation& trunc = StarTruncation{}) {
  if (lambda == 0.0 || !std::isfinite(lambda)) throw std::invalid_argument("heisenberg_compose: lambda must be nonzero");
  if (!a.same_layout(b)) throw std::invalid_argument("heisenberg_compose: symbols live on different grids");
  const int n = phase_dim(a);
  for (int j = 1; j <= n; ++j)
    if (!a.has_axis(axis_name('x', j)) || !a.has_axis(axis_name('y', j)) || !a.has_axis("t"))
      throw std::invalid_argument("heisenberg_compose: g-axes x" + std::to_string(j) + ", y" + std::to_string(j) + ", t required");
  const RepresentationParams rp(lambda);
  auto keep = [](GridFunction g, int s) {
    g.smoothness = s;
    return g;
  };
  const int sm = std::min(a.smoothness, b.smoothness);

  ComposeResult R;
  R.convention_dependent = lambda < 0;
  R.value = moyal_star(b, a, trunc);
  R.first_order = a;
  R.second_order = a;
  for (auto& z : R.first_order.samples()) z = 0.0;
  for (auto& z : R.second_order.samples()) z = 0.0;

  const double c1 = 1.0 / (2.0 * rp.signed_sqrt());
  const double c2 = 1.0 / (8.0 * std::abs(lambda));
  std::vector<GridFunction> Xb(n), Yb(n), Ta(n), Tpa(n);
  for (int j = 1; j <= n; ++j) {
    Xb[j - 1] = keep(vector_field(Field::X, j, b), sm);
    Yb[j - 1] = keep(vector_field(Field::Y, j, b), sm);
    Ta[j - 1] = keep(T_op(a, j), sm);
    Tpa[j - 1] = keep(Tprime_op(a, j), sm);
  }
  auto accumulate = [&](GridFunction& dst, const GridFunction& term, double c) {
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += c * term[k];
  };
  for (int j = 0; j < n; ++j) {
    accumulate(R.first_order, moyal_star(Xb[j], Ta[j], trunc), c1);
    accumulate(R.first_order, moyal_star(Yb[j], Tpa[j], trunc), c1);
  }
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const GridFunction XX = keep(vector_field(Field::X, j + 1, Xb[k]), sm);
      const GridFunction YY = keep(vector_field(Field::Y, j + 1, Yb[k]), sm);
      const GridFunction XY = keep(vector_field(Field::X, j + 1, Yb[k]), sm);
      const GridFunction YX = keep(vector_field(Field::Y, j + 1, Xb[k]), sm);
      accumulate(R.second_order, moyal_star(XX, keep(T_op(Ta[k], j + 1), sm), trunc), c2);
      accumulate(R.second_order, moyal_star(YY, keep(Tprime_op(Tpa[k], j + 1), sm), trunc), c2);
      accumulate(R.second_order, moyal_star(XY, keep(T_op(Tpa[k], j + 1), sm), trunc), c2);
      accumulate(R.second_order, moyal_star(YX, keep(Tprime_op(Ta[k], j + 1), sm), trunc), c2);
    }
  accumulate(R.value, R.first_order, 1.0);
  accumulate(R.value, R.second_order, 1.0);

  // third-order size: (1/(48 |lambda|^{3/2})) (2n)^3 max_F sup|F^3 b| max sup|d^3 a|
  double fb = 0.0, da = 0.0;
  for (int j = 1; j <= n; ++j) {
    fb = std::max(fb, vector_field(Field::X, j, vector_field(Field::X, j, Xb[j - 1])).max_abs());
    fb = std::max(fb, vector_field(Field::Y, j, vector_field(Field::Y, j, Yb[j - 1])).max_abs());
    da = std::max(da, derivative(a, a.axis_index(u_axis(j)), 3).max_abs());
    da = std::max(da, derivative(a, a.axis_index(xi_axis(j)), 3).max_abs());
  }
  R.remainder_estimate = std::pow(2.0 * n, 3) * fb * da / (48.0 * std::pow(std::abs(lambda), 1.5));
  return R;
}

// ------------------------------------------------------------ experiments

struct DecayRow {
  double r, sup, r_sup;
};

// b_r = (lambda(|xi|^2+|u|^2) + V0 + r)^{-1} on a's grid; rows of sup|a#b_r - b_r a| and r*sup.
inline std::vector<DecayRow> remainder_decay(const SampledSymbol& a, const std::vector<double>& r_values, double lambda,
                                             double V0, const StarTruncation& trunc = StarTruncation{}) {
  if (r_values.empty()) throw std::invalid_argument("remainder_decay: empty r_values");
  if (!(lambda > 0.0)) throw std::invalid_argument("remainder_decay: lambda must be positive");
  if (V0 < 0.0) throw std::invalid_argument("remainder_decay: V0 must be nonnegative");
  const int n = phase_dim(a);
  std::vector<DecayRow> rows(r_values.size());
  parallel_for(r_values.size(), [&](std::size_t i) {
    const double r = r_values[i];
    SampledSymbol b = a;
    b.smoothness = std::numeric_limits<int>::max();
    std::vector<double> c;
    for (std::size_t k = 0; k < b.size(); ++k) {
      b.coords(k, c);
      double q = 0.0;
      for (int j = 0; j < n; ++j) q += c[a.axis_index(xi_axis(j + 1))] * c[a.axis_index(xi_axis(j + 1))] +
                                       c[a.axis_index(u_axis(j + 1))] * c[a.axis_index(u_axis(j + 1))];
      b[k] = 1.0 / (lambda * q + V0 + r);
    }
    SampledSymbol d = moyal_star(a, b, trunc);
    for (std::size_t k = 0; k < d.size(); ++k) d[k] -= b[k] * a[k];
    const double s = interior_sup(d);
    rows[i] = {r, s, r * s};
  });
  return rows;
}

// C^infinity bump exp(1 - 1/(1 - rho^2)) on the unit disc around (xi0, u0).
inline SampledSymbol bump_symbol(int n, double half_width, std::size_t count, double xi0, double u0) {
  return phase_symbol(n, half_width, count, half_width, count, [&](const std::vector<double>& xi, const std::vector<double>& u) {
    double rho2 = 0.0;
    for (int j = 0; j < n; ++j) rho2 += (xi[j] - xi0) * (xi[j] - xi0) + (u[j] - u0) * (u[j] - u0);
    return rho2 < 1.0 ? cplx(std::exp(1.0 - 1.0 / (1.0 - rho2))) : cplx{};
  });
}

struct EstimateRow {
  std::vector<int> alpha, beta;
  double max_ratio = 0.0;  // sup over valid samples
  std::size_t samples = 0;
};

// |d_xi^alpha d_u^beta a| / (|lambda|^{(|alpha|+|beta|)/2} (1 + Phi (1+|xi|^2+|u|^2))^{(m-|alpha|-|beta|)/2})
// with Phi = |lambda| + |g|^kappa, on a symbol over (x,y,t,lambda,xi,u) or (lambda,xi,u).
inline std::vector<EstimateRow> symbol_estimate_check(const SampledSymbol& a, double m, double kappa,
                                                      const std::vector<std::pair<std::vector<int>, std::vector<int>>>& orders) {
  const int n = phase_dim(a);
  const std::size_t la = a.axis_index("lambda");
  const bool has_g = a.has_axis("t");
  std::vector<EstimateRow> out;
  for (auto& [alpha, beta] : orders) {
    if (static_cast<int>(alpha.size()) != n || static_cast<int>(beta.size()) != n)
      throw std::invalid_argument("symbol_estimate_check: order multi-index has the wrong length");
    for (int v : alpha)
      if (v > 4) throw std::invalid_argument("symbol_estimate_check: missing stencil order " + std::to_string(v));
    for (int v : beta)
      if (v > 4) throw std::invalid_argument("symbol_estimate_check: missing stencil order " + std::to_string(v));
    const GridFunction d = phase_derivative(a, alpha, beta);
    const int s = degree(alpha) + degree(beta);
    EstimateRow row{alpha, beta, 0.0, 0};
    std::vector<double> c;
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (std::isnan(d[k].real())) continue;
      d.coords(k, c);
      const double lam = c[la];
      if (lam == 0.0) continue;
      double V = 0.0;
      if (has_g) {
        HeisenbergPoint g = HeisenbergPoint::identity(n);
        for (int j = 0; j < n; ++j) {
          g.x[j] = c[a.axis_index(axis_name('x', j + 1))];
          g.y[j] = c[a.axis_index(axis_name('y', j + 1))];
        }
        g.t = c[a.axis_index("t")];
        V = std::pow(homogeneous_norm(g), kappa);
      }
      double q = 1.0;
      for (int j = 0; j < n; ++j) {
        const double xi = c[a.axis_index(xi_axis(j + 1))], u = c[a.axis_index(u_axis(j + 1))];
        q += xi * xi + u * u;
      }
      const double Phi = std::abs(lam) + V;
      const double denom = std::pow(std::abs(lam), 0.5 * s) * std::pow(1.0 + Phi * q, 0.5 * (m - s));
      row.max_ratio = std::max(row.max_ratio, std::abs(d[k]) / denom);
      ++row.samples;
    }
    out.push_back(row);
  }
  return out;
}

struct PowerRow {
  std::size_t size;
  double difference;  // ||Op(a)^ell - Op(a^ell)||
};

// a is a callable symbol on (xi,u); each refinement quantizes on `size` u-nodes over
// [-u_half, u_half]^n with a xi-box wide enough for the grid's Nyquist band.
inline std::vector<PowerRow> power_symbol_check(const std::function<cplx(const std::vector<double>&, const std::vector<double>&)>& a,
                                                int n, int ell, double u_half, const std::vector<std::size_t>& sizes) {
  if (ell < 1) throw std::invalid_argument("power_symbol_check: ell must be >= 1");
  std::vector<PowerRow> rows;
  for (std::size_t size : sizes) {
    const GridFunction grid = line_grid(n, u_half, size);
    const double h = grid.spacing()[0];
    // midpoints (u+v)/2 sit on the half grid, so sample the symbol at h/2
    const std::size_t ucount = 2 * size - 1;
    const double xi_half = pi / h;
    const SampledSymbol s1 = phase_symbol(n, xi_half, size, u_half, ucount, a);
    const SampledSymbol sl = phase_symbol(n, xi_half, size, u_half, ucount,
                                          [&](const std::vector<double>& xi, const std::vector<double>& u) { return std::pow(a(xi, u), ell); });
    const ComplexMatrix K = weyl_matrix(s1, grid);
    ComplexMatrix P = K;
    for (int k = 1; k < ell; ++k) P = P * K;
    const ComplexMatrix Kl = weyl_matrix(sl, grid);
    rows.push_back({size, ell == 1 ? 0.0 : operator_norm(P - Kl)});
  }
  return rows;
}

}  // namespace szlab
