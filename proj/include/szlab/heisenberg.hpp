#pragma once

// The Heisenberg group H^n: group law, homogeneous norm, left-invariant
// fields, the Schrodinger representation and a grid-level group Fourier
// transform with Plancherel, inversion and the lambda-band cutoff.
//
// Grids on H^n use axes x1..xn, y1..yn, t; grids on R^n use u1..un.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "hermite.hpp"
#include "linalg.hpp"
#include "support.hpp"

namespace szlab {

struct HeisenbergPoint {
  std::vector<double> x, y;
  double t = 0.0;

  HeisenbergPoint() = default;
  HeisenbergPoint(std::vector<double> x_, std::vector<double> y_, double t_) : x(std::move(x_)), y(std::move(y_)), t(t_) {
    if (x.size() != y.size()) throw std::invalid_argument("HeisenbergPoint: dim(x) != dim(y)");
  }
  static HeisenbergPoint identity(int n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0}; }
  int n() const { return static_cast<int>(x.size()); }
  HeisenbergPoint inverse() const {
    HeisenbergPoint g = *this;
    for (auto& v : g.x) v = -v;
    for (auto& v : g.y) v = -v;
    g.t = -t;
    return g;
  }
  // delta_s(x,y,t) = (s x, s y, s^2 t)
  HeisenbergPoint dilate(double s) const {
    HeisenbergPoint g = *this;
    for (auto& v : g.x) v *= s;
    for (auto& v : g.y) v *= s;
    g.t *= s * s;
    return g;
  }
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline HeisenbergPoint group_mul(const HeisenbergPoint& a, const HeisenbergPoint& b) {
  if (a.n() != b.n()) throw std::invalid_argument("group_mul: dimension mismatch");
  HeisenbergPoint g = a;
  for (int j = 0; j < a.n(); ++j) {
    g.x[j] += b.x[j];
    g.y[j] += b.y[j];
  }
  g.t = a.t + b.t + 0.5 * (dot(a.x, b.y) - dot(b.x, a.y));
  return g;
}

// (|(x,y)|^4 + t^2)^(1/4)
inline double homogeneous_norm(const HeisenbergPoint& g) {
  const double r2 = dot(g.x, g.x) + dot(g.y, g.y);
  return std::pow(r2 * r2 + g.t * g.t, 0.25);
}

// ------------------------------------------------------------ vector fields

enum class Field { X, Y, T };

inline std::string axis_name(char block, int j) { return std::string(1, block) + std::to_string(j); }

// Central difference along `axis`; samples whose stencil leaves the grid or
// touches a NaN are set to NaN.
inline GridFunction central_diff(const GridFunction& f, std::size_t axis) {
  GridFunction out = f;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t st = f.strides()[axis], len = f.shape()[axis];
  const double inv = 1.0 / (2.0 * f.spacing()[axis]);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const std::size_t i = f.index_along(k, axis);
    if (i == 0 || i + 1 >= len)
      out[k] = cplx(nan, nan);
    else
      out[k] = (f[k + st] - f[k - st]) * inv;
  }
  return out;
}

// Left-invariant fields X_j = d/dx_j - (y_j/2) d/dt, Y_j = d/dy_j + (x_j/2) d/dt, T = d/dt.
inline GridFunction vector_field(Field which, int j, const GridFunction& f) {
  const std::size_t ti = f.axis_index("t");
  if (which == Field::T) return central_diff(f, ti);
  const std::size_t xi = f.axis_index(axis_name('x', j)), yi = f.axis_index(axis_name('y', j));
  const std::size_t own = which == Field::X ? xi : yi;
  const std::size_t other = which == Field::X ? yi : xi;
  const double sign = which == Field::X ? -0.5 : 0.5;
  GridFunction d = central_diff(f, own);
  const GridFunction dt = central_diff(f, ti);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double c = f.coord(other, f.index_along(k, other));
    d[k] += sign * c * dt[k];
  }
  return d;
}

// Sum_j (X_j^2 + Y_j^2)
inline GridFunction sublaplacian(const GridFunction& f, int n) {
  GridFunction acc = f;
  for (auto& z : acc.samples()) z = 0.0;
  for (int j = 1; j <= n; ++j) {
    const GridFunction xx = vector_field(Field::X, j, vector_field(Field::X, j, f));
    const GridFunction yy = vector_field(Field::Y, j, vector_field(Field::Y, j, f));
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += xx[k] + yy[k];
  }
  return acc;
}

// Grid over H^n with the same half-width and node count on the x, y axes,
// and its own on t.
inline GridFunction heisenberg_grid(int n, double half_width, std::size_t count, double t_half_width,
                                    std::size_t t_count) {
  std::vector<GridFunction::Axis> ax;
  for (int j = 1; j <= n; ++j) ax.push_back({axis_name('x', j), -half_width, half_width, count});
  for (int j = 1; j <= n; ++j) ax.push_back({axis_name('y', j), -half_width, half_width, count});
  ax.push_back({"t", -t_half_width, t_half_width, t_count});
  return GridFunction::from_axes(ax);
}

inline GridFunction line_grid(int n, double half_width, std::size_t count) {
  std::vector<GridFunction::Axis> ax;
  for (int j = 1; j <= n; ++j) ax.push_back({axis_name('u', j), -half_width, half_width, count});
  return GridFunction::from_axes(ax);
}

// ------------------------------------------------------------ representation

// sqrt(lambda) := sgn(lambda) sqrt(|lambda|)
struct RepresentationParams {
  double lambda;
  explicit RepresentationParams(double l) : lambda(l) {
    if (l == 0.0 || !std::isfinite(l)) throw std::invalid_argument("RepresentationParams: lambda must be nonzero");
  }
  double signed_sqrt() const { return lambda > 0 ? std::sqrt(lambda) : -std::sqrt(-lambda); }
  double abs_sqrt() const { return std::sqrt(std::abs(lambda)); }
};

// pi_lambda(x,y,t) f(u) = e^{i lambda (t + x.y/2)} e^{i sqrt(lambda) y.u} f(u + sqrt|lambda| x)
// with the shifted value taken by multilinear interpolation.
inline GridFunction schrodinger_rep(const RepresentationParams& p, const HeisenbergPoint& g, const GridFunction& f) {
  const int n = g.n();
  if (static_cast<int>(f.rank()) != n) throw std::invalid_argument("schrodinger_rep: grid rank != n");
  const double sl = p.signed_sqrt(), al = p.abs_sqrt();
  const double fmax = f.max_abs();

  // mass of f that no output node can reach after the shift
  double lost = 0.0, total = 0.0;
  std::vector<double> c;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double w = std::norm(f[k]);
    total += w;
    if (std::abs(f[k]) <= 1e-12 * fmax) continue;
    f.coords(k, c);
    bool ok = true;
    for (int a = 0; a < n; ++a) {
      const double src = c[a] - al * g.x[a];
      const double lo = f.origin()[a], hi = f.coord(a, f.shape()[a] - 1);
      if (src < lo - 1e-9 * f.spacing()[a] || src > hi + 1e-9 * f.spacing()[a]) ok = false;
    }
    if (!ok) lost += w;
  }
  if (total > 0.0 && lost > 1e-10 * total) {
    std::ostringstream os;
    os << "schrodinger_rep: shift moves " << lost / total << " of the L2 mass off the grid";
    throw truncation_error(os.str());
  }

  GridFunction out = f;
  const cplx phase0 = std::exp(cplx(0.0, p.lambda * (g.t + 0.5 * dot(g.x, g.y))));
  std::vector<double> q(n);
  for (std::size_t k = 0; k < f.size(); ++k) {
    f.coords(k, c);
    for (int a = 0; a < n; ++a) q[a] = c[a] + al * g.x[a];
    bool inside = true;
    const cplx v = f.interpolate(q, &inside);
    out[k] = inside ? phase0 * std::exp(cplx(0.0, sl * dot(g.y, c))) * v : cplx{};
  }
  return out;
}

// ------------------------------------------------------------ Fourier side

// The operator fhat(lambda) = int f(g) pi_lambda(g)^* dg discretized on a
// u-grid whose spacing is sqrt|lambda| * h_x / refine, so every shift u - sqrt|lambda| x
// lands on a node. Row i holds the nonzeros of (fhat phi)(u_i) = sum_k G_ik phi(u_k).
struct FourierSlice {
  double lambda = 0.0;
  int n = 0;
  std::vector<double> u_origin, u_spacing;
  std::vector<std::size_t> u_shape, u_strides;
  std::vector<std::vector<std::pair<std::size_t, cplx>>> rows;

  std::size_t u_size() const { return rows.size(); }
  double u_coord(std::size_t flat, int a) const {
    return u_origin[a] + u_spacing[a] * static_cast<double>((flat / u_strides[a]) % u_shape[a]);
  }
  double u_cell() const {
    double v = 1.0;
    for (double h : u_spacing) v *= h;
    return v;
  }
  // sum |G_ik|^2, the squared Hilbert-Schmidt norm of the discretized operator
  double hs_norm_sq() const {
    KahanSum s;
    for (auto& r : rows)
      for (auto& e : r) s.add(std::norm(e.second));
    return s.value();
  }
  cplx entry(std::size_t i, std::size_t k) const {
    const auto& r = rows[i];
    auto it = std::lower_bound(r.begin(), r.end(), k, [](const auto& e, std::size_t key) { return e.first < key; });
    return (it != r.end() && it->first == k) ? it->second : cplx{};
  }
};

struct FourierOptions {
  double kernel_reach = 7.0;  // half-width of the u-box in units of 1/sqrt|lambda|
  int refine = 1;            // u spacing = sqrt|lambda| h_x / refine
  std::size_t max_u_nodes = 40000;
};

namespace detail {

struct HGridView {
  int n;
  std::vector<std::size_t> xa, ya;
  std::size_t ta;
};

inline HGridView hgrid_view(const GridFunction& f) {
  if (f.rank() % 2 != 1) throw std::invalid_argument("grid is not an H^n grid (rank must be 2n+1)");
  HGridView v;
  v.n = static_cast<int>(f.rank() / 2);
  for (int j = 1; j <= v.n; ++j) {
    v.xa.push_back(f.axis_index(axis_name('x', j)));
    v.ya.push_back(f.axis_index(axis_name('y', j)));
  }
  v.ta = f.axis_index("t");
  return v;
}

// Flattened (x-multi-index, y-multi-index) table of F(x,y) = sum_t f(x,y,t) e^{-i lambda t} h_t.
struct PartialT {
  std::size_t nx = 1, ny = 1;                     // number of x points, y points
  std::vector<std::vector<double>> xs, ys;         // coordinates per flat index
  std::vector<cplx> F;                             // F[ix * ny + iy]
};

inline PartialT partial_t(const GridFunction& f, const HGridView& v, double lambda) {
  PartialT P;
  const int n = v.n;
  std::vector<std::size_t> xshape(n), yshape(n);
  for (int j = 0; j < n; ++j) {
    xshape[j] = f.shape()[v.xa[j]];
    yshape[j] = f.shape()[v.ya[j]];
    P.nx *= xshape[j];
    P.ny *= yshape[j];
  }
  auto unflat = [](std::size_t flat, const std::vector<std::size_t>& shape) {
    std::vector<std::size_t> idx(shape.size());
    for (std::size_t a = shape.size(); a-- > 0;) {
      idx[a] = flat % shape[a];
      flat /= shape[a];
    }
    return idx;
  };
  P.xs.resize(P.nx);
  P.ys.resize(P.ny);
  std::vector<std::vector<std::size_t>> xidx(P.nx), yidx(P.ny);
  for (std::size_t m = 0; m < P.nx; ++m) {
    xidx[m] = unflat(m, xshape);
    for (int j = 0; j < n; ++j) P.xs[m].push_back(f.coord(v.xa[j], xidx[m][j]));
  }
  for (std::size_t q = 0; q < P.ny; ++q) {
    yidx[q] = unflat(q, yshape);
    for (int j = 0; j < n; ++j) P.ys[q].push_back(f.coord(v.ya[j], yidx[q][j]));
  }
  const std::size_t nt = f.shape()[v.ta], tst = f.strides()[v.ta];
  const double ht = f.spacing()[v.ta];
  std::vector<cplx> et(nt);
  for (std::size_t it = 0; it < nt; ++it) et[it] = std::exp(cplx(0.0, -lambda * f.coord(v.ta, it))) * ht;
  P.F.assign(P.nx * P.ny, cplx{});
  for (std::size_t m = 0; m < P.nx; ++m)
    for (std::size_t q = 0; q < P.ny; ++q) {
      std::size_t base = 0;
      for (int j = 0; j < n; ++j) base += xidx[m][j] * f.strides()[v.xa[j]] + yidx[q][j] * f.strides()[v.ya[j]];
      cplx s{};
      for (std::size_t it = 0; it < nt; ++it) s += f[base + it * tst] * et[it];
      P.F[m * P.ny + q] = s;
    }
  return P;
}

}  // namespace detail

inline FourierSlice fourier_slice(const GridFunction& f, double lambda, const FourierOptions& opt = {},
                                  double min_u_half_width = 0.0) {
  const RepresentationParams rp(lambda);
  const auto view = detail::hgrid_view(f);
  const int n = view.n;
  const double sl = rp.signed_sqrt(), al = rp.abs_sqrt();
  const auto P = detail::partial_t(f, view, lambda);

  FourierSlice S;
  S.lambda = lambda;
  S.n = n;
  std::size_t total = 1;
  std::vector<double> xlo(n), hx(n);
  for (int j = 0; j < n; ++j) {
    hx[j] = f.spacing()[view.xa[j]];
    xlo[j] = f.origin()[view.xa[j]];
    const double du = al * hx[j] / opt.refine;
    const double xmax = std::max(std::abs(xlo[j]), std::abs(f.coord(view.xa[j], f.shape()[view.xa[j]] - 1)));
    const double half = std::max(opt.kernel_reach / al + 0.5 * al * xmax, min_u_half_width);
    const std::size_t m = static_cast<std::size_t>(std::ceil(half / du));
    S.u_origin.push_back(-static_cast<double>(m) * du);
    S.u_spacing.push_back(du);
    S.u_shape.push_back(2 * m + 1);
    total *= 2 * m + 1;
  }
  if (total > opt.max_u_nodes) {
    std::ostringstream os;
    os << "fourier_slice: u-grid needs " << total << " nodes at lambda=" << lambda << " (cap " << opt.max_u_nodes << ")";
    throw std::length_error(os.str());
  }
  S.u_strides.assign(n, 1);
  for (int a = n - 1; a > 0; --a) S.u_strides[a - 1] = S.u_strides[a] * S.u_shape[a];
  S.rows.resize(total);

  double hxy = 1.0;
  for (int j = 0; j < n; ++j) hxy *= hx[j] * f.spacing()[view.ya[j]];

  // A[m][q] = F(x_m, y_q) e^{i lambda x.y / 2} h_x h_y
  std::vector<cplx> A(P.nx * P.ny);
  for (std::size_t m = 0; m < P.nx; ++m)
    for (std::size_t q = 0; q < P.ny; ++q)
      A[m * P.ny + q] = P.F[m * P.ny + q] * std::exp(cplx(0.0, 0.5 * lambda * dot(P.xs[m], P.ys[q]))) * hxy;

  std::vector<cplx> E(P.ny);
  std::vector<double> u(n), target(n);
  std::map<std::size_t, cplx> acc;
  for (std::size_t i = 0; i < total; ++i) {
    for (int a = 0; a < n; ++a) u[a] = S.u_coord(i, a);
    for (std::size_t q = 0; q < P.ny; ++q) E[q] = std::exp(cplx(0.0, -sl * dot(P.ys[q], u)));
    acc.clear();
    for (std::size_t m = 0; m < P.nx; ++m) {
      cplx s{};
      const cplx* Am = &A[m * P.ny];
      for (std::size_t q = 0; q < P.ny; ++q) s += Am[q] * E[q];
      if (s == cplx{}) continue;
      // distribute onto the node(s) around u - sqrt|lambda| x_m
      std::size_t base = 0;
      bool inside = true;
      double frac[8];
      std::size_t step[8];
      for (int a = 0; a < n; ++a) {
        const double pos = (u[a] - al * P.xs[m][a] - S.u_origin[a]) / S.u_spacing[a];
        const double r = std::round(pos);
        double fl;
        if (std::abs(pos - r) < 1e-9) {
          fl = r;
          frac[a] = 0.0;
        } else {
          fl = std::floor(pos);
          frac[a] = pos - fl;
        }
        if (fl < 0 || fl > static_cast<double>(S.u_shape[a] - 1) || (frac[a] > 0 && fl + 1 > static_cast<double>(S.u_shape[a] - 1))) {
          inside = false;
          break;
        }
        base += static_cast<std::size_t>(fl) * S.u_strides[a];
        step[a] = S.u_strides[a];
      }
      if (!inside) continue;
      for (std::size_t c = 0; c < (std::size_t{1} << n); ++c) {
        double w = 1.0;
        std::size_t off = base;
        for (int a = 0; a < n; ++a) {
          if (c >> a & 1) {
            w *= frac[a];
            off += step[a];
          } else {
            w *= 1.0 - frac[a];
          }
        }
        if (w != 0.0) acc[off] += w * s;
      }
    }
    auto& row = S.rows[i];
    row.reserve(acc.size());
    for (auto& [k, v] : acc) row.emplace_back(k, v);
  }
  return S;
}

// Hermite-basis matrix <fhat(lambda) phi_beta, phi_alpha>, phi indexed by
// multi-indices with every component < basis_size.
inline ComplexMatrix group_fourier(const GridFunction& f, double lambda, int basis_size, const FourierOptions& opt = {}) {
  constexpr int max_basis = 256;
  if (basis_size < 1 || basis_size > max_basis) {
    std::ostringstream os;
    os << "group_fourier: basis_size " << basis_size << " outside the Hermite table range [1," << max_basis << "]";
    throw std::invalid_argument(os.str());
  }
  const RepresentationParams rp(lambda);
  // the u-box must also carry the basis functions
  const double reach = std::sqrt(2.0 * basis_size + 1.0) + 6.0;
  FourierOptions o = opt;
  const double wavelength = pi / std::sqrt(2.0 * basis_size + 1.0);
  const auto view = detail::hgrid_view(f);
  const double hx = f.spacing()[view.xa[0]];
  o.refine = std::max(opt.refine, static_cast<int>(std::ceil(rp.abs_sqrt() * hx / (wavelength / 8.0))));
  const FourierSlice S = fourier_slice(f, lambda, o, reach);
  const int n = S.n;

  std::size_t nb = 1;
  for (int a = 0; a < n; ++a) nb *= static_cast<std::size_t>(basis_size);
  // phi_alpha(u_i) tables, one per axis
  std::vector<std::vector<std::vector<double>>> tab(n);
  for (int a = 0; a < n; ++a) {
    tab[a].resize(S.u_shape[a]);
    for (std::size_t i = 0; i < S.u_shape[a]; ++i)
      tab[a][i] = hermite_functions_upto(basis_size - 1, S.u_origin[a] + S.u_spacing[a] * static_cast<double>(i));
  }
  auto phi = [&](std::size_t alpha_flat, std::size_t node) {
    double v = 1.0;
    for (int a = n - 1; a >= 0; --a) {
      const std::size_t ka = alpha_flat % static_cast<std::size_t>(basis_size);
      alpha_flat /= static_cast<std::size_t>(basis_size);
      v *= tab[a][(node / S.u_strides[a]) % S.u_shape[a]][ka];
    }
    return v;
  };
  const std::size_t N = S.u_size();
  // W[i][beta] = (G phi_beta)(u_i)
  std::vector<cplx> W(N * nb);
  for (std::size_t i = 0; i < N; ++i)
    for (auto& [k, g] : S.rows[i])
      for (std::size_t b = 0; b < nb; ++b) W[i * nb + b] += g * phi(b, k);
  ComplexMatrix M(nb, nb);
  const double du = S.u_cell();
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t a = 0; a < nb; ++a) {
      const double pa = phi(a, i);
      if (pa == 0.0) continue;
      for (std::size_t b = 0; b < nb; ++b) M(a, b) += pa * W[i * nb + b] * du;
    }
  return M;
}

// Midpoint grid +-(k+1/2) d, k = 0..count-1, sorted ascending.
inline std::vector<double> symmetric_lambda_grid(double step, std::size_t count) {
  std::vector<double> g;
  for (std::size_t k = count; k-- > 0;) g.push_back(-(static_cast<double>(k) + 0.5) * step);
  for (std::size_t k = 0; k < count; ++k) g.push_back((static_cast<double>(k) + 0.5) * step);
  return g;
}

// Cell weights: cells end halfway to the neighbour, at 0 on the inner side,
// and mirror the last gap on the outer side.
inline std::vector<double> lambda_weights(const std::vector<double>& grid) {
  std::vector<double> w(grid.size(), 0.0);
  for (int sign : {-1, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < grid.size(); ++k)
      if (grid[k] * sign > 0) idx.push_back(k);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return std::abs(grid[a]) < std::abs(grid[b]); });
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double here = std::abs(grid[idx[j]]);
      const double inner = j == 0 ? 0.0 : 0.5 * (here + std::abs(grid[idx[j - 1]]));
      double outer;
      if (j + 1 < idx.size())
        outer = 0.5 * (here + std::abs(grid[idx[j + 1]]));
      else
        outer = here + (here - inner);
      w[idx[j]] = outer - inner;
    }
  }
  return w;
}

inline double default_plancherel_constant(int n) { return std::pow(2.0 * pi, -(n + 1.0)); }

struct PlancherelResult {
  double ratio = 0.0;  // NaN when degenerate
  bool degenerate = false;
  double transform_side = 0.0;  // int ||fhat||_HS^2 dmu
  double norm_sq = 0.0;         // ||f||_2^2 on the grid
  double c_n = 0.0;
  std::vector<double> lambdas, hs_sq;  // per-lambda ||fhat(lambda)||_HS^2
};

inline void check_lambda_grid(const std::vector<double>& g) {
  if (g.empty()) throw std::invalid_argument("lambda grid is empty");
  for (double l : g)
    if (l == 0.0) throw std::invalid_argument("lambda grid must exclude 0");
}

// int ||fhat(lambda)||_B2^2 c_n |lambda|^n dlambda / ||f||^2. basis_size is
// not needed for the Hilbert-Schmidt norm (taken on the full u-grid).
inline PlancherelResult plancherel_check(const GridFunction& f, const std::vector<double>& lambda_grid, double c_n,
                                         const FourierOptions& opt = {}) {
  check_lambda_grid(lambda_grid);
  const auto view = detail::hgrid_view(f);
  PlancherelResult R;
  R.c_n = c_n;
  const double nf = f.l2_norm();
  R.norm_sq = nf * nf;
  const auto w = lambda_weights(lambda_grid);
  R.lambdas = lambda_grid;
  R.hs_sq.assign(lambda_grid.size(), 0.0);
  if (R.norm_sq == 0.0) {
    R.degenerate = true;
    R.ratio = std::numeric_limits<double>::quiet_NaN();
    return R;
  }
  parallel_for(lambda_grid.size(), [&](std::size_t k) { R.hs_sq[k] = fourier_slice(f, lambda_grid[k], opt).hs_norm_sq(); });
  KahanSum s;
  for (std::size_t k = 0; k < lambda_grid.size(); ++k)
    s.add(R.hs_sq[k] * c_n * std::pow(std::abs(lambda_grid[k]), view.n) * w[k]);
  R.transform_side = s.value();
  R.ratio = R.transform_side / R.norm_sq;
  return R;
}

// c_n that makes the Plancherel ratio exactly 1 on f.
inline double calibrate_plancherel_constant(const GridFunction& f, const std::vector<double>& lambda_grid,
                                            const FourierOptions& opt = {}) {
  const auto r = plancherel_check(f, lambda_grid, 1.0, opt);
  if (r.degenerate) throw std::invalid_argument("calibrate_plancherel_constant: zero reference function");
  return r.norm_sq / r.transform_side;
}

// I_r f(g) = int_{|lambda|<=r} tr(pi_lambda(g) fhat(lambda)) dmu(lambda), on f's own grid.
inline GridFunction band_cutoff(const GridFunction& f, const std::vector<double>& lambda_grid, double r, double c_n,
                                const FourierOptions& opt = {}) {
  if (!(r > 0.0)) throw std::invalid_argument("band_cutoff: r must be positive");
  check_lambda_grid(lambda_grid);
  const auto view = detail::hgrid_view(f);
  const int n = view.n;
  const auto w = lambda_weights(lambda_grid);
  std::vector<std::size_t> use;
  for (std::size_t k = 0; k < lambda_grid.size(); ++k)
    if (std::abs(lambda_grid[k]) <= r) use.push_back(k);

  // x- and y- flat layouts of f
  const auto P0 = detail::partial_t(f, view, 1.0);
  const std::size_t nx = P0.nx, ny = P0.ny, nt = f.shape()[view.ta];
  std::vector<std::vector<cplx>> T(use.size(), std::vector<cplx>(nx * ny));

  parallel_for(use.size(), [&](std::size_t ui) {
    const double lambda = lambda_grid[use[ui]];
    const FourierSlice S = fourier_slice(f, lambda, opt);
    const RepresentationParams rp(lambda);
    const double sl = rp.signed_sqrt(), al = rp.abs_sqrt();
    std::vector<double> u(n);
    for (std::size_t m = 0; m < nx; ++m) {
      // D(i) = G_{j(i), i} with u_j = u_i + sqrt|lambda| x_m
      std::vector<std::pair<std::size_t, cplx>> diag;
      for (std::size_t i = 0; i < S.u_size(); ++i) {
        std::size_t j = 0;
        bool ok = true;
        for (int a = 0; a < n; ++a) {
          const double pos = (S.u_coord(i, a) + al * P0.xs[m][a] - S.u_origin[a]) / S.u_spacing[a];
          const double rr = std::round(pos);
          if (std::abs(pos - rr) > 1e-6 || rr < 0 || rr > static_cast<double>(S.u_shape[a] - 1)) {
            ok = false;
            break;
          }
          j += static_cast<std::size_t>(rr) * S.u_strides[a];
        }
        if (!ok) continue;
        const cplx g = S.entry(j, i);
        if (g != cplx{}) diag.emplace_back(i, g);
      }
      for (std::size_t q = 0; q < ny; ++q) {
        cplx s{};
        for (auto& [i, g] : diag) {
          for (int a = 0; a < n; ++a) u[a] = S.u_coord(i, a);
          s += std::exp(cplx(0.0, sl * dot(P0.ys[q], u))) * g;
        }
        T[ui][m * ny + q] = std::exp(cplx(0.0, 0.5 * lambda * dot(P0.xs[m], P0.ys[q]))) * s;
      }
    }
  });

  GridFunction out = f;
  for (auto& z : out.samples()) z = 0.0;
  const std::size_t tst = f.strides()[view.ta];
  for (std::size_t ui = 0; ui < use.size(); ++ui) {
    const double lambda = lambda_grid[use[ui]];
    const double mu = c_n * std::pow(std::abs(lambda), n) * w[use[ui]];
    std::vector<cplx> et(nt);
    for (std::size_t it = 0; it < nt; ++it) et[it] = std::exp(cplx(0.0, lambda * f.coord(view.ta, it))) * mu;
    for (std::size_t k = 0; k < f.size(); k += 1) {
      if (f.index_along(k, view.ta) != 0) continue;
      // locate x and y flat indices of this fibre
      std::size_t m = 0, q = 0;
      for (int j = 0; j < n; ++j) {
        m = m * f.shape()[view.xa[j]] + f.index_along(k, view.xa[j]);
        q = q * f.shape()[view.ya[j]] + f.index_along(k, view.ya[j]);
      }
      const cplx tv = T[ui][m * ny + q];
      for (std::size_t it = 0; it < nt; ++it) out[k + it * tst] += et[it] * tv;
    }
  }
  return out;
}

}  // namespace szlab
