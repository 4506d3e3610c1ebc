#pragma once

// Finite models: multiplication operators on H^n grids, lattice Schrodinger
// operators, the grid sublaplacian plus potential, and the trace experiments
// run on them (Szego ratios, resolvent traces, Laptev-Safarov, commutator
// sweeps, compact perturbations).

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "heisenberg.hpp"
#include "linalg.hpp"
#include "support.hpp"
#include "weyl_moyal.hpp"

namespace szlab {

inline constexpr std::size_t max_dense_sites = 4000;

enum class ModelKind { Multiplication, LatticeSchrodinger, HeisenbergGrid };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Multiplication: return "multiplication";
    case ModelKind::LatticeSchrodinger: return "lattice_schrodinger";
    case ModelKind::HeisenbergGrid: return "heisenberg_grid";
  }
  return "?";
}

struct FiniteModel {
  ModelKind kind = ModelKind::Multiplication;
  int n = 1;            // H^n dimension, or lattice dimension for the lattice kind
  double kappa = 0.5;
  std::size_t d = 0;    // number of sites
  int dim = 0;          // coordinates per site
  double cell_volume = 1.0;
  bool diagonal = false;           // H and A stored as diagonals
  std::vector<double> H_diag, A_diag;
  RealMatrix H, A;
  std::vector<double> coords;      // d * dim, row per site

  const double* site(std::size_t i) const { return &coords[i * dim]; }
  RealMatrix H_dense() const { return diagonal ? RealMatrix::diagonal(H_diag) : H; }
  RealMatrix A_dense() const { return diagonal ? RealMatrix::diagonal(A_diag) : A; }
};

using SiteFunction = std::function<double(const double*)>;

// V(g) = |g|^kappa on an H^n site (x1..xn, y1..yn, t)
inline double heisenberg_potential(const double* c, int n, double kappa) {
  double r2 = 0.0;
  for (int j = 0; j < 2 * n; ++j) r2 += c[j] * c[j];
  return std::pow(r2 * r2 + c[2 * n] * c[2 * n], 0.25 * kappa);
}

namespace detail {

inline std::size_t grid_sites(std::size_t per_axis, int axes) {
  std::size_t d = 1;
  for (int a = 0; a < axes; ++a) d *= per_axis;
  return d;
}

inline void fill_grid_coords(FiniteModel& m, std::size_t per_axis, double lo, double h) {
  m.coords.resize(m.d * m.dim);
  for (std::size_t i = 0; i < m.d; ++i) {
    std::size_t rest = i;
    for (int a = m.dim - 1; a >= 0; --a) {
      m.coords[i * m.dim + a] = lo + h * static_cast<double>(rest % per_axis);
      rest /= per_axis;
    }
  }
}

inline void guard_dense(std::size_t d) {
  if (d > max_dense_sites) {
    std::ostringstream os;
    os << "model needs a dense " << d << "x" << d << " matrix; limit is " << max_dense_sites << " sites";
    throw std::length_error(os.str());
  }
}

}  // namespace detail

// H = M_V, A = M_b on the H^n grid [-L, L]^{2n+1} with spacing h. Stored as
// diagonals, so the dense site limit does not apply.
inline FiniteModel build_multiplication(int n, double kappa, double L, double h, const SiteFunction& b) {
  if (n < 1 || !(kappa > 0.0) || !(L > 0.0) || !(h > 0.0)) throw std::invalid_argument("build_multiplication: bad params");
  FiniteModel m;
  m.kind = ModelKind::Multiplication;
  m.n = n;
  m.kappa = kappa;
  m.dim = 2 * n + 1;
  m.diagonal = true;
  const std::size_t per = static_cast<std::size_t>(std::llround(2.0 * L / h)) + 1;
  m.d = detail::grid_sites(per, m.dim);
  if (m.d > 50'000'000) throw std::length_error("build_multiplication: more than 5e7 sites");
  m.cell_volume = std::pow(h, m.dim);
  detail::fill_grid_coords(m, per, -L, h);
  m.H_diag.resize(m.d);
  m.A_diag.resize(m.d);
  for (std::size_t i = 0; i < m.d; ++i) {
    m.H_diag[i] = heisenberg_potential(m.site(i), n, kappa);
    m.A_diag[i] = b ? b(m.site(i)) : 0.0;
  }
  return m;
}

// (Delta u)(k) = sum_{|k-j|=1} u(j) + 2 dim u(k) on {-M..M}^dim, plus V(k) = |k|^kappa.
// A is M_b unless replaced by the caller.
// with_potential = false drops |k|^kappa and leaves the bare lattice Laplacian
inline FiniteModel build_lattice_schrodinger(int dim, double kappa, int M, const SiteFunction& b = {}, bool with_potential = true) {
  if (dim < 1 || M < 0) throw std::invalid_argument("build_lattice_schrodinger: bad params");
  FiniteModel m;
  m.kind = ModelKind::LatticeSchrodinger;
  m.n = dim;
  m.kappa = kappa;
  m.dim = dim;
  const std::size_t per = static_cast<std::size_t>(2 * M + 1);
  m.d = detail::grid_sites(per, dim);
  detail::guard_dense(m.d);
  detail::fill_grid_coords(m, per, -M, 1.0);
  m.H = RealMatrix(m.d, m.d);
  m.A = RealMatrix(m.d, m.d);
  std::vector<std::size_t> stride(dim, 1);
  for (int a = dim - 1; a > 0; --a) stride[a - 1] = stride[a] * per;
  for (std::size_t i = 0; i < m.d; ++i) {
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) r2 += m.site(i)[a] * m.site(i)[a];
    m.H(i, i) = 2.0 * dim + (with_potential ? std::pow(std::sqrt(r2), kappa) : 0.0);
    for (int a = 0; a < dim; ++a) {
      const std::size_t ia = (i / stride[a]) % per;
      if (ia + 1 < per) {
        m.H(i, i + stride[a]) = 1.0;
        m.H(i + stride[a], i) = 1.0;
      }
    }
    if (b) m.A(i, i) = b(m.site(i));
  }
  return m;
}

// H = -sum_j (X_j^2 + Y_j^2) + V with central-difference fields and zero
// Dirichlet data, on [-L, L]^{2n+1} with `per_axis` nodes per axis.
inline FiniteModel build_heisenberg_grid(int n, double kappa, double L, std::size_t per_axis, const SiteFunction& b = {}) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("build_heisenberg_grid: kappa must lie in (0,1)");
  if (n < 1 || per_axis < 3 || !(L > 0.0)) throw std::invalid_argument("build_heisenberg_grid: bad params");
  FiniteModel m;
  m.kind = ModelKind::HeisenbergGrid;
  m.n = n;
  m.kappa = kappa;
  m.dim = 2 * n + 1;
  m.d = detail::grid_sites(per_axis, m.dim);
  detail::guard_dense(m.d);
  const double h = 2.0 * L / static_cast<double>(per_axis - 1);
  m.cell_volume = std::pow(h, m.dim);
  detail::fill_grid_coords(m, per_axis, -L, h);
  std::vector<std::size_t> stride(m.dim, 1);
  for (int a = m.dim - 1; a > 0; --a) stride[a - 1] = stride[a] * per_axis;
  const std::size_t ta = 2 * n;
  // sparse rows of X_j / Y_j: (column, weight)
  using Row = std::vector<std::pair<std::size_t, double>>;
  auto field_rows = [&](int j, bool isX) {
    std::vector<Row> rows(m.d);
    const std::size_t own = isX ? j : n + j, other = isX ? n + j : j;
    const double sign = isX ? -0.5 : 0.5;
    for (std::size_t i = 0; i < m.d; ++i) {
      auto add = [&](std::size_t axis, double w) {
        const std::size_t ia = (i / stride[axis]) % per_axis;
        if (ia + 1 < per_axis) rows[i].emplace_back(i + stride[axis], w / (2.0 * h));
        if (ia > 0) rows[i].emplace_back(i - stride[axis], -w / (2.0 * h));
      };
      add(own, 1.0);
      add(ta, sign * m.site(i)[other]);
    }
    return rows;
  };
  m.H = RealMatrix(m.d, m.d);
  for (int j = 0; j < n; ++j)
    for (bool isX : {true, false}) {
      const auto F = field_rows(j, isX);
      // -F^2 = F^T F since F is antisymmetric
      for (std::size_t i = 0; i < m.d; ++i)
        for (auto& [k, w] : F[i])
          for (auto& [l, w2] : F[k]) m.H(i, l) -= w * w2;
    }
  m.A = RealMatrix(m.d, m.d);
  for (std::size_t i = 0; i < m.d; ++i) {
    m.H(i, i) += heisenberg_potential(m.site(i), n, kappa);
    if (b) m.A(i, i) = b(m.site(i));
  }
  m.H = symmetrize(m.H);
  return m;
}

// ------------------------------------------------------------ projections

// Eigen-data of H with eigenvectors as columns; diagonal models keep a permutation.
struct SpectralProjectionFamily {
  std::vector<double> values;  // ascending
  bool diagonal = false;
  std::vector<std::size_t> order;  // diagonal: site index of the k-th eigenvalue
  SpectralDecomposition<double> dec;

  // eigenvalues <= r; machine-equal eigenvalues fall on the same side
  std::size_t count(double r) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(r));
    return static_cast<std::size_t>(std::upper_bound(values.begin(), values.end(), r + tol) - values.begin());
  }
};

inline SpectralProjectionFamily spectral_family(const FiniteModel& m) {
  SpectralProjectionFamily fam;
  fam.diagonal = m.diagonal;
  if (m.diagonal) {
    fam.order.resize(m.d);
    std::iota(fam.order.begin(), fam.order.end(), std::size_t{0});
    std::stable_sort(fam.order.begin(), fam.order.end(), [&](std::size_t a, std::size_t b) { return m.H_diag[a] < m.H_diag[b]; });
    fam.values.resize(m.d);
    for (std::size_t k = 0; k < m.d; ++k) fam.values[k] = m.H_diag[fam.order[k]];
  } else {
    fam.dec = eig_self_adjoint(m.H);
    fam.values = fam.dec.values;
  }
  return fam;
}

// Threshold halfway between the eigenvalue closest below r and the next one above.
inline double midpoint_threshold(const std::vector<double>& values, double r) {
  const auto it = std::upper_bound(values.begin(), values.end(), r);
  if (it == values.begin()) return 0.5 * (values.front() + r) - 1.0;
  if (it == values.end()) return values.back() + 1.0;
  return 0.5 * (*(it - 1) + *it);
}

// V^T A V for the first k eigenvectors.
inline RealMatrix compressed_block(const FiniteModel& m, const SpectralProjectionFamily& fam, std::size_t k) {
  if (m.diagonal) {
    RealMatrix B(k, k);
    for (std::size_t i = 0; i < k; ++i) B(i, i) = m.A_diag[fam.order[i]];
    return B;
  }
  const RealMatrix V = eigenvector_block(fam.dec, 0, k);
  return compress(m.A, V);
}

// tr f(pi_r A pi_r | ran pi_r) / tr pi_r
inline double szego_ratio(const FiniteModel& m, const SpectralProjectionFamily& fam, const std::function<double(double)>& f, double r) {
  const std::size_t k = fam.count(r);
  if (k == 0) throw std::domain_error("szego_ratio: empty projection at r");
  KahanSum s;
  if (m.diagonal) {
    for (std::size_t i = 0; i < k; ++i) s.add(f(m.A_diag[fam.order[i]]));
  } else {
    const auto ev = eigenvalues_self_adjoint(compressed_block(m, fam, k));
    for (double v : ev) s.add(f(v));
  }
  return s.value() / static_cast<double>(k);
}

inline double szego_ratio(const FiniteModel& m, const std::function<double(double)>& f, double r) {
  return szego_ratio(m, spectral_family(m), f, r);
}

// ------------------------------------------------------------ lattice analogue of the integral identity

struct ScaledRatioRow {
  double h, r;
  std::size_t trace;
  double ratio, scaled, target, rel_error;
};

// h^dim tr(pi_r) * ratio for f(x) = x^power, against the integral of b^power.
inline ScaledRatioRow scaled_szego_ratio(int n, double kappa, double L, double h, double r, const SiteFunction& b,
                                         int power, double target) {
  const FiniteModel m = build_multiplication(n, kappa, L, h, b);
  KahanSum s;
  std::size_t k = 0;
  const double tol = 1e-12 * std::max(1.0, r);
  for (std::size_t i = 0; i < m.d; ++i)
    if (m.H_diag[i] <= r + tol) {
      s.add(std::pow(m.A_diag[i], power));
      ++k;
    }
  if (k == 0) throw std::domain_error("scaled_szego_ratio: empty projection");
  ScaledRatioRow row;
  row.h = h;
  row.r = r;
  row.trace = k;
  row.ratio = s.value() / static_cast<double>(k);
  row.scaled = m.cell_volume * static_cast<double>(k) * row.ratio;
  row.target = target;
  row.rel_error = std::abs(row.scaled - target) / std::abs(target);
  return row;
}

// ------------------------------------------------------------ resolvent traces

struct ResolventRow {
  double r, ratio_minus_one, bound;
  bool within;
};

// tr(W (H + r)^{-m}) / tr(W (V + r)^{-m}) - 1 against m ||B|| ||(V + r)^{-1}||, B = H - V.
// Pass an empty W for the unweighted traces.
inline std::vector<ResolventRow> resolvent_trace_ratio(const RealMatrix& V, const RealMatrix& H, int m,
                                                       const std::vector<double>& r_values, const RealMatrix* W = nullptr) {
  if (V.rows() != H.rows()) throw std::invalid_argument("resolvent_trace_ratio: site sets differ");
  if (m < 1) throw std::invalid_argument("resolvent_trace_ratio: m must be >= 1");
  const auto dv = eig_self_adjoint(V);
  const auto dh = eig_self_adjoint(H);
  const double Bn = operator_norm(H - V);
  std::vector<ResolventRow> rows;
  for (double r : r_values) {
    auto weighted_trace = [&](const SpectralDecomposition<double>& dec) {
      const double lo = dec.values.front() + r;
      if (!(lo > 0.0)) throw std::domain_error("resolvent_trace_ratio: shift leaves the spectrum non-positive");
      KahanSum s;
      for (std::size_t k = 0; k < dec.values.size(); ++k) {
        double w = 1.0;
        if (W) {
          // <v_k, W v_k>
          const auto v = dec.vector(k);
          const auto Wv = W->apply(v);
          w = std::inner_product(v.begin(), v.end(), Wv.begin(), 0.0);
        }
        s.add(w * std::pow(dec.values[k] + r, -m));
      }
      return s.value();
    };
    const double ratio = weighted_trace(dh) / weighted_trace(dv);
    const double bound = m * Bn / (dv.values.front() + r);
    rows.push_back({r, ratio - 1.0, bound, std::abs(ratio - 1.0) <= bound});
  }
  return rows;
}

// Symmetric matrix with independent N(0,1) upper entries, scaled to operator norm `norm`.
inline RealMatrix random_symmetric(std::size_t d, std::uint64_t seed, std::uint64_t stream, double norm = 1.0) {
  Rng rng(seed, stream);
  RealMatrix B(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      const double v = rng.normal();
      B(i, j) = v;
      B(j, i) = v;
    }
  const double s = operator_norm(B);
  return s > 0.0 ? (norm / s) * B : B;
}

// ------------------------------------------------------------ Laptev-Safarov

// max over mu <= r1 of #{eigenvalues in [mu, mu + r]}; the window is closed, so r = 0
// gives the largest multiplicity.
inline std::size_t counting_increment(const std::vector<double>& values, double r, double r1) {
  std::size_t best = 0;
  auto window = [&](double mu) {
    const double tol = 1e-12 * std::max(1.0, std::abs(mu) + r);
    const auto lo = std::lower_bound(values.begin(), values.end(), mu - tol);
    const auto hi = std::upper_bound(values.begin(), values.end(), mu + r + tol);
    return static_cast<std::size_t>(hi - lo);
  };
  for (double v : values) {
    if (v > r1) break;
    best = std::max(best, window(v));
  }
  return std::max(best, window(r1));
}

struct LaptevSafarovReport {
  double left = 0.0, right = 0.0;
  std::size_t N = 0;
  double fpp_sup = 0.0, piA_norm = 0.0, comm_norm = 0.0;
  bool holds = false;
};

// left  = |tr(pi f(A) pi) - tr f(pi A pi |ran pi)|, pi = pi_{r1}(H)
// right = (1/2) sup|f''| N_r(r1) (||pi A||^2 + pi^2/(6 r^2) ||pi_{r1-r} [A, H]||^2)
inline LaptevSafarovReport laptev_safarov_check(const RealMatrix& H, const RealMatrix& A, const std::function<double(double)>& f,
                                                const std::function<double(double)>& fpp, double r1, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("laptev_safarov_check: need r > 0");
  LaptevSafarovReport rep;
  const auto dh = eig_self_adjoint(H);
  const auto da = eig_self_adjoint(A);
  const double lo = da.values.front(), hi = da.values.back();
  for (int i = 0; i <= 1000; ++i) {
    const double x = lo + (hi - lo) * i / 1000.0;
    const double v = fpp(x);
    if (!std::isfinite(v)) throw std::domain_error("laptev_safarov_check: f'' unbounded on the spectral hull");
    rep.fpp_sup = std::max(rep.fpp_sup, std::abs(v));
  }
  auto count_le = [&](double s) {
    return static_cast<std::size_t>(std::upper_bound(dh.values.begin(), dh.values.end(), s + 1e-12 * std::max(1.0, std::abs(s))) -
                                    dh.values.begin());
  };
  const std::size_t k = count_le(r1);
  const RealMatrix P = eigenvector_block(dh, 0, k);  // d x k
  const RealMatrix fA = matrix_function(da, f);
  const RealMatrix block = compress(A, P);
  const auto dblock = eig_self_adjoint(block);
  KahanSum tl, tr;
  for (std::size_t i = 0; i < k; ++i) {
    double s = 0.0;
    for (std::size_t a = 0; a < H.rows(); ++a)
      for (std::size_t b = 0; b < H.rows(); ++b) s += P(a, i) * fA(a, b) * P(b, i);
    tl.add(s);
    tr.add(f(dblock.values[i]));
  }
  rep.left = std::abs(tl.value() - tr.value());
  rep.N = counting_increment(dh.values, r, r1);
  // ||pi A|| = ||P^T A||
  rep.piA_norm = k ? operator_norm(P.adjoint() * A) : 0.0;
  const std::size_t k2 = count_le(r1 - r);
  const RealMatrix P2 = eigenvector_block(dh, 0, k2);
  rep.comm_norm = k2 ? operator_norm(P2.adjoint() * commutator(A, H)) : 0.0;
  rep.right = 0.5 * rep.fpp_sup * static_cast<double>(rep.N) *
              (rep.piA_norm * rep.piA_norm + pi * pi / (6.0 * r * r) * rep.comm_norm * rep.comm_norm);
  // trace roundoff of the two sides
  const double slack = 1e-10 * (1.0 + std::abs(tl.value()));
  rep.holds = rep.left <= rep.right + slack;
  return rep;
}

struct CountingRow {
  double r1, r;
  std::size_t N, trace;
  double bound, ratio;  // bound = trace (gamma r / r1 + slack); ratio = N / trace
  bool holds;
};

inline CountingRow counting_increment_bound(const SpectralProjectionFamily& fam, double r, double r1, double growth_exponent,
                                            double slack) {
  CountingRow row;
  row.r1 = r1;
  row.r = r;
  row.N = counting_increment(fam.values, r, r1);
  row.trace = fam.count(r1);
  row.bound = static_cast<double>(row.trace) * (growth_exponent * r / r1 + slack);
  row.ratio = row.trace ? static_cast<double>(row.N) / static_cast<double>(row.trace) : 0.0;
  row.holds = static_cast<double>(row.N) <= row.bound;
  return row;
}

// ------------------------------------------------------------ commutators

// Symmetrized Weyl quantization of exp(-xi^2) on the unit-spacing 1-D lattice of `size` sites.
inline RealMatrix gaussian_symbol_operator(std::size_t size, double* asymmetry = nullptr) {
  const double half = 0.5 * static_cast<double>(size - 1);
  const GridFunction grid = line_grid(1, half, size);
  // the xi trapezoid is periodic in u - v with period xi_count - 1, which has to exceed the lattice
  const SampledSymbol a = phase_symbol(1, pi, 2 * size + 1, half, 2 * size - 1,
                                       [](const std::vector<double>& xi, const std::vector<double>&) { return cplx(std::exp(-xi[0] * xi[0])); });
  const ComplexMatrix K = weyl_matrix(a, grid);
  RealMatrix R(size, size);
  double asym = 0.0;
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = 0; j < size; ++j) {
      asym = std::max(asym, std::abs(K(i, j) - std::conj(K(j, i))));
      R(i, j) = 0.5 * (K(i, j) + std::conj(K(j, i))).real();
    }
  if (asymmetry) *asymmetry = asym;
  return R;
}

struct CommutatorRow {
  double kappa;
  std::size_t size;
  double VA, HA, asymmetry;
};

inline std::vector<CommutatorRow> commutator_sweep(const std::vector<double>& kappas, const std::vector<std::size_t>& sizes) {
  for (std::size_t size : sizes)
    if (size % 2 == 0) throw std::invalid_argument("commutator_sweep: sizes must be odd (sites -M..M)");
  // A depends only on the size; build it once per size
  std::vector<RealMatrix> As(sizes.size());
  std::vector<double> asyms(sizes.size());
  parallel_for(sizes.size(), [&](std::size_t s) { As[s] = gaussian_symbol_operator(sizes[s], &asyms[s]); });
  std::vector<CommutatorRow> rows(kappas.size() * sizes.size());
  parallel_for(rows.size(), [&](std::size_t idx) {
    const double kappa = kappas[idx / sizes.size()];
    const std::size_t s = idx % sizes.size(), size = sizes[s];
    const FiniteModel m = build_lattice_schrodinger(1, kappa, static_cast<int>(size / 2));
    RealMatrix V(size, size);
    for (std::size_t i = 0; i < size; ++i) V(i, i) = std::pow(std::abs(m.site(i)[0]), kappa);
    rows[idx] = {kappa, size, operator_norm(commutator(V, As[s])), operator_norm(commutator(m.H, As[s])), asyms[s]};
  });
  return rows;
}

// ------------------------------------------------------------ compact perturbations

// K = sum_k s_k v_k v_k^T with orthonormal random v_k and |s_k| <= norm, max |s_k| = norm.
// An optional envelope (one weight per site) localizes the random vectors.
inline RealMatrix random_low_rank(std::size_t d, std::size_t rank, double norm, std::uint64_t seed,
                                 const std::vector<double>& envelope = {}) {
  if (!envelope.empty() && envelope.size() != d) throw std::invalid_argument("random_low_rank: envelope size != d");
  Rng rng(seed, 77);
  std::vector<std::vector<double>> vs;
  for (std::size_t k = 0; k < rank; ++k) {
    std::vector<double> v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = rng.normal() * (envelope.empty() ? 1.0 : envelope[i]);
    for (auto& w : vs) {
      const double p = std::inner_product(v.begin(), v.end(), w.begin(), 0.0);
      for (std::size_t i = 0; i < d; ++i) v[i] -= p * w[i];
    }
    const double nv = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (auto& x : v) x /= nv;
    vs.push_back(v);
  }
  RealMatrix K(d, d);
  for (std::size_t k = 0; k < rank; ++k) {
    const double s = k == 0 ? norm : norm * rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) K(i, j) += s * vs[k][i] * vs[k][j];
  }
  return K;
}

struct PerturbationRow {
  double r;
  std::size_t trace;
  double delta, bound;
};

// |ratio(A + K) - ratio(A)| per r, with bound rank ||K|| Lip(f) / tr pi_r.
inline std::vector<PerturbationRow> compact_perturbation_check(const FiniteModel& m, const RealMatrix& K, std::size_t rank,
                                                               const std::function<double(double)>& f, double lip,
                                                               const std::vector<double>& r_values) {
  if (m.diagonal) throw std::invalid_argument("compact_perturbation_check: needs a dense model");
  const auto fam = spectral_family(m);
  FiniteModel mk = m;
  mk.A = m.A + K;
  const double Kn = operator_norm(K);
  std::vector<PerturbationRow> rows(r_values.size());
  parallel_for(r_values.size(), [&](std::size_t i) {
    const double r = r_values[i];
    const std::size_t k = fam.count(r);
    const double d = std::abs(szego_ratio(mk, fam, f, r) - szego_ratio(m, fam, f, r));
    rows[i] = {r, k, d, static_cast<double>(rank) * Kn * lip / static_cast<double>(k)};
  });
  return rows;
}

}  // namespace szlab
