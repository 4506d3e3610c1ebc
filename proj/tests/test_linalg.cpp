#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "szlab/linalg.hpp"
#include "szlab/support.hpp"

using namespace szlab;
using Catch::Matchers::WithinAbs;

namespace {

ComplexMatrix random_hermitian(std::size_t n, std::uint64_t seed) {
  Rng rng(seed, 0);
  ComplexMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = rng.normal();
    for (std::size_t j = i + 1; j < n; ++j) {
      a(i, j) = cplx(rng.normal(), rng.normal());
      a(j, i) = std::conj(a(i, j));
    }
  }
  return a;
}

// det(xI - A) through Faddeev-LeVerrier coefficients
std::vector<double> char_poly(const ComplexMatrix& a) {
  const std::size_t n = a.rows();
  std::vector<cplx> c(n + 1);
  c[n] = 1.0;
  ComplexMatrix M(n, n);
  const ComplexMatrix I = ComplexMatrix::identity(n);
  for (std::size_t k = 1; k <= n; ++k) {
    ComplexMatrix cI = I;
    for (std::size_t i = 0; i < n; ++i) cI(i, i) = c[n - k + 1];
    M = a * M + cI;
    c[n - k] = -trace(a * M) / static_cast<double>(k);
  }
  std::vector<double> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) out[i] = c[i].real();
  return out;
}

double horner(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
  return v;
}

std::vector<double> bracket_roots(const std::vector<double>& c, double R) {
  std::vector<double> roots;
  const int steps = 200000;
  double x0 = -R, p0 = horner(c, x0);
  for (int s = 1; s <= steps; ++s) {
    const double x1 = -R + 2.0 * R * s / steps, p1 = horner(c, x1);
    if ((p0 < 0) != (p1 < 0)) {
      double lo = x0, hi = x1;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((horner(c, mid) < 0) == (horner(c, lo) < 0))
          lo = mid;
        else
          hi = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    p0 = p1;
  }
  return roots;
}

}  // namespace

TEST_CASE("2x2 closed form") {
  RealMatrix a{{2, 1}, {1, 2}};
  auto d = eig_self_adjoint(a);
  CHECK_THAT(d.values[0], WithinAbs(1.0, 1e-14));
  CHECK_THAT(d.values[1], WithinAbs(3.0, 1e-14));
}

TEST_CASE("identity has a flat spectrum and orthonormal vectors") {
  auto d = eig_self_adjoint(RealMatrix::identity(5));
  for (double v : d.values) CHECK_THAT(v, WithinAbs(1.0, 1e-15));
  auto g = d.vectors.adjoint() * d.vectors;
  CHECK(max_abs(g - RealMatrix::identity(5)) < 1e-12);
}

TEST_CASE("random 6x6 Hermitian matches characteristic polynomial roots") {
  const auto a = random_hermitian(6, 42);
  const auto ev = eigenvalues_self_adjoint(a);
  const auto roots = bracket_roots(char_poly(a), 4.0 * frobenius_norm(a));
  REQUIRE(roots.size() == 6);
  for (std::size_t k = 0; k < 6; ++k) CHECK_THAT(ev[k], WithinAbs(roots[k], 1e-8));
}

TEST_CASE("eigenpairs satisfy residual and orthonormality bounds") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto a = random_hermitian(30, seed);
    const auto d = eig_self_adjoint(a);
    const double na = operator_norm(a);
    for (std::size_t k = 0; k < d.values.size(); ++k) {
      const auto v = d.vector(k);
      const auto av = a.apply(v);
      double r = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) r += std::norm(av[i] - d.values[k] * v[i]);
      CHECK(std::sqrt(r) <= 1e-9 * (1.0 + std::abs(d.values[k])) * na);
    }
    CHECK(max_abs(d.vectors.adjoint() * d.vectors - ComplexMatrix::identity(30)) < 1e-9);
  }
}

TEST_CASE("non-Hermitian input is rejected") {
  RealMatrix a{{1, 2}, {0, 1}};
  CHECK_THROWS_AS(eig_self_adjoint(a), symmetry_error);
}

TEST_CASE("tridiagonal fast path agrees with the dense path") {
  const std::size_t n = 50;
  RealMatrix t(n, n);
  Rng rng(5, 0);
  for (std::size_t i = 0; i < n; ++i) {
    t(i, i) = rng.normal();
    if (i + 1 < n) t(i, i + 1) = t(i + 1, i) = rng.normal();
  }
  const auto fast = eigenvalues_self_adjoint(t);
  const auto dense = eig_self_adjoint(t).values;
  for (std::size_t k = 0; k < n; ++k) CHECK_THAT(fast[k], WithinAbs(dense[k], 1e-12));
}

TEST_CASE("a large cluster of near-zero eigenvalues converges") {
  // diagonal decaying to 1e-40 plus a rank-one bump used to stall the QL sweep
  const std::size_t n = 300;
  RealMatrix a(n, n);
  std::vector<double> u(n);
  Rng rng(9, 0);
  double nu = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = std::exp(-0.3 * static_cast<double>(i));
    u[i] = rng.normal();
    nu += u[i] * u[i];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) += u[i] * u[j] / nu;
  std::vector<double> ev;
  REQUIRE_NOTHROW(ev = eigenvalues_self_adjoint(a));
  double s = 0.0;
  for (double v : ev) s += v;
  CHECK_THAT(s, WithinAbs(trace(a), 1e-10));
}

TEST_CASE("matrix functions") {
  const auto a = random_hermitian(7, 11);
  const auto d = eig_self_adjoint(a);
  CHECK(max_abs(matrix_function(d, [](double x) { return x; }) - a) < 1e-9);

  RealMatrix swap{{0, 1}, {1, 0}};
  CHECK(max_abs(matrix_function(eig_self_adjoint(swap), [](double x) { return x * x; }) - RealMatrix::identity(2)) < 1e-12);

  RealMatrix dg = RealMatrix::diagonal({0.0, std::log(2.0)});
  auto e = matrix_function(eig_self_adjoint(dg), [](double x) { return std::exp(x); });
  CHECK_THAT(e(0, 0), WithinAbs(1.0, 1e-12));
  CHECK_THAT(e(1, 1), WithinAbs(2.0, 1e-12));
  CHECK_THAT(e(0, 1), WithinAbs(0.0, 1e-12));
}

TEST_CASE("operator norm") {
  CHECK_THAT(operator_norm(RealMatrix::diagonal({3.0, -5.0})), WithinAbs(5.0, 1e-12));

  Rng rng(3, 1);
  std::vector<double> u(6), v(6);
  double nu = 0, nv = 0;
  for (int i = 0; i < 6; ++i) {
    u[i] = rng.normal();
    v[i] = rng.normal();
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  RealMatrix r(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) r(i, j) = u[i] * v[j] / std::sqrt(nu * nv);
  CHECK_THAT(operator_norm(r), WithinAbs(1.0, 1e-10));

  RealMatrix g(8, 8);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) g(i, j) = rng.normal();
  const double top = eig_self_adjoint(symmetrize(g.adjoint() * g)).values.back();
  CHECK_THAT(operator_norm(g), WithinAbs(std::sqrt(top), 1e-7));
}

TEST_CASE("commutator and compression") {
  RealMatrix a = RealMatrix::diagonal({1, 2, 3});
  CHECK(max_abs(commutator(a, RealMatrix::identity(3))) == 0.0);
  const auto d = eig_self_adjoint(random_hermitian(5, 2));
  const auto block = eigenvector_block(d, 1, 3);
  const auto c = compress(random_hermitian(5, 2), block);
  CHECK(c.rows() == 2);
  CHECK_THAT(c(0, 0).real(), WithinAbs(d.values[1], 1e-10));
  CHECK_THAT(c(1, 1).real(), WithinAbs(d.values[2], 1e-10));
}
