#include <catch_amalgamated.hpp>

#include <cmath>

#include "szlab/toeplitz.hpp"

using namespace szlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CircleSymbol cosine(double a, double b) {
  return CircleSymbol([a, b](double t) { return a + b * std::cos(t); }, "a+bcos", a > std::abs(b), true);
}

// det of the (n+1)x(n+1) tridiagonal Toeplitz matrix with diagonal a and off-diagonals b/2
double tridiagonal_det(double a, double b, long n) {
  double d0 = 1.0, d1 = a;
  for (long k = 1; k <= n; ++k) {
    const double d2 = a * d1 - 0.25 * b * b * d0;
    d0 = d1;
    d1 = d2;
  }
  return d1;
}

}  // namespace

TEST_CASE("Fourier coefficients") {
  const auto f = cosine(2.0, 1.0);
  CHECK(fourier_coeff(f, 0) == cplx(2.0));
  CHECK(std::abs(fourier_coeff(f, 1) - 0.5) <= 1e-15);
  CHECK(std::abs(fourier_coeff(f, -1) - 0.5) <= 1e-15);
  CHECK(std::abs(fourier_coeff(f, 3)) == 0.0);

  const CircleSymbol g([](double t) { return std::exp(std::cos(t)); }, "exp cos", true, true);
  // c_k = I_k(1)
  for (long k = 0; k <= 6; ++k) CHECK_THAT(fourier_coeff(g, k).real(), WithinAbs(std::cyl_bessel_i(static_cast<double>(k), 1.0), 1e-15));
}

TEST_CASE("constant symbol") {
  const CircleSymbol c([](double) { return 3.0; }, "3", true, true);
  for (long n : {0L, 5L, 40L}) {
    for (double v : toeplitz_eigenvalues(c, n)) CHECK(v == 3.0);
    CHECK_THAT(szego_logdet(c, n), WithinAbs(std::log(3.0), 1e-15));
  }
}

TEST_CASE("tridiagonal symbol: eigenvalues and determinant") {
  const double a = 2.0, b = 1.0;
  const auto f = cosine(a, b);
  for (long n : {4L, 31L, 128L}) {
    auto ev = toeplitz_eigenvalues(f, n);
    std::vector<double> exact;
    for (long k = 1; k <= n + 1; ++k) exact.push_back(a + b * std::cos(pi * static_cast<double>(k) / static_cast<double>(n + 2)));
    std::sort(exact.begin(), exact.end());
    for (std::size_t i = 0; i < ev.size(); ++i) CHECK_THAT(ev[i], WithinAbs(exact[i], 1e-12));
    CHECK_THAT(szego_logdet(f, n), WithinRel(std::log(tridiagonal_det(a, b, n)) / static_cast<double>(n + 1), 1e-12));
  }
}

TEST_CASE("Szego limits") {
  const auto f = cosine(2.0, 1.0);
  const double limit = std::log((2.0 + std::sqrt(3.0)) / 2.0);
  CHECK_THAT(szego_logdet_limit(f), WithinAbs(limit, 1e-14));
  const auto rows = convergence_table(f, nullptr, {16, 64, 256});
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].gap < rows[i - 1].gap);
  CHECK(rows.back().gap <= 1e-2);

  const std::function<double(double)> id = [](double x) { return x; };
  for (long n : {3L, 50L}) CHECK_THAT(szego_functional(f, id, n), WithinAbs(2.0, 1e-12));
  // (1/2pi) int (2 + cos)^2 = 4 + 1/2, and the finite trace is 4 + (n/(n+1))/2
  const std::function<double(double)> sq = [](double x) { return x * x; };
  CHECK_THAT(circle_average(f, sq), WithinAbs(4.5, 1e-13));
  CHECK_THAT(szego_functional(f, sq, 9), WithinAbs(4.0 + 0.5 * 9.0 / 10.0, 1e-12));
  CHECK_THAT(szego_functional(cosine(0.0, 1.5), sq, 100), WithinAbs(1.125 * 100.0 / 101.0, 1e-12));
}

TEST_CASE("spectral inclusion") {
  const CircleSymbol g([](double t) { return 1.0 + 0.7 * std::sin(t) + 0.2 * std::cos(3 * t); }, "mixed", true, false);
  const auto [lo, hi] = g.range();
  for (double v : toeplitz_eigenvalues(g, 60)) {
    CHECK(v >= lo - 1e-9);
    CHECK(v <= hi + 1e-9);
  }
  CHECK_NOTHROW(check_spectral_inclusion(g, toeplitz_eigenvalues(g, 60)));
  CHECK_THROWS_AS(check_spectral_inclusion(g, {hi + 1.0}), std::logic_error);
}

TEST_CASE("invalid input") {
  CHECK_THROWS(CircleSymbol([](double t) { return std::cos(t); }, "cos", true));
  const CircleSymbol s([](double t) { return std::cos(t); }, "cos", false, true);
  CHECK_THROWS_AS(szego_logdet(s, 4), definiteness_error);
  const std::function<double(double)> lg = [](double x) { return std::log(x); };
  CHECK_THROWS_AS(szego_functional(s, lg, 4), std::domain_error);
  CHECK_THROWS(toeplitz_eigenvalues(s, -1));
  CHECK_THROWS(convergence_table(s, nullptr, {8, 4}));
}
