#include <catch_amalgamated.hpp>

#include <cmath>

#include "szlab/models.hpp"

using namespace szlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const std::function<double(double)> identity = [](double x) { return x; };
const std::function<double(double)> square = [](double x) { return x * x; };

}  // namespace

TEST_CASE("free lattice spectrum") {
  const int M = 20;
  const auto m = build_lattice_schrodinger(1, 0.5, M, {}, false);
  const auto fam = spectral_family(m);
  const std::size_t d = 2 * M + 1;
  std::vector<double> exact;
  for (std::size_t k = 1; k <= d; ++k) exact.push_back(2.0 + 2.0 * std::cos(pi * static_cast<double>(k) / static_cast<double>(d + 1)));
  std::sort(exact.begin(), exact.end());
  for (std::size_t i = 0; i < d; ++i) CHECK_THAT(fam.values[i], WithinAbs(exact[i], 1e-12));

  CHECK_THROWS_AS(build_lattice_schrodinger(1, 0.5, 2000), std::length_error);
  CHECK_THROWS(build_lattice_schrodinger(0, 0.5, 3));
}

TEST_CASE("lattice potential sits on the diagonal") {
  const auto m = build_lattice_schrodinger(2, 0.5, 3);
  for (std::size_t i = 0; i < m.d; ++i) {
    const double r = std::hypot(m.site(i)[0], m.site(i)[1]);
    CHECK_THAT(m.H(i, i), WithinAbs(4.0 + std::sqrt(r), 1e-15));
  }
  CHECK(operator_norm(m.A) == 0.0);
}

TEST_CASE("Heisenberg grid operator") {
  const auto m = build_heisenberg_grid(1, 0.5, 2.0, 7, [](const double* c) { return c[0]; });
  CHECK(m.d == 343);
  CHECK(max_abs(m.H - m.H.adjoint()) == 0.0);
  // H - V is a sum of F^T F, so it is positive semidefinite
  RealMatrix L = m.H;
  for (std::size_t i = 0; i < m.d; ++i) L(i, i) -= heisenberg_potential(m.site(i), 1, 0.5);
  CHECK(eigenvalues_self_adjoint(L).front() >= -1e-12);
  for (std::size_t i = 0; i < m.d; ++i) CHECK(m.A(i, i) == m.site(i)[0]);
  CHECK_THROWS(build_heisenberg_grid(1, 1.0, 2.0, 7));
  CHECK_THROWS_AS(build_heisenberg_grid(1, 0.5, 2.0, 17), std::length_error);
}

TEST_CASE("Szego ratio basics") {
  const auto m = build_lattice_schrodinger(1, 0.5, 30, [](const double* c) { return std::exp(-c[0] * c[0] / 50.0); });
  const auto fam = spectral_family(m);
  // f = identity: tr(pi A pi)/tr pi, computed directly
  for (double r : {3.0, 5.0, 7.0}) {
    const std::size_t k = fam.count(r);
    const RealMatrix V = eigenvector_block(fam.dec, 0, k);
    double tr = 0.0;
    for (std::size_t i = 0; i < m.d; ++i)
      for (std::size_t j = 0; j < k; ++j) tr += V(i, j) * V(i, j) * m.A(i, i);
    CHECK_THAT(szego_ratio(m, fam, identity, r), WithinAbs(tr / static_cast<double>(k), 1e-12));
  }
  FiniteModel c = m;
  for (std::size_t i = 0; i < c.d; ++i) c.A(i, i) = 0.7;
  CHECK_THAT(szego_ratio(c, fam, square, 5.0), WithinAbs(0.49, 1e-13));
  CHECK_THROWS_AS(szego_ratio(m, fam, identity, -100.0), std::domain_error);
}

TEST_CASE("multiplication model against a direct sum") {
  auto b = [](const double* c) { return std::max(0.0, 1.0 - c[0] * c[0] - c[1] * c[1] - c[2] * c[2]); };
  const auto m = build_multiplication(1, 0.5, 2.0, 0.25, b);
  const double r = 1.1;
  double s = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < m.d; ++i)
    if (heisenberg_potential(m.site(i), 1, 0.5) <= r) {
      s += b(m.site(i)) * b(m.site(i));
      ++k;
    }
  CHECK_THAT(szego_ratio(m, square, r), WithinAbs(s / static_cast<double>(k), 1e-12));
  const auto row = scaled_szego_ratio(1, 0.5, 2.0, 0.25, r, b, 2, 1.0);
  CHECK(row.trace == k);
  CHECK_THAT(row.scaled, WithinRel(m.cell_volume * s, 1e-12));
}

TEST_CASE("resolvent trace ratio") {
  const auto m = build_lattice_schrodinger(1, 0.5, 40);
  RealMatrix V(m.d, m.d);
  for (std::size_t i = 0; i < m.d; ++i) V(i, i) = m.H(i, i);
  const auto same = resolvent_trace_ratio(V, V, 2, {1.0, 10.0});
  for (auto& row : same) CHECK(row.ratio_minus_one == 0.0);

  const std::vector<double> rs = {1, 10, 100, 1000};
  const auto rows = resolvent_trace_ratio(V, m.H, 2, rs);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].within);
    if (i) CHECK(std::abs(rows[i].ratio_minus_one) < std::abs(rows[i - 1].ratio_minus_one));
  }
  RealMatrix W(m.d, m.d);
  for (std::size_t i = 0; i < m.d; ++i) W(i, i) = 1.0 / (1.0 + m.site(i)[0] * m.site(i)[0]);
  for (auto& row : resolvent_trace_ratio(V, m.H, 2, rs, &W)) CHECK(row.within);
  CHECK_THROWS(resolvent_trace_ratio(V, m.H, 0, rs));
}

TEST_CASE("Laptev-Safarov inequality on random pairs") {
  const auto nsq = [](double) { return 2.0; };
  int held = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const RealMatrix H = random_symmetric(12, 99, s, 5.0);
    const RealMatrix A = random_symmetric(12, 98, s, 1.0);
    const auto rep = laptev_safarov_check(H, A, square, nsq, 0.5, 0.7);
    held += rep.holds;
  }
  CHECK(held == 200);
}

TEST_CASE("Laptev-Safarov edge cases") {
  const RealMatrix H = RealMatrix::diagonal({0, 1, 2, 3, 4, 5});
  // A commuting with H: both sides of the trace identity agree
  const RealMatrix A = RealMatrix::diagonal({0.3, -0.2, 0.9, 0.1, 0.4, 0.0});
  const auto c = laptev_safarov_check(H, A, square, [](double) { return 2.0; }, 2.5, 1.0);
  CHECK(c.left <= 1e-14);
  CHECK(c.comm_norm == 0.0);
  // linear f has f'' = 0, and the identity is exact
  const RealMatrix B = random_symmetric(6, 5, 0);
  const auto l = laptev_safarov_check(H, B, identity, [](double) { return 0.0; }, 2.5, 1.0);
  CHECK(l.left <= 1e-13);
  CHECK(l.right == 0.0);
  CHECK(l.holds);
  CHECK_THROWS(laptev_safarov_check(H, B, identity, [](double) { return 0.0; }, 2.5, 0.0));
}

TEST_CASE("counting increments") {
  const std::vector<double> v = {0.0, 1.0, 1.0, 1.0, 2.0, 3.5};
  CHECK(counting_increment(v, 0.0, 10.0) == 3);
  CHECK(counting_increment(v, 1.0, 10.0) == 4);
  CHECK(counting_increment(v, 1.0, 0.5) == 4);
  CHECK(counting_increment(v, 0.2, 0.5) == 1);
  CHECK(counting_increment(v, 100.0, 0.0) == 6);

  const auto m = build_lattice_schrodinger(1, 0.5, 400);
  const auto fam = spectral_family(m);
  for (double r1 : {9.0, 16.0}) {
    const auto row = counting_increment_bound(fam, std::sqrt(r1), r1, 2.0, 0.5);
    CHECK(row.holds);
    CHECK(row.trace == fam.count(r1));
  }
}

TEST_CASE("commutator of the lattice with a Gaussian symbol") {
  // frozen at 201 sites; the value is flat in the lattice size for kappa = 1/2
  const auto rows = commutator_sweep({0.5}, {201});
  CHECK_THAT(rows[0].VA, WithinRel(0.41547932294670764, 1e-9));
  CHECK(rows[0].asymmetry <= 1e-12);

  double asym = 0.0;
  const RealMatrix A = gaussian_symbol_operator(41, &asym);
  CHECK(max_abs(A - A.adjoint()) == 0.0);
  CHECK(operator_norm(A) <= 1.0 + 1e-9);
  CHECK(operator_norm(commutator(A, RealMatrix::identity(41))) == 0.0);
  CHECK_THROWS(commutator_sweep({0.5}, {200}));
}

TEST_CASE("compact perturbations") {
  const int M = 300;
  const auto m = build_lattice_schrodinger(1, 0.5, M, [](const double* c) { return std::exp(-std::pow(c[0] / 20.0, 2)); });
  const std::vector<double> rs = {4, 6, 9, 13};
  const RealMatrix Z(m.d, m.d);
  for (auto& row : compact_perturbation_check(m, Z, 0, identity, 1.0, rs)) CHECK(row.delta == 0.0);

  std::vector<double> env(m.d);
  for (std::size_t i = 0; i < m.d; ++i) env[i] = std::exp(-std::abs(m.site(i)[0]) / 5.0);
  const RealMatrix K = random_low_rank(m.d, 3, 0.5, 12, env);
  CHECK_THAT(operator_norm(K), WithinRel(0.5, 1e-10));
  const auto id = compact_perturbation_check(m, K, 3, identity, 1.0, rs);
  for (std::size_t i = 0; i < id.size(); ++i) {
    CHECK(id[i].delta <= id[i].bound);
    if (i) CHECK(id[i].delta < id[i - 1].delta);
  }
  const auto sq = compact_perturbation_check(m, K, 3, square, 2.0 * 1.5, rs);
  for (std::size_t i = 1; i < sq.size(); ++i) CHECK(sq[i].delta < sq[i - 1].delta);
}
