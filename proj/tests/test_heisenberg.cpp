#include <catch_amalgamated.hpp>

#include <cmath>

#include "szlab/heisenberg.hpp"

using namespace szlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

HeisenbergPoint random_point(Rng& rng, int n) {
  HeisenbergPoint g = HeisenbergPoint::identity(n);
  for (int j = 0; j < n; ++j) {
    g.x[j] = rng.uniform(-2.0, 2.0);
    g.y[j] = rng.uniform(-2.0, 2.0);
  }
  g.t = rng.uniform(-2.0, 2.0);
  return g;
}

double point_distance(const HeisenbergPoint& a, const HeisenbergPoint& b) {
  double d = std::abs(a.t - b.t);
  for (int j = 0; j < a.n(); ++j) d = std::max({d, std::abs(a.x[j] - b.x[j]), std::abs(a.y[j] - b.y[j])});
  return d;
}

GridFunction gaussian(double half, std::size_t count) {
  auto f = heisenberg_grid(1, half, count, half, count);
  f.fill([](const std::vector<double>& c) { return std::exp(-(c[0] * c[0] + c[1] * c[1] + c[2] * c[2])); });
  return f;
}

double interior_max(const GridFunction& f, const std::function<double(const std::vector<double>&)>& exact) {
  double worst = 0.0;
  std::vector<double> c;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (std::isnan(f[k].real())) continue;
    f.coords(k, c);
    worst = std::max(worst, std::abs(f[k] - exact(c)));
  }
  return worst;
}

}  // namespace

TEST_CASE("group law") {
  const HeisenbergPoint a({1.0}, {0.0}, 0.0), b({0.0}, {1.0}, 0.0);
  const auto ab = group_mul(a, b);
  CHECK(ab.x[0] == 1.0);
  CHECK(ab.y[0] == 1.0);
  CHECK(ab.t == 0.5);
  Rng rng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto g = random_point(rng, 2), h = random_point(rng, 2), k = random_point(rng, 2);
    CHECK(point_distance(group_mul(group_mul(g, h), k), group_mul(g, group_mul(h, k))) <= 1e-12);
    CHECK(point_distance(group_mul(g, HeisenbergPoint::identity(2)), g) == 0.0);
    CHECK(point_distance(group_mul(g, g.inverse()), HeisenbergPoint::identity(2)) == 0.0);
  }
}

TEST_CASE("homogeneous norm") {
  CHECK(homogeneous_norm(HeisenbergPoint({1.0}, {0.0}, 0.0)) == 1.0);
  CHECK_THAT(homogeneous_norm(HeisenbergPoint({0.0}, {0.0}, 4.0)), WithinAbs(2.0, 1e-15));
  Rng rng(2, 0);
  for (int i = 0; i < 100; ++i) {
    const auto g = random_point(rng, 3);
    for (double s : {2.0, 3.0, 10.0}) CHECK_THAT(homogeneous_norm(g.dilate(s)), WithinRel(s * homogeneous_norm(g), 1e-13));
  }
}

TEST_CASE("left-invariant vector fields") {
  auto f = heisenberg_grid(1, 2.0, 21, 2.0, 21);
  f.fill([](const std::vector<double>& c) { return c[0]; });
  CHECK(interior_max(vector_field(Field::X, 1, f), [](auto&) { return 1.0; }) <= 1e-12);

  f.fill([](const std::vector<double>& c) { return c[0] * c[0]; });
  CHECK(interior_max(sublaplacian(f, 1), [](auto&) { return 2.0; }) <= 1e-12);
}

TEST_CASE("[X, Y] = T on a Gaussian to second order") {
  auto err = [](std::size_t count) {
    const auto f = gaussian(3.0, count);
    const auto xy = vector_field(Field::X, 1, vector_field(Field::Y, 1, f));
    const auto yx = vector_field(Field::Y, 1, vector_field(Field::X, 1, f));
    const auto t = vector_field(Field::T, 1, f);
    double worst = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const cplx d = xy[k] - yx[k] - t[k];
      if (!std::isnan(d.real())) worst = std::max(worst, std::abs(d));
    }
    return worst;
  };
  const double e1 = err(31), e2 = err(61);
  CHECK(e2 < 0.05);
  CHECK_THAT(e1 / e2, WithinAbs(4.0, 0.8));
}

TEST_CASE("Schrodinger representation") {
  auto f = line_grid(1, 10.0, 2001);
  f.fill([](const std::vector<double>& c) { return std::exp(-0.5 * c[0] * c[0]); });
  const RepresentationParams p(1.0);

  const auto same = schrodinger_rep(p, HeisenbergPoint::identity(1), f);
  CHECK(l2_distance(same, f) <= 1e-14 * f.l2_norm());

  const auto ph = schrodinger_rep(p, HeisenbergPoint({0.0}, {0.0}, 0.7), f);
  for (std::size_t k = 0; k < f.size(); k += 97) CHECK(std::abs(ph[k] - std::exp(cplx(0.0, 0.7)) * f[k]) <= 1e-14);

  const HeisenbergPoint g1({0.3}, {-0.4}, 0.2), g2({-0.5}, {0.25}, 1.1);
  const auto lhs = schrodinger_rep(p, g1, schrodinger_rep(p, g2, f));
  const auto rhs = schrodinger_rep(p, group_mul(g1, g2), f);
  CHECK(l2_distance(lhs, rhs) <= 1e-3 * f.l2_norm());

  const RepresentationParams q(-2.0);
  const auto lq = schrodinger_rep(q, g1, schrodinger_rep(q, g2, f));
  const auto rq = schrodinger_rep(q, group_mul(g1, g2), f);
  CHECK(l2_distance(lq, rq) <= 1e-3 * f.l2_norm());

  CHECK_THROWS_AS(schrodinger_rep(p, HeisenbergPoint({9.0}, {0.0}, 0.0), f), truncation_error);
  CHECK_THROWS(RepresentationParams(0.0));
}

TEST_CASE("group Fourier transform") {
  auto z = heisenberg_grid(1, 4.0, 33, 4.0, 33);
  CHECK(max_abs(group_fourier(z, 1.0, 8)) == 0.0);
  const auto f = gaussian(5.0, 41);
  for (double lam : {1.0, -0.5}) {
    const auto F = group_fourier(f, lam, 16);
    CHECK(max_abs(F - F.adjoint()) <= 1e-10 * max_abs(F));
  }
}

TEST_CASE("Plancherel ratio") {
  auto z = heisenberg_grid(1, 4.0, 9, 4.0, 9);
  const auto r0 = plancherel_check(z, symmetric_lambda_grid(0.5, 8), default_plancherel_constant(1));
  CHECK(r0.degenerate);
  CHECK(std::isnan(r0.ratio));

  // h halves and dlambda halves together
  std::vector<double> errs;
  const double hs[] = {1.0, 0.5, 0.25};
  for (int l = 0; l < 3; ++l) {
    const auto count = static_cast<std::size_t>(std::llround(12.0 / hs[l])) + 1;
    const auto r = plancherel_check(gaussian(6.0, count), symmetric_lambda_grid(0.5 * hs[l], static_cast<std::size_t>(16 / hs[l])),
                                    default_plancherel_constant(1));
    errs.push_back(std::abs(r.ratio - 1.0));
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
  CHECK(errs[2] <= 0.02);
}

TEST_CASE("calibrated constant agrees with (2 pi)^-(n+1)") {
  const auto f = gaussian(5.0, 41);
  CHECK_THAT(calibrate_plancherel_constant(f, symmetric_lambda_grid(0.125, 64)), WithinRel(1.0 / (4.0 * M_PI * M_PI), 1e-5));
}

TEST_CASE("band cutoff inversion") {
  const auto f = gaussian(5.0, 41);
  const auto lg = symmetric_lambda_grid(0.125, 64);
  const double c = default_plancherel_constant(1);
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {1.0, 2.0, 4.0, 9.0}) {
    const double e = l2_distance(f, band_cutoff(f, lg, r, c)) / f.l2_norm();
    CHECK(e < prev);
    prev = e;
  }
  CHECK(prev <= 0.05);
  auto z = heisenberg_grid(1, 5.0, 41, 5.0, 41);
  CHECK(band_cutoff(z, lg, 9.0, c).max_abs() == 0.0);
  CHECK_THROWS(band_cutoff(f, lg, 0.0, c));
  CHECK_THROWS(band_cutoff(f, {0.0, 1.0}, 1.0, c));
}
