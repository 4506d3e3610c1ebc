#include <catch_amalgamated.hpp>

#include <cmath>

#include "szlab/phase_volume.hpp"

using namespace szlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MonteCarloPlan plan(std::uint64_t samples, std::uint64_t seed) {
  MonteCarloPlan p;
  p.samples = samples;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("unit ball volume") {
  const double exact = pi * pi / 2.0;
  CHECK_THAT(homogeneous_ball_volume_radial(1), WithinRel(exact, 1e-8));  // midpoint rule, sqrt edge at rho = 1
  const auto e = homogeneous_ball_volume(1, 1.0, plan(2000000, 7));
  CHECK(std::abs(e.value - exact) <= 4.0 * e.error);
  CHECK(std::abs(e.value - exact) <= 0.01 * exact);

  // n = 2 against the radial reduction
  const auto e2 = homogeneous_ball_volume(2, 1.0, plan(2000000, 8));
  CHECK(std::abs(e2.value - homogeneous_ball_volume_radial(2)) <= 4.0 * e2.error);
}

TEST_CASE("ball volume scales as R^(2n+2)") {
  const auto a = homogeneous_ball_volume(1, 1.0, plan(100000, 3));
  const auto b = homogeneous_ball_volume(1, 3.0, plan(100000, 3));
  // same seed, same accepted samples: the ratio is exact up to rounding
  CHECK_THAT(b.value / a.value, WithinRel(81.0, 1e-12));
  CHECK_THAT(homogeneous_ball_volume_radial(2, 2.0) / homogeneous_ball_volume_radial(2), WithinRel(64.0, 1e-12));
}

TEST_CASE("sublevel exponent") {
  std::vector<double> r = {1, 2, 4, 8, 16};
  std::vector<Estimate> v;
  for (double x : r) v.push_back(sublevel_volume(1, 0.5, x, plan(200000, 11)));
  CHECK_THAT(fit_exponent(r, v).slope, WithinAbs(8.0, 0.02));
}

TEST_CASE("region volume: semi-analytic against direct Monte Carlo") {
  PhaseSpaceRegion reg(2, 0.5, 100.0);
  reg.lambda_cutoff = 4.0;
  auto p = plan(400000, 5);
  const auto a = region_volume(reg, p);
  const auto b = region_volume_mc(reg, p);
  CHECK(std::abs(a.volume.value - b.value) <= 4.0 * std::hypot(a.volume.error, b.error));
  CHECK(std::abs(a.volume.value - b.value) <= 0.05 * a.volume.value);
}

TEST_CASE("plain growth exponent") {
  CHECK(plain_volume_exponent(2, 0.5) == 8.5);
  CHECK(stated_volume_exponent(2, 0.5) == 9.0);
  std::vector<double> E = {1e2, 1e3, 1e4};
  std::vector<Estimate> v;
  for (double e : E) v.push_back(region_volume(PhaseSpaceRegion(2, 0.5, e), plan(1000000, 1)).volume);
  CHECK_THAT(fit_exponent(E, v).slope, WithinRel(8.5, 0.03));
}

TEST_CASE("divergent configurations") {
  CHECK_THROWS_AS(plain_volume_exponent(1, 0.5), divergence_error);
  CHECK_THROWS_AS(region_volume(PhaseSpaceRegion(1, 0.5, 100.0), plan(100000, 1)), divergence_error);
  CHECK_THROWS_AS(region_volume(PhaseSpaceRegion(2, 0.5, 100.0, WeightMode::Plancherel), plan(100000, 1)), divergence_error);
  PhaseSpaceRegion cut(2, 0.5, 100.0, WeightMode::Plancherel);
  cut.lambda_cutoff = 10.0;
  CHECK_NOTHROW(region_volume(cut, plan(100000, 1)));
  CHECK_THROWS_AS(region_volume_mc(PhaseSpaceRegion(2, 0.5, 100.0, WeightMode::Plancherel), plan(100000, 1)), divergence_error);
  PhaseSpaceRegion nofloor(2, 0.5, 100.0);
  nofloor.lambda_floor = false;
  CHECK_THROWS_AS(region_volume(nofloor, plan(100000, 1)), divergence_error);
}

TEST_CASE("determinism and plan validation") {
  const auto a = homogeneous_ball_volume(1, 1.0, plan(100000, 42));
  const auto b = homogeneous_ball_volume(1, 1.0, plan(100000, 42));
  const auto c = homogeneous_ball_volume(1, 1.0, plan(100000, 43));
  CHECK(a.value == b.value);
  CHECK(a.error == b.error);
  CHECK(a.value != c.value);
  CHECK_THROWS(homogeneous_ball_volume(1, 1.0, plan(100, 1)));
  auto bad = plan(100000, 1);
  bad.batches = 0;
  CHECK_THROWS(bad.validate());
  CHECK_THROWS(PhaseSpaceRegion(0, 0.5, 1.0));
  CHECK_THROWS(PhaseSpaceRegion(1, 0.0, 1.0));
  CHECK(PhaseSpaceRegion(1, 1.5, 10.0).warnings.size() == 1);
}

TEST_CASE("region integral of a constant is the volume") {
  PhaseSpaceRegion reg(2, 0.5, 100.0);
  reg.lambda_cutoff = 4.0;
  const auto r = region_integral(reg, [](auto&, double, auto&, auto&) { return 2.0; }, plan(100000, 9));
  CHECK_THAT(r.mean, WithinRel(2.0, 1e-14));
  CHECK_THAT(r.integral.value, WithinRel(2.0 * r.volume.volume.value, 1e-14));
}
