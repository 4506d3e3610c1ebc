// One PASS/FAIL line per acceptance criterion. Each check computes its
// reference value independently of the code path under test where one exists.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/zeta.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "szlab/cli.hpp"
#include "szlab/hermite.hpp"
#include "szlab/heisenberg.hpp"
#include "szlab/models.hpp"
#include "szlab/phase_volume.hpp"
#include "szlab/tauberian.hpp"
#include "szlab/toeplitz.hpp"
#include "szlab/weyl_moyal.hpp"

using namespace szlab;

namespace {

int failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

void verdict(int id, bool ok, const std::string& what, const std::string& detail, double secs) {
  if (!ok) ++failures;
  std::printf("%s [%d] %s: %s (%.2f s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str(), secs);
  std::fflush(stdout);
}

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// (1/2pi) int_0^{2pi} h(theta) dtheta by adaptive Gauss-Kronrod
double circle_mean(const std::function<double(double)>& h) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(h, 0.0, 2.0 * pi, 15, 1e-14) / (2.0 * pi);
}

bool decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

void criterion1() {
  Timer t;
  const CircleSymbol f([](double th) { return 2.0 + std::cos(th); }, "2+cos", true, true);
  const double v = szego_logdet(f, 100);
  const double secs = t.seconds();
  const double oracle = circle_mean([](double th) { return std::log(2.0 + std::cos(th)); });
  const double closed = std::log((2.0 + std::sqrt(3.0)) / 2.0);
  const double gap = std::abs(v - oracle);
  verdict(1, gap <= 5e-3 && std::abs(oracle - closed) <= 1e-12 && secs < 5.0, "Szego log-det, f = 2+cos, n = 100",
          "gap " + g(gap) + " to quadrature limit " + g(oracle), secs);
}

void criterion2() {
  Timer t;
  const CircleSymbol f([](double th) { return 1.0 + 0.5 * std::cos(th); }, "1+cos/2", true, true);
  const double v = szego_functional(f, [](double x) { return x * x; }, 200);
  const double oracle = circle_mean([](double th) { return std::pow(1.0 + 0.5 * std::cos(th), 2); });
  const double c0 = circle_mean([](double th) { return 1.0 + 0.5 * std::cos(th); });
  double worst = 0.0;
  for (long n : {0L, 1L, 7L, 50L, 200L}) worst = std::max(worst, std::abs(szego_functional(f, [](double x) { return x; }, n) - c0));
  verdict(2, std::abs(v - oracle) <= 1e-2 && std::abs(oracle - 1.125) <= 1e-12 && worst <= 1e-12, "F = x^2 functional, f = 1+cos/2, n = 200",
          "value " + g(v) + " vs " + g(oracle) + "; F = identity off c0 by " + g(worst), t.seconds());
}

void criterion3() {
  Timer t;
  const auto s = rescaled_trace(1, 1.0, 1);
  const double secs = t.seconds();
  const double exact = pi * pi / 24.0;
  // sum_{k>=0} (2k+2)^{-2} = zeta(2)/4
  const double zeta = boost::math::zeta(2.0) / 4.0;
  const double err = std::abs(s.value - exact);
  verdict(3, err <= 1e-9 && s.tail_bound <= 1e-9 && std::abs(zeta - exact) <= 1e-15 && secs < 1.0, "Hermite trace, n = 1, lambda = 1, N = 1",
          "error " + g(err) + ", tail bound " + g(s.tail_bound), secs);
}

void criterion4() {
  Timer t;
  const auto xi = phase_symbol(1, 4.0, 41, 4.0, 41, [](auto& x, auto&) { return cplx(x[0]); });
  const auto u = phase_symbol(1, 4.0, 41, 4.0, 41, [](auto&, auto& v) { return cplx(v[0]); });
  const auto a = moyal_star(xi, u), b = moyal_star(u, xi);
  double worst = 0.0;
  std::size_t nodes = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const cplx d = a[k] - b[k];
    if (std::isnan(d.real())) continue;
    ++nodes;
    worst = std::max(worst, std::abs(d - cplx(0.0, 1.0)));
  }
  verdict(4, nodes > 0 && worst <= 1e-10, "xi#u - u#xi = i", g(static_cast<double>(nodes)) + " interior nodes, max error " + g(worst), t.seconds());
}

void criterion5() {
  Timer t;
  const auto a = bump_symbol(1, 3.0, 241, 0.8, 0.8);
  const auto rows = remainder_decay(a, {10.0, 100.0, 1000.0}, 1.0, 0.0);
  double lo = rows[0].r_sup, hi = lo;
  std::string cols;
  for (auto& r : rows) {
    lo = std::min(lo, r.r_sup);
    hi = std::max(hi, r.r_sup);
    cols += (cols.empty() ? "" : ", ") + g(r.r_sup);
  }
  verdict(5, lo > 0.0 && hi / lo <= 3.0, "r sup|a#b_r - b_r a| within a factor 3", "r*sup = " + cols + " (spread " + g(hi / lo) + ")", t.seconds());
}

void criterion6() {
  Timer t;
  const double hs[] = {1.0, 0.5, 0.25}, dls[] = {0.5, 0.25, 0.125};
  std::vector<double> errs;
  double last = 0.0, norm_err = 0.0;
  // ||exp(-|g|^2)||^2 over R^3
  const double exact_norm = std::pow(pi / 2.0, 1.5);
  for (int l = 0; l < 3; ++l) {
    const auto count = static_cast<std::size_t>(std::llround(12.0 / hs[l])) + 1;
    auto f = heisenberg_grid(1, 6.0, count, 6.0, count);
    f.fill([](const std::vector<double>& c) { return std::exp(-(c[0] * c[0] + c[1] * c[1] + c[2] * c[2])); });
    const auto r = plancherel_check(f, symmetric_lambda_grid(dls[l], static_cast<std::size_t>(std::llround(8.0 / dls[l]))),
                                    default_plancherel_constant(1));
    last = r.transform_side / exact_norm;
    norm_err = std::abs(r.norm_sq - exact_norm) / exact_norm;
    errs.push_back(std::abs(last - 1.0));
  }
  const double secs = t.seconds();
  verdict(6, std::abs(last - 1.0) <= 0.02 && decreasing(errs) && secs < 60.0, "Plancherel, n = 1 Gaussian",
          "ratio errors " + g(errs[0]) + ", " + g(errs[1]) + ", " + g(errs[2]) + "; grid norm off by " + g(norm_err), secs);
}

void criterion7() {
  Timer t;
  MonteCarloPlan plan;
  plan.samples = 10000000;
  plan.seed = 20240601;
  const auto e = homogeneous_ball_volume(1, 1.0, plan);
  // radial reduction int_0^1 2 pi rho 2 sqrt(1 - rho^4) drho by quadrature
  const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double rho) { return 4.0 * pi * rho * std::sqrt(std::max(0.0, 1.0 - std::pow(rho, 4))); }, 0.0, 1.0, 15, 1e-12);
  const double rel = std::abs(e.value - oracle) / oracle;
  std::vector<double> r = {1, 2, 4, 8, 16};
  std::vector<Estimate> v;
  MonteCarloPlan sub;
  sub.samples = 1000000;
  sub.seed = plan.seed;
  sub.stream = 1;
  for (double x : r) v.push_back(sublevel_volume(1, 0.5, x, sub));
  const double slope = fit_exponent(r, v).slope;
  verdict(7, rel <= 0.01 && std::abs(oracle - pi * pi / 2.0) <= 1e-9 && std::abs(slope - 8.0) <= 0.02 * 8.0,
          "homogeneous ball volume and sublevel exponent", "volume " + g(e.value) + " vs " + g(oracle) + ", exponent " + g(slope), t.seconds());
}

void criterion8() {
  Timer t;
  // derived before the build: (n+1)/kappa + (3n-1)/2 for the plain weight, 8.5 at n = 2, kappa = 1/2
  const double derived = 3.0 / 0.5 + 5.0 / 2.0;
  std::vector<double> E = {1e2, 1e3, 1e4};
  std::vector<Estimate> v;
  MonteCarloPlan plan;
  plan.seed = 11;
  for (double e : E) v.push_back(region_volume(PhaseSpaceRegion(2, 0.5, e), plan).volume);
  const double slope = fit_exponent(E, v).slope;
  bool detector = false;
  try {
    region_volume(PhaseSpaceRegion(2, 0.5, 1e3, WeightMode::Plancherel), plan);
  } catch (const divergence_error&) {
    detector = true;
  }
  verdict(8, std::abs(slope - derived) <= 0.03 * derived && detector && plain_volume_exponent(2, 0.5) == derived, "G^E plain-weight exponent",
          "fit " + g(slope) + " vs derived " + g(derived) + " (stated formula gives " + g(stated_volume_exponent(2, 0.5)) +
              "); plancherel mode " + (detector ? "diverges" : "did not diverge"),
          t.seconds());
}

void criterion9() {
  Timer t;
  double worst = 0.0;
  int mismatches = 0;
  const double r = 2.0;
  for (int m = 1; m <= 6; ++m)
    for (double rho = -0.9; rho < 6.0; rho += 0.5) {
      const DistributionFunction phi([rho](double x) { return std::pow(x, rho); }, "power");
      bool diverged = false;
      double v = 0.0;
      try {
        v = gp_transform(phi, m, r);
      } catch (const divergence_error&) {
        diverged = true;
      }
      const bool should = rho >= m;
      if (diverged != should) ++mismatches;
      if (!should && !diverged) worst = std::max(worst, std::abs(v / (std::pow(r, rho) * boost::math::beta(rho + 1.0, m - rho)) - 1.0));
    }
  const std::vector<double> rs = {1e2, 1e3, 1e4, 1e5, 1e6};
  const DistributionFunction phi([](double x) { return x * x; }, "r^2", true);
  const DistributionFunction good([](double x) { return x * x * (1.0 + 1.0 / std::log(std::numbers::e + x)); }, "good", true);
  const DistributionFunction osc([](double x) { return x * x * (2.0 + std::sin(std::log(x))); }, "osc", true);
  const auto pos = gp_theorem_harness(phi, good, 3.0, rs);
  const auto neg = gp_theorem_harness(phi, osc, 3.0, rs);
  // psi/phi is known in closed form for the positive case
  const double raw = 1.0 + 1.0 / std::log(std::numbers::e + 1e6);
  const bool ok = worst <= 1e-8 && mismatches == 0 && pos.all_conditions && std::abs(pos.rows.back().raw_ratio - raw) <= 1e-12 &&
                  raw <= 1.1 && !neg.all_conditions && !neg.raw_converges;
  verdict(9, ok, "Tauberian suite",
          "Beta worst " + g(worst) + ", " + std::to_string(mismatches) + " dichotomy mismatches, raw ratio " + g(raw) + " at 1e6, negative control " +
              (neg.all_conditions ? "not flagged" : "flagged"),
          t.seconds());
}

void criterion10() {
  Timer t;
  auto b = [](const double* c) {
    const double v = 1.0 - c[0] * c[0] - c[1] * c[1] - c[2] * c[2];
    return v > 0.0 ? v * v : 0.0;
  };
  // int_{R^3} b^2 = 4 pi int_0^1 rho^2 (1 - rho^2)^4 drho
  const double target = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double rho) { return 4.0 * pi * rho * rho * std::pow(1.0 - rho * rho, 4); }, 0.0, 1.0, 10, 1e-14);
  const double hs[] = {0.1, 0.05, 0.025}, rs[] = {1.0, 1.1, 1.2};
  std::string cols;
  double last = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto row = scaled_szego_ratio(1, 0.5, 1.2, hs[i], rs[i], b, 2, target);
    last = row.rel_error;
    cols += (cols.empty() ? "" : ", ") + g(row.rel_error);
  }
  const double secs = t.seconds();
  verdict(10, last <= 0.02 && secs < 120.0, "lattice analogue, f = x^2", "relative errors " + cols + " against " + g(target), secs);
}

void criterion11() {
  Timer t;
  const std::size_t d = 40;
  const auto sq = [](double x) { return x * x; };
  const auto two = [](double) { return 2.0; };
  std::vector<int> held(200);
  parallel_for(held.size(), [&](std::size_t k) {
    const auto H = random_symmetric(d, 7, 2 * k, 5.0);
    const auto A = random_symmetric(d, 7, 2 * k + 1, 1.0);
    const double r1 = eigenvalues_self_adjoint(H)[d / 2];
    held[k] = laptev_safarov_check(H, A, sq, two, r1, 0.5).holds;
  });
  int violations = 0;
  for (int h : held) violations += !h;
  RealMatrix Hd(d, d), Ad(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    Hd(i, i) = static_cast<double>(i);
    Ad(i, i) = std::cos(static_cast<double>(i));
  }
  const double c1 = laptev_safarov_check(Hd, Ad, sq, two, 19.5, 0.5).left;
  const auto H = random_symmetric(d, 7, 1000, 5.0), A = random_symmetric(d, 7, 1001, 1.0);
  const double c2 = laptev_safarov_check(H, A, [](double x) { return 2.0 - x; }, [](double) { return 0.0; }, 0.0, 0.5).left;
  verdict(11, violations == 0 && c1 <= 1e-12 && c2 <= 1e-12, "Laptev-Safarov inequality, 200 pairs of 40x40",
          std::to_string(violations) + " violations; edge-case left sides " + g(c1) + ", " + g(c2), t.seconds());
}

void criterion12() {
  Timer t;
  const auto m = build_lattice_schrodinger(1, 0.5, 200);
  RealMatrix V(m.d, m.d);
  for (std::size_t i = 0; i < m.d; ++i) V(i, i) = std::sqrt(std::abs(m.site(i)[0]));
  const RealMatrix B = random_symmetric(m.d, 3, 0, 0.5);
  const RealMatrix H = V + B;
  bool within = true;
  std::vector<double> col;
  // bound recomputed here from the diagonal V: ||(V + r)^{-1}|| = 1/(min V + r)
  for (double r : {10.0, 100.0, 1000.0}) {
    const auto row = resolvent_trace_ratio(V, H, 2, {r})[0];
    const double bound = 2.0 * 0.5 / r;
    within = within && std::abs(row.ratio_minus_one) <= bound;
    col.push_back(std::abs(row.ratio_minus_one));
  }
  verdict(12, within && decreasing(col), "resolvent trace ratios", "|ratio - 1| = " + g(col[0]) + ", " + g(col[1]) + ", " + g(col[2]), t.seconds());
}

void criterion13() {
  Timer t;
  const auto m = build_lattice_schrodinger(1, 0.5, 200, [](const double* c) { return std::exp(-std::pow(c[0] / 20.0, 2)); });
  std::vector<double> env(m.d);
  for (std::size_t i = 0; i < m.d; ++i) env[i] = std::exp(-std::abs(m.site(i)[0]) / 5.0);
  const RealMatrix K = random_low_rank(m.d, 3, 1.0, 13, env);
  const std::vector<double> rs = {4, 6, 8, 12, 16};
  const auto fam = spectral_family(m);
  const auto id = compact_perturbation_check(m, K, 3, [](double x) { return x; }, 1.0, rs);
  const auto sq = compact_perturbation_check(m, K, 3, [](double x) { return x * x; }, 4.0, rs);
  bool ok = true;
  std::vector<double> col;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    // 3 ||K|| / tr pi_r with the trace counted from the eigenvalues
    ok = ok && id[i].delta <= 3.0 * operator_norm(K) / static_cast<double>(fam.count(rs[i])) * (1.0 + 1e-12);
    col.push_back(sq[i].delta);
  }
  verdict(13, ok && decreasing(col), "compact rank-3 perturbation",
          "identity deltas " + g(id.front().delta) + " .. " + g(id.back().delta) + ", x^2 deltas " + g(col.front()) + " .. " + g(col.back()), t.seconds());
}

void criterion14() {
  Timer t;
  bool same = true;
  std::string what;
  for (const std::string name : {"ball-volume", "phase-volume", "laptev-safarov"}) {
    const auto* e = cli::find_experiment(name);
    std::map<std::string, std::string> given{{"seed", "99"}};
    if (name == "ball-volume") given = {{"seed", "99"}, {"samples", "100000"}, {"sublevel_samples", "100000"}};
    if (name == "phase-volume") given = {{"seed", "99"}, {"samples", "100000"}};
    if (name == "laptev-safarov") given = {{"seed", "99"}, {"instances", "20"}};
    const auto p = cli::resolve(*e, given);
    ::setenv("SZLAB_THREADS", "1", 1);
    const auto a = cli::execute(*e, p);
    ::setenv("SZLAB_THREADS", "4", 1);
    const auto b = cli::execute(*e, p);
    ::unsetenv("SZLAB_THREADS");
    for (std::size_t i = 0; i < a.tables.size(); ++i) same = same && a.tables[i].second.str() == b.tables[i].second.str();
    same = same && a.tables.size() == b.tables.size() && !a.tables.empty();
    what += (what.empty() ? "" : ", ") + name;
  }
  verdict(14, same, "same seed gives byte-identical CSV", what + (same ? " identical across 1 and 4 workers" : " differ"), t.seconds());
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  criterion11();
  criterion12();
  criterion13();
  criterion14();
  std::printf("%d of 14 criteria failed\n", failures);
  return failures ? 1 : 0;
}
