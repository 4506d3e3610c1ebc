#pragma once

// Monte Carlo volumes of homogeneous balls, sublevel sets {|g|^kappa <= r}
// and the phase-space regions
//   G^E = {(g, lambda, xi, x): |lambda|(|xi|^2+|x|^2) + V(g) <= E,
//          V(g) <= E^{1/2}, |lambda| >= E^{-1/2}},   V(g) = |g|^kappa,
// with plain d lambda or c_n |lambda|^n d lambda weights.

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "heisenberg.hpp"
#include "support.hpp"

namespace szlab {

struct MonteCarloPlan {
  std::uint64_t samples = 1000000;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;   // offsets the RNG streams so related runs stay independent
  std::size_t batches = 64;   // fixed batch count keeps results independent of worker count
  std::size_t lambda_samples_per_shell = 4096;

  void validate() const {
    if (samples < 10000) throw std::invalid_argument("MonteCarloPlan: at least 1e4 samples required");
    if (batches < 1) throw std::invalid_argument("MonteCarloPlan: batches must be >= 1");
    if (lambda_samples_per_shell < 16) throw std::invalid_argument("MonteCarloPlan: too few lambda samples per shell");
  }
};

struct Estimate {
  double value = 0.0;
  double error = 0.0;  // one standard deviation
};

namespace detail {

// Runs `batches` independent batches, each accumulating (sum w, sum w^2) over
// its share of `samples` draws, and combines them in batch order.
struct Moments {
  double s1 = 0.0, s2 = 0.0;
  std::uint64_t n = 0;
};

inline Moments batched_mc(const MonteCarloPlan& plan, std::uint64_t stream_base,
                          const std::function<double(Rng&)>& draw) {
  std::vector<Moments> parts(plan.batches);
  parallel_for(plan.batches, [&](std::size_t b) {
    Rng rng(plan.seed, (stream_base << 16) + b);
    const std::uint64_t count = plan.samples / plan.batches + (b < plan.samples % plan.batches ? 1 : 0);
    KahanSum s1, s2;
    for (std::uint64_t i = 0; i < count; ++i) {
      const double w = draw(rng);
      s1.add(w);
      s2.add(w * w);
    }
    parts[b] = {s1.value(), s2.value(), count};
  });
  Moments m;
  KahanSum s1, s2;
  for (auto& p : parts) {
    s1.add(p.s1);
    s2.add(p.s2);
    m.n += p.n;
  }
  m.s1 = s1.value();
  m.s2 = s2.value();
  return m;
}

// mean * scale with the standard error of the mean
inline Estimate scaled_mean(const Moments& m, double scale) {
  const double n = static_cast<double>(m.n);
  const double mean = m.s1 / n;
  const double var = std::max(0.0, m.s2 / n - mean * mean);
  return {mean * scale, std::sqrt(var / n) * std::abs(scale)};
}

inline HeisenbergPoint sample_box(Rng& rng, int n, double R) {
  HeisenbergPoint g = HeisenbergPoint::identity(n);
  for (int j = 0; j < n; ++j) g.x[j] = rng.uniform(-R, R);
  for (int j = 0; j < n; ++j) g.y[j] = rng.uniform(-R, R);
  g.t = rng.uniform(-R * R, R * R);
  return g;
}

inline double box_volume(int n, double R) { return std::pow(2.0 * R, 2 * n) * 2.0 * R * R; }

}  // namespace detail

// Vol{g : |g| <= R}
inline Estimate homogeneous_ball_volume(int n, double R, const MonteCarloPlan& plan) {
  if (n < 1) throw std::invalid_argument("homogeneous_ball_volume: n >= 1");
  if (!(R > 0.0)) throw std::invalid_argument("homogeneous_ball_volume: R must be positive");
  plan.validate();
  const auto m = detail::batched_mc(plan, plan.stream, [&](Rng& rng) {
    return homogeneous_norm(detail::sample_box(rng, n, R)) <= R ? 1.0 : 0.0;
  });
  return detail::scaled_mean(m, detail::box_volume(n, R));
}

// Radial reduction int_{|z|<=1} 2 sqrt(1-|z|^4) dz over R^{2n}, times R^{2n+2}; 1-D midpoint rule.
inline double homogeneous_ball_volume_radial(int n, double R = 1.0, int nodes = 200000) {
  const double sphere = 2.0 * std::pow(pi, n) / std::tgamma(static_cast<double>(n));  // area of S^{2n-1}
  KahanSum s;
  const double h = 1.0 / nodes;
  for (int i = 0; i < nodes; ++i) {
    const double rho = (i + 0.5) * h;
    s.add(std::pow(rho, 2 * n - 1) * 2.0 * std::sqrt(1.0 - std::pow(rho, 4)) * h);
  }
  return sphere * s.value() * std::pow(R, 2 * n + 2);
}

// Vol{|g|^kappa <= r} = ball volume at radius r^{1/kappa}
inline Estimate sublevel_volume(int n, double kappa, double r, const MonteCarloPlan& plan) {
  if (!(kappa > 0.0)) throw std::invalid_argument("sublevel_volume: kappa must be positive");
  if (!(r > 0.0)) throw std::invalid_argument("sublevel_volume: r must be positive");
  return homogeneous_ball_volume(n, std::pow(r, 1.0 / kappa), plan);
}

// Weighted log-log fit; errors become weights (value/error)^2.
inline LineFit fit_exponent(const std::vector<double>& x, const std::vector<Estimate>& y) {
  std::vector<double> lx, ly, w;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i].value > 0.0)) throw std::domain_error("fit_exponent: nonpositive value");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i].value));
    const double rel = y[i].error / y[i].value;
    w.push_back(rel > 0.0 ? 1.0 / (rel * rel) : 1.0);
  }
  bool all_zero = true;
  for (auto& e : y) all_zero = all_zero && e.error == 0.0;
  if (all_zero) w.clear();
  return fit_line(lx, ly, w);
}

enum class WeightMode { Plain, Plancherel };

inline std::string to_string(WeightMode m) { return m == WeightMode::Plain ? "plain" : "plancherel"; }

struct PhaseSpaceRegion {
  int n = 1;
  double kappa = 0.5;
  double E = 1.0;
  WeightMode mode = WeightMode::Plain;
  std::optional<double> lambda_cutoff;  // |lambda| <= cutoff
  bool lambda_floor = true;             // |lambda| >= E^{-1/2}
  bool potential_ceiling = true;        // V(g) <= E^{1/2}
  double c_n = 0.0;                     // 0 selects (2 pi)^{-(n+1)}
  std::vector<std::string> warnings;

  PhaseSpaceRegion(int n_, double kappa_, double E_, WeightMode mode_ = WeightMode::Plain) : n(n_), kappa(kappa_), E(E_), mode(mode_) {
    validate();
  }
  void validate() {
    if (n < 1) throw std::invalid_argument("PhaseSpaceRegion: n >= 1");
    if (!(kappa > 0.0)) throw std::invalid_argument("PhaseSpaceRegion: kappa must be positive");
    if (!(E > 0.0)) throw std::invalid_argument("PhaseSpaceRegion: E must be positive");
    if (kappa >= 1.0 && warnings.empty()) warnings.push_back("kappa >= 1 is outside 0 < kappa < 1; results are numerical only");
  }
  double plancherel_constant() const { return c_n > 0.0 ? c_n : default_plancherel_constant(n); }
  double lambda_min() const { return lambda_floor ? 1.0 / std::sqrt(E) : 0.0; }
  double v_max() const { return potential_ceiling ? std::min(E, std::sqrt(E)) : E; }
  // lambda weight times the (xi,x)-ball factor |lambda|^{-n}
  double lambda_density(double lam) const {
    const double a = std::pow(std::abs(lam), -n);
    return mode == WeightMode::Plain ? a : a * plancherel_constant() * std::pow(std::abs(lam), n);
  }
};

// pi^n / n!, the volume of the unit ball in R^{2n}
inline double unit_ball_volume_2n(int n) { return std::pow(pi, n) / std::tgamma(n + 1.0); }

struct RegionVolume {
  Estimate volume;
  Estimate g_factor;       // int_{V <= v_max} (E - V)^n dg
  Estimate lambda_factor;  // int |lambda|^{-n} w(lambda) d lambda over the allowed set
  std::size_t lambda_shells = 0;
  double last_shell_ratio = 0.0;
};

namespace detail {

inline Estimate region_g_factor(const PhaseSpaceRegion& reg, const MonteCarloPlan& plan) {
  const double vmax = reg.v_max();
  const double R = std::pow(vmax, 1.0 / reg.kappa);
  const auto m = batched_mc(plan, plan.stream * 2 + 0, [&](Rng& rng) {
    const double V = std::pow(homogeneous_norm(sample_box(rng, reg.n, R)), reg.kappa);
    return V <= vmax ? std::pow(reg.E - V, reg.n) : 0.0;
  });
  return scaled_mean(m, box_volume(reg.n, R));
}

// Geometric lambda-shells [l0 2^k, l0 2^{k+1}] on lambda > 0, doubled for the
// sign of lambda. Without a cutoff the shells continue until the geometric tail is
// negligible; a shell ratio >= 0.9 held for 4 shells is reported as divergence.
inline Estimate region_lambda_factor(const PhaseSpaceRegion& reg, const MonteCarloPlan& plan, std::size_t& shells,
                                     double& last_ratio) {
  double l0 = reg.lambda_min();
  if (l0 <= 0.0) {
    if (reg.mode == WeightMode::Plain)
      throw divergence_error("region_volume: without the |lambda| floor the plain weight diverges at lambda = 0");
    l0 = 1e-12;
  }
  const double cutoff = reg.lambda_cutoff.value_or(std::numeric_limits<double>::infinity());
  if (!(cutoff > l0)) throw std::invalid_argument("region_volume: lambda cutoff must exceed the lambda floor");
  KahanSum total;
  double var = 0.0, prev = 0.0;
  int high_ratio = 0;
  shells = 0;
  last_ratio = 0.0;
  for (std::size_t k = 0; k < 400; ++k) {
    const double a = l0 * std::ldexp(1.0, static_cast<int>(k));
    if (a >= cutoff) break;
    const double b = std::min(cutoff, 2.0 * a);
    Rng rng(plan.seed, (plan.stream * 2 + 1) * 1000 + k);
    KahanSum s1, s2;
    for (std::size_t i = 0; i < plan.lambda_samples_per_shell; ++i) {
      const double w = reg.lambda_density(rng.uniform(a, b));
      s1.add(w);
      s2.add(w * w);
    }
    const double N = static_cast<double>(plan.lambda_samples_per_shell);
    const double mean = s1.value() / N;
    const double c = 2.0 * (b - a) * mean;
    const double v = 4.0 * (b - a) * (b - a) * std::max(0.0, s2.value() / N - mean * mean) / N;
    total.add(c);
    var += v;
    ++shells;
    if (k > 0 && prev > 0.0) {
      last_ratio = c / prev;
      high_ratio = last_ratio >= 0.9 ? high_ratio + 1 : 0;
      if (high_ratio >= 4 && !std::isfinite(cutoff)) {
        std::ostringstream os;
        os << "region_volume: lambda-tail does not decay (shell ratio " << last_ratio << " at |lambda| ~ " << b
           << ", mode " << to_string(reg.mode) << ", no cutoff)";
        throw divergence_error(os.str());
      }
      if (!std::isfinite(cutoff) && last_ratio < 0.9 && c * last_ratio / (1.0 - last_ratio) < 1e-9 * total.value()) {
        total.add(c * last_ratio / (1.0 - last_ratio));
        break;
      }
    }
    prev = c;
  }
  return {total.value(), std::sqrt(var)};
}

}  // namespace detail

// Semi-analytic: the (xi,x)-ball integrates to omega_{2n} ((E-V)/|lambda|)^n, leaving
// independent Monte Carlo factors over g and over lambda.
inline RegionVolume region_volume(const PhaseSpaceRegion& reg, const MonteCarloPlan& plan) {
  plan.validate();
  RegionVolume out;
  out.lambda_factor = detail::region_lambda_factor(reg, plan, out.lambda_shells, out.last_shell_ratio);
  out.g_factor = detail::region_g_factor(reg, plan);
  const double w = unit_ball_volume_2n(reg.n);
  const double v = w * out.g_factor.value * out.lambda_factor.value;
  const double rg = out.g_factor.value > 0 ? out.g_factor.error / out.g_factor.value : 0.0;
  const double rl = out.lambda_factor.value > 0 ? out.lambda_factor.error / out.lambda_factor.value : 0.0;
  out.volume = {v, std::abs(v) * std::sqrt(rg * rg + rl * rl)};
  return out;
}

// Full Monte Carlo over (g, lambda, xi, x). With no cutoff lambda = E^{-1/2}/w,
// w uniform in (0,1], which needs n >= 2 for finite variance in plain mode.
inline Estimate region_volume_mc(const PhaseSpaceRegion& reg, const MonteCarloPlan& plan) {
  plan.validate();
  const int n = reg.n;
  const double l0 = reg.lambda_min();
  if (!(l0 > 0.0)) throw std::invalid_argument("region_volume_mc: needs the |lambda| floor");
  const bool cut = reg.lambda_cutoff.has_value();
  if (!cut && (reg.mode == WeightMode::Plancherel || n < 2))
    throw divergence_error("region_volume_mc: weight is not integrable in lambda without a cutoff");
  const double vmax = reg.v_max();
  const double R = std::pow(vmax, 1.0 / reg.kappa);
  const double gbox = detail::box_volume(n, R);
  const auto m = detail::batched_mc(plan, plan.stream * 2 + 7, [&](Rng& rng) {
    double lam, jac;
    if (cut) {
      lam = rng.uniform(l0, *reg.lambda_cutoff);
      jac = *reg.lambda_cutoff - l0;
    } else {
      double w = 0.0;
      while (w <= 0.0) w = rng.uniform();
      lam = l0 / w;
      jac = l0 / (w * w);
    }
    const HeisenbergPoint g = detail::sample_box(rng, n, R);
    const double V = std::pow(homogeneous_norm(g), reg.kappa);
    if (V > vmax) return 0.0;
    const double half = std::sqrt(reg.E / lam);
    double q = 0.0;
    for (int j = 0; j < 2 * n; ++j) {
      const double z = rng.uniform(-half, half);
      q += z * z;
    }
    if (lam * q + V > reg.E) return 0.0;
    const double wmode = reg.mode == WeightMode::Plain ? 1.0 : reg.plancherel_constant() * std::pow(lam, n);
    return 2.0 * jac * gbox * std::pow(2.0 * half, 2 * n) * wmode;
  });
  return detail::scaled_mean(m, 1.0);
}

struct RegionIntegral {
  Estimate integral;
  double mean = 0.0;  // integral / volume, the average a-bar(E)
  RegionVolume volume;
};

// a(g, lambda, xi, x) averaged over G^E with the region's weight: g from the
// (E-V)^n-weighted box sample, lambda by inverse CDF of its density, (xi,x)
// uniform in the ball of radius sqrt((E-V)/|lambda|).
inline RegionIntegral region_integral(
    const PhaseSpaceRegion& reg,
    const std::function<double(const HeisenbergPoint&, double, const std::vector<double>&, const std::vector<double>&)>& a,
    const MonteCarloPlan& plan) {
  RegionIntegral out;
  out.volume = region_volume(reg, plan);
  const int n = reg.n;
  const double l0 = reg.lambda_min();
  const double L = reg.lambda_cutoff.value_or(std::numeric_limits<double>::infinity());
  // inverse CDF of the lambda density on [l0, L]
  auto draw_lambda = [&](Rng& rng) {
    const double U = rng.uniform();
    if (reg.mode == WeightMode::Plancherel) return l0 + U * (L - l0);
    if (n == 1) return l0 * std::pow(L / l0, U);
    const double e = 1.0 - n;
    const double top = std::isfinite(L) ? std::pow(L / l0, e) : 0.0;
    return l0 * std::pow(1.0 - U * (1.0 - top), 1.0 / e);
  };
  const double vmax = reg.v_max();
  const double R = std::pow(vmax, 1.0 / reg.kappa);
  std::vector<double> num(plan.batches), den(plan.batches);
  parallel_for(plan.batches, [&](std::size_t b) {
    Rng rng(plan.seed, ((plan.stream * 2 + 11) << 16) + b);
    const std::uint64_t count = plan.samples / plan.batches + (b < plan.samples % plan.batches ? 1 : 0);
    KahanSum sn, sd;
    std::vector<double> xi(n), x(n), z(2 * n);
    for (std::uint64_t i = 0; i < count; ++i) {
      const HeisenbergPoint g = detail::sample_box(rng, n, R);
      const double V = std::pow(homogeneous_norm(g), reg.kappa);
      if (V > vmax) continue;
      const double wg = std::pow(reg.E - V, n);
      double lam = draw_lambda(rng);
      if (rng.uniform() < 0.5) lam = -lam;
      // uniform point in the 2n-ball
      double norm = 0.0;
      for (auto& c : z) {
        c = rng.normal();
        norm += c * c;
      }
      const double rad = std::sqrt((reg.E - V) / std::abs(lam)) * std::pow(rng.uniform(), 1.0 / (2.0 * n)) / std::sqrt(norm);
      for (int j = 0; j < n; ++j) {
        xi[j] = z[j] * rad;
        x[j] = z[n + j] * rad;
      }
      sn.add(wg * a(g, lam, xi, x));
      sd.add(wg);
    }
    num[b] = sn.value();
    den[b] = sd.value();
  });
  KahanSum sn, sd;
  for (std::size_t b = 0; b < plan.batches; ++b) {
    sn.add(num[b]);
    sd.add(den[b]);
  }
  out.mean = sd.value() > 0.0 ? sn.value() / sd.value() : 0.0;
  out.integral = {out.mean * out.volume.volume.value, std::abs(out.mean) * out.volume.volume.error};
  return out;
}

// Exponent of E in Vol(G^E), plain d lambda, n >= 2, from the iterated-integral
// reduction: E^n from (E-V)^n, E^{(n+1)/kappa} from the g-ball, E^{(n-1)/2} from
// int_{E^{-1/2}}^inf lambda^{-n} d lambda.
inline double plain_volume_exponent(int n, double kappa) {
  if (n < 2) throw divergence_error("plain lambda-integral diverges logarithmically for n = 1");
  return (n + 1.0) / kappa + (3.0 * n - 1.0) / 2.0;
}

// The exponent stated for the Plancherel-weighted volume.
inline double stated_volume_exponent(int n, double kappa) { return (n + 1.0) / kappa + (5.0 * n - 4.0) / 2.0; }

}  // namespace szlab
