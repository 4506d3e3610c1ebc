#pragma once

// Indices of positive functions on the half line, the kernel transforms
// int phi(ru)(1+u)^{-(m+1)} du and int phi(r)(r+u)^{-(m+1)} dr, and a harness
// that tests the transfer of ratio limits from transforms to functions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "support.hpp"

namespace szlab {

class DistributionFunction {
public:
  DistributionFunction(std::function<double(double)> f, std::string name = "phi", bool increasing = false)
      : f_(std::move(f)), name_(std::move(name)), increasing_(increasing) {}

  // Monotone sample table, interpolated linearly in (log r, log phi) and held
  // constant outside the table.
  static DistributionFunction from_samples(std::vector<double> r, std::vector<double> v, std::string name = "phi") {
    if (r.size() < 2 || r.size() != v.size()) throw std::invalid_argument("DistributionFunction: need >= 2 samples");
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!(r[i] > 0.0) || v[i] < 0.0) throw std::invalid_argument("DistributionFunction: samples must be positive");
      if (i && (r[i] <= r[i - 1] || v[i] < v[i - 1]))
        throw std::invalid_argument("DistributionFunction: samples must be increasing");
    }
    auto f = [r, v](double x) {
      if (x <= r.front()) return v.front();
      if (x >= r.back()) return v.back();
      const auto it = std::upper_bound(r.begin(), r.end(), x);
      const std::size_t i = static_cast<std::size_t>(it - r.begin()) - 1;
      if (v[i] <= 0.0 || v[i + 1] <= 0.0) return v[i] + (v[i + 1] - v[i]) * (x - r[i]) / (r[i + 1] - r[i]);
      const double s = std::log(x / r[i]) / std::log(r[i + 1] / r[i]);
      return v[i] * std::pow(v[i + 1] / v[i], s);
    };
    return DistributionFunction(f, std::move(name), true);
  }

  double operator()(double r) const { return f_(r); }
  const std::string& name() const { return name_; }
  bool increasing() const { return increasing_; }

private:
  std::function<double(double)> f_;
  std::string name_;
  bool increasing_;
};

// Geometric lattice lo..hi with `count` points.
inline std::vector<double> geometric_points(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw std::invalid_argument("geometric_points: bad range");
  std::vector<double> p(count);
  for (std::size_t i = 0; i < count; ++i)
    p[i] = count == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1));
  return p;
}

struct IndexEstimate {
  double alpha = 0.0, beta = 0.0;                // sup / inf of the sampled exponent quotient
  double alpha_margin = 0.0, beta_margin = 0.0;  // shift when only the upper half of the r-range is used
  double r_lo = 0.0, r_hi = 0.0, t_lo = 0.0, t_hi = 0.0;
  double spread = 0.0;  // alpha - beta
  std::size_t samples = 0;
};

// q(t,r) = log(phi(tr)/phi(r)) / log t over geometric lattices r in [r_lo,r_hi],
// t in [t_lo,t_hi] (t_lo > 1). Large t separates the index from bounded oscillation.
inline IndexEstimate matushevskaya_indices(const DistributionFunction& phi, double r_lo, double r_hi, double t_lo,
                                           double t_hi, std::size_t r_count = 121, std::size_t t_count = 41) {
  if (!(t_lo > 1.0) || !(t_hi >= t_lo)) throw std::invalid_argument("matushevskaya_indices: need 1 < t_lo <= t_hi");
  if (!(r_lo > 0.0) || !(r_hi > r_lo)) throw std::invalid_argument("matushevskaya_indices: need 0 < r_lo < r_hi");
  const auto rs = geometric_points(r_lo, r_hi, r_count);
  const auto ts = geometric_points(t_lo, t_hi, t_count);
  IndexEstimate est;
  est.r_lo = r_lo;
  est.r_hi = r_hi;
  est.t_lo = t_lo;
  est.t_hi = t_hi;
  double a_all = -std::numeric_limits<double>::infinity(), b_all = -a_all;
  double a_up = a_all, b_up = b_all;
  const double r_mid = std::sqrt(r_lo * r_hi);
  for (double r : rs) {
    const double pr = phi(r);
    if (!(pr > 0.0) || !std::isfinite(pr)) {
      std::ostringstream os;
      os << "matushevskaya_indices: " << phi.name() << " vanishes or is not finite at r=" << r;
      throw std::domain_error(os.str());
    }
    for (double t : ts) {
      const double ptr = phi(t * r);
      if (!(ptr > 0.0) || !std::isfinite(ptr)) {
        std::ostringstream os;
        os << "matushevskaya_indices: " << phi.name() << " vanishes or is not finite at r=" << t * r;
        throw std::domain_error(os.str());
      }
      const double q = std::log(ptr / pr) / std::log(t);
      a_all = std::max(a_all, q);
      b_all = std::min(b_all, q);
      if (r >= r_mid) {
        a_up = std::max(a_up, q);
        b_up = std::min(b_up, q);
      }
      ++est.samples;
    }
  }
  est.alpha = a_all;
  est.beta = b_all;
  est.alpha_margin = std::abs(a_all - a_up);
  est.beta_margin = std::abs(b_all - b_up);
  est.spread = a_all - b_all;
  return est;
}

struct ContinuityReport {
  bool continuous = false;
  double decay_slope = 0.0;  // log-log slope of d_k against k
  std::vector<double> k, d;  // d_k = max_{tau = 1 +- eps_k} |phi(tau r_k)/phi(r_k) - 1|
};

// phi(tau r)/phi(r) -> 1 as r -> inf, tau -> 1, probed along eps_k = k^{-1/2}, r_k = e^k.
inline ContinuityReport multiplicative_continuity(const DistributionFunction& phi, int kmax = 40) {
  ContinuityReport rep;
  for (int k = 1; k <= kmax; ++k) {
    const double eps = 1.0 / std::sqrt(static_cast<double>(k));
    const double r = std::exp(static_cast<double>(k));
    const double pr = phi(r);
    double d = 0.0;
    for (double tau : {1.0 - 0.5 * eps, 1.0 + eps}) d = std::max(d, std::abs(phi(tau * r) / pr - 1.0));
    rep.k.push_back(k);
    rep.d.push_back(d);
  }
  const std::size_t third = rep.d.size() / 3;
  const double head = *std::max_element(rep.d.begin(), rep.d.begin() + third);
  const double tail = *std::max_element(rep.d.end() - third, rep.d.end());
  if (tail <= 1e-12) {
    rep.continuous = true;
    return rep;
  }
  std::vector<double> lk, ld;
  for (std::size_t i = 0; i < rep.d.size(); ++i)
    if (rep.d[i] > 0.0) {
      lk.push_back(std::log(rep.k[i]));
      ld.push_back(std::log(rep.d[i]));
    }
  rep.decay_slope = lk.size() >= 2 ? fit_line(lk, ld).slope : 0.0;
  rep.continuous = tail < head && rep.decay_slope < -0.1;
  return rep;
}

namespace detail {

// Integral of g over (0, inf) split at s: dyadic pieces [s 2^k, s 2^{k+1}] outward and
// [s 2^{-k-1}, s 2^{-k}] inward, 15-point Gauss-Kronrod each, with a geometric
// tail extrapolation once successive pieces shrink at a steady ratio.
inline double half_line_integral(const std::function<double(double)>& g, double s, double rel_tol, const char* who) {
  auto piece = [&](double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, a, b, 0, 0.0);
  };
  auto run = [&](bool outward, double& total_out) {
    double total = 0.0, prev = 0.0, prev_q = -1.0;
    int steady = 0;
    for (int k = 0; k < 1000; ++k) {
      const double a = outward ? s * std::ldexp(1.0, k) : s * std::ldexp(1.0, -k - 1);
      const double b = outward ? s * std::ldexp(1.0, k + 1) : s * std::ldexp(1.0, -k);
      const double c = piece(a, b);
      if (!std::isfinite(c)) {
        std::ostringstream os;
        os << who << ": non-finite integrand near " << (outward ? "infinity" : "0");
        throw divergence_error(os.str());
      }
      total += c;
      if (k >= 2 && prev != 0.0) {
        const double q = c / prev;
        if (prev_q >= 0.0 && std::abs(q - prev_q) < 1e-3 * std::max(1.0, q)) ++steady;
        else steady = 0;
        prev_q = q;
        if (q >= 0.999 && steady >= 8) {
          std::ostringstream os;
          os << who << ": " << (outward ? "tail at infinity" : "endpoint at 0") << " does not converge (dyadic ratio " << q << ")";
          throw divergence_error(os.str());
        }
        if (q >= 0.0 && q < 1.0 && steady >= 3) {
          const double tail = c * q / (1.0 - q);
          if (std::abs(tail) * 1e-2 <= rel_tol * std::abs(total) || std::abs(c) <= 1e-300) {
            total += tail;
            total_out = total;
            return;
          }
        }
      }
      if (c == 0.0 && prev == 0.0 && k > 4) break;
      prev = c;
    }
    if (prev != 0.0 && std::abs(prev) > rel_tol * std::abs(total)) {
      std::ostringstream os;
      os << who << ": no steady decay after 1000 dyadic pieces toward " << (outward ? "infinity" : "0");
      throw divergence_error(os.str());
    }
    total_out = total;
  };
  double up = 0.0, down = 0.0;
  run(true, up);
  run(false, down);
  return up + down;
}

}  // namespace detail

// Phi(r) = int_0^inf phi(ru) (1+u)^{-(m+1)} du
inline double gp_transform(const DistributionFunction& phi, double m, double r, bool precheck = true) {
  if (!(m > -1.0)) throw std::invalid_argument("gp_transform: m must exceed -1");
  if (!(r > 0.0)) throw std::invalid_argument("gp_transform: r must be positive");
  if (precheck) {
    const double lo = std::max(1.0, r);
    const auto est = matushevskaya_indices(phi, lo, lo * 1e6, 1e2, 1e4, 61, 11);
    if (est.alpha >= m - 1e-9) {
      std::ostringstream os;
      os << "gp_transform: upper index estimate " << est.alpha << " >= m = " << m << ", transform diverges";
      throw divergence_error(os.str());
    }
  }
  auto g = [&](double u) { return phi(r * u) * std::pow(1.0 + u, -(m + 1.0)); };
  return detail::half_line_integral(g, 1.0, 1e-12, "gp_transform");
}

struct StieltjesResult {
  double value = 0.0;        // direct quadrature in r
  double via_gp = 0.0;       // u^{-m} gp_transform(phi, m, u)
  double relative_gap = 0.0;
};

// int_0^inf phi(r) (r+u)^{-(m+1)} dr, cross-checked through r = u v.
inline StieltjesResult stieltjes_transform(const DistributionFunction& phi, double m, double u) {
  if (!(u > 0.0)) throw std::invalid_argument("stieltjes_transform: u must be positive");
  if (!(m > -1.0)) throw std::invalid_argument("stieltjes_transform: m must exceed -1");
  StieltjesResult res;
  res.via_gp = std::pow(u, -m) * gp_transform(phi, m, u);
  auto g = [&](double r) { return phi(r) * std::pow(r + u, -(m + 1.0)); };
  res.value = detail::half_line_integral(g, u, 1e-12, "stieltjes_transform");
  const double scale = std::max(std::abs(res.value), std::abs(res.via_gp));
  res.relative_gap = scale > 0.0 ? std::abs(res.value - res.via_gp) / scale : 0.0;
  return res;
}

struct HarnessRow {
  double r, transform_ratio, raw_ratio;
};

struct ConditionCheck {
  bool holds = false;
  std::string detail;
};

struct HarnessReport {
  std::vector<HarnessRow> rows;
  std::map<int, ConditionCheck> conditions;  // keyed 1..5
  bool all_conditions = false;
  bool raw_converges = false;        // final |raw - 1| <= band and gaps non-increasing
  bool transform_converges = false;
  double limit = 1.0;
  double band = 0.1;
};

namespace detail {

inline bool settles_to_one(const std::vector<double>& v, double band) {
  if (v.empty()) return false;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i] - 1.0) > std::abs(v[i - 1] - 1.0) + 1e-12) return false;
  return std::abs(v.back() - 1.0) <= band;
}

}  // namespace detail

// Rows (r, Psi/Phi, psi/phi) with psi divided by `limit`. Conditions:
//   1 phi, psi do not vanish near infinity
//   2 phi multiplicatively continuous and beta(phi) > -1
//   3 psi increasing
//   4 alpha(phi) < m or alpha(psi) < m
//   5 Phi, Psi finite and Psi/Phi -> 1
inline HarnessReport gp_theorem_harness(const DistributionFunction& phi, const DistributionFunction& psi, double m,
                                        const std::vector<double>& r_values, double limit = 1.0, double band = 0.1) {
  if (r_values.empty()) throw std::invalid_argument("gp_theorem_harness: empty r_values");
  if (!(limit > 0.0)) throw std::invalid_argument("gp_theorem_harness: limit must be positive");
  HarnessReport rep;
  rep.limit = limit;
  rep.band = band;
  const DistributionFunction psi_n([&](double r) { return psi(r) / limit; }, psi.name());
  const double r0 = r_values.front(), r1 = r_values.back();
  const auto probe = geometric_points(r0, 100.0 * r1, 400);

  {
    double worst = std::numeric_limits<double>::infinity();
    for (double r : probe) worst = std::min({worst, phi(r), psi(r)});
    std::ostringstream os;
    os << "min(phi, psi) on [" << r0 << ", " << 100 * r1 << "] = " << worst;
    rep.conditions[1] = {worst > 0.0, os.str()};
  }
  IndexEstimate ephi, epsi;
  bool index_ok = true;
  try {
    ephi = matushevskaya_indices(phi, r0, 100.0 * r1, 1e2, 1e4);
    epsi = matushevskaya_indices(psi, r0, 100.0 * r1, 1e2, 1e4);
  } catch (const std::domain_error& e) {
    index_ok = false;
    rep.conditions[2] = {false, e.what()};
    rep.conditions[4] = {false, e.what()};
  }
  if (index_ok) {
    const auto mc = multiplicative_continuity(phi);
    std::ostringstream os;
    os << "continuity slope " << mc.decay_slope << (mc.continuous ? " (continuous)" : " (not continuous)")
       << ", beta(phi) = " << ephi.beta;
    rep.conditions[2] = {mc.continuous && ephi.beta > -1.0, os.str()};
    std::ostringstream o4;
    o4 << "alpha(phi) = " << ephi.alpha << ", alpha(psi) = " << epsi.alpha << ", m = " << m;
    rep.conditions[4] = {ephi.alpha < m || epsi.alpha < m, o4.str()};
  }
  {
    bool inc = true;
    double at = 0.0;
    for (std::size_t i = 1; i < probe.size(); ++i)
      if (psi(probe[i]) < psi(probe[i - 1])) {
        inc = false;
        at = probe[i];
        break;
      }
    std::ostringstream os;
    if (inc)
      os << "psi nondecreasing on 400 probe points";
    else
      os << "psi decreases near r = " << at;
    rep.conditions[3] = {inc, os.str()};
  }

  rep.rows.resize(r_values.size());
  bool finite = true;
  std::string why;
  try {
    parallel_for(r_values.size(), [&](std::size_t i) {
      const double r = r_values[i];
      const double P = gp_transform(phi, m, r), Q = gp_transform(psi_n, m, r);
      rep.rows[i] = {r, Q / P, psi_n(r) / phi(r)};
    });
  } catch (const divergence_error& e) {
    finite = false;
    why = e.what();
  }
  std::vector<double> tr, raw;
  for (auto& row : rep.rows) {
    tr.push_back(row.transform_ratio);
    raw.push_back(row.raw_ratio);
  }
  rep.transform_converges = finite && detail::settles_to_one(tr, band);
  rep.raw_converges = finite && detail::settles_to_one(raw, band);
  {
    std::ostringstream os;
    if (!finite)
      os << why;
    else
      os << "final Psi/Phi = " << tr.back() << (rep.transform_converges ? " (settling to 1)" : " (not settling to 1)");
    rep.conditions[5] = {rep.transform_converges, os.str()};
  }
  rep.all_conditions = true;
  for (auto& [k, c] : rep.conditions) rep.all_conditions = rep.all_conditions && c.holds;
  return rep;
}

}  // namespace szlab
