#pragma once

// Small shared pieces: error types, portable RNG streams, worker pool,
// CSV rendering, least-squares fits.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace szlab {

inline constexpr double pi = 3.14159265358979323846;

// Raised when an integral or series is detected not to converge.
struct divergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a grid operation would lose mass off the sampled box.
struct truncation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- RNG

// mt19937_64 with a hand-rolled double conversion so streams do not depend
// on the standard library's distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    eng_.seed(seq);
  }

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    spare_ = rad * std::sin(2.0 * pi * u2);
    have_spare_ = true;
    return rad * std::cos(2.0 * pi * u2);
  }

  std::uint64_t next() { return eng_(); }

private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------- workers

// Worker cap from SZLAB_THREADS, else hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SZLAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<unsigned>(std::min<long>(v, 1024));
  }
  return hw;
}

// Runs fn(i) for i in [0,n). Results must be written by index; callers
// reduce afterwards in index order so output never depends on scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned w = std::min<std::size_t>(worker_count(), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < w; ++k) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// Neumaier compensated sum.
class KahanSum {
public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      c_ += (sum_ - t) + x;
    else
      c_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

private:
  double sum_ = 0.0, c_ = 0.0;
};

// ---------------------------------------------------------------- CSV

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// A table of named columns. Cells are strings or doubles rendered with
// 17 significant digits; records end in CRLF.
class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  struct Cell {
    Cell(double v) : text(format_double(v)) {}
    Cell(int v) : text(std::to_string(v)) {}
    Cell(long v) : text(std::to_string(v)) {}
    Cell(long long v) : text(std::to_string(v)) {}
    Cell(unsigned long v) : text(std::to_string(v)) {}
    Cell(unsigned long long v) : text(std::to_string(v)) {}
    Cell(unsigned v) : text(std::to_string(v)) {}
    Cell(const char* s) : text(csv_quote(s)) {}
    Cell(const std::string& s) : text(csv_quote(s)) {}
    std::string text;
  };

  void add_row(std::vector<Cell> cells) {
    if (cells.size() != header_.size()) throw std::invalid_argument("csv row width mismatch");
    std::vector<std::string> row;
    row.reserve(cells.size());
    for (auto& c : cells) row.push_back(std::move(c.text));
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    auto emit = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += ',';
        out += r[i];
      }
      out += "\r\n";
    };
    std::vector<std::string> h;
    for (auto& s : header_) h.push_back(csv_quote(s));
    emit(h);
    for (auto& r : rows_) emit(r);
    return out;
  }

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// ---------------------------------------------------------------- fits

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double band95 = 0.0;  // half-width of the 95% interval on the slope
};

// Weighted least squares y = a + b x. Weights are 1/sigma^2; pass empty
// for an unweighted fit.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                        std::vector<double> w = {}) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("fit_line needs >= 2 points");
  if (w.empty()) w.assign(n, 1.0);
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] - f.intercept - f.slope * x[i];
      rss += w[i] * r * r;
    }
    f.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    boost::math::students_t dist(static_cast<double>(n - 2));
    f.band95 = boost::math::quantile(boost::math::complement(dist, 0.025)) * f.slope_stderr;
  } else {
    // two points: propagate the supplied weights as variances
    f.slope_stderr = std::sqrt(1.0 / sxx);
    f.band95 = 1.96 * f.slope_stderr;
  }
  return f;
}

// Comma separated list of numbers, e.g. "16,32,64" or "1e2,1e3".
inline std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
    if (pos != tok.size()) throw std::invalid_argument("bad number '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty number list");
  return out;
}

}  // namespace szlab
