#pragma once

// Uniform rectangular grids of complex samples, plus the binary container.
//
// Container layout (all integers little-endian):
//   bytes 0..7    magic "SZLABGF1"
//   bytes 8..15   uint64 H, length of the JSON header in bytes
//   bytes 16..    H bytes of UTF-8 JSON:
//                   {"axes":[..], "origin":[..], "spacing":[..], "shape":[..],
//                    "dtype":"complex64", "order":"row-major",
//                    "blocks":[..]   (symbols only: g / lambda / xi / u per axis)
//                    "smoothness":k  (symbols only)}
//   then prod(shape) samples, 8 bytes each: float32 real, float32 imag.
// Row-major means the last axis varies fastest.

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace szlab {

using cplx = std::complex<double>;

class GridFunction {
public:
  GridFunction() = default;
  GridFunction(std::vector<std::string> axes, std::vector<double> origin, std::vector<double> spacing,
               std::vector<std::size_t> shape)
      : axes_(std::move(axes)), origin_(std::move(origin)), spacing_(std::move(spacing)), shape_(std::move(shape)) {
    const std::size_t d = axes_.size();
    if (origin_.size() != d || spacing_.size() != d || shape_.size() != d)
      throw std::invalid_argument("GridFunction: axes/origin/spacing/shape lengths differ");
    for (double h : spacing_)
      if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("GridFunction: spacing must be positive");
    for (std::size_t s : shape_)
      if (s == 0) throw std::invalid_argument("GridFunction: empty axis");
    strides_.assign(d, 1);
    for (std::size_t a = d; a-- > 1;) strides_[a - 1] = strides_[a] * shape_[a];
    samples_.assign(d ? strides_[0] * shape_[0] : 1, cplx{});
  }

  // Axis from lo to hi inclusive with `count` nodes.
  struct Axis {
    std::string name;
    double lo, hi;
    std::size_t count;
  };
  static GridFunction from_axes(const std::vector<Axis>& ax) {
    std::vector<std::string> names;
    std::vector<double> org, sp;
    std::vector<std::size_t> sh;
    for (auto& a : ax) {
      if (a.count < 2 || !(a.hi > a.lo)) throw std::invalid_argument("GridFunction: bad axis " + a.name);
      names.push_back(a.name);
      org.push_back(a.lo);
      sp.push_back((a.hi - a.lo) / static_cast<double>(a.count - 1));
      sh.push_back(a.count);
    }
    return GridFunction(names, org, sp, sh);
  }

  template <class F>
  GridFunction& fill(F&& fn) {
    std::vector<double> c(rank());
    for (std::size_t k = 0; k < samples_.size(); ++k) {
      coords(k, c);
      samples_[k] = cplx(fn(c));
    }
    return *this;
  }

  std::size_t rank() const { return axes_.size(); }
  std::size_t size() const { return samples_.size(); }
  const std::vector<std::string>& axes() const { return axes_; }
  const std::vector<double>& origin() const { return origin_; }
  const std::vector<double>& spacing() const { return spacing_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  const std::vector<std::size_t>& strides() const { return strides_; }
  std::vector<cplx>& samples() { return samples_; }
  const std::vector<cplx>& samples() const { return samples_; }
  cplx& operator[](std::size_t k) { return samples_[k]; }
  const cplx& operator[](std::size_t k) const { return samples_[k]; }

  std::size_t axis_index(const std::string& name) const {
    for (std::size_t a = 0; a < axes_.size(); ++a)
      if (axes_[a] == name) return a;
    throw std::invalid_argument("GridFunction: axis '" + name + "' missing");
  }
  bool has_axis(const std::string& name) const {
    for (auto& a : axes_)
      if (a == name) return true;
    return false;
  }

  double coord(std::size_t axis, std::size_t i) const { return origin_[axis] + spacing_[axis] * static_cast<double>(i); }
  std::size_t index_along(std::size_t flat, std::size_t axis) const { return (flat / strides_[axis]) % shape_[axis]; }
  void coords(std::size_t flat, std::vector<double>& out) const {
    out.resize(rank());
    for (std::size_t a = 0; a < rank(); ++a) out[a] = coord(a, index_along(flat, a));
  }
  double cell_volume() const {
    double v = 1.0;
    for (double h : spacing_) v *= h;
    return v;
  }

  double l2_norm() const {
    double s = 0.0;
    for (auto& z : samples_) s += std::norm(z);
    return std::sqrt(s * cell_volume());
  }
  double max_abs() const {
    double m = 0.0;
    for (auto& z : samples_)
      if (!std::isnan(z.real())) m = std::max(m, std::abs(z));
    return m;
  }

  bool same_layout(const GridFunction& o) const {
    return axes_ == o.axes_ && shape_ == o.shape_ && origin_ == o.origin_ && spacing_ == o.spacing_;
  }

  // Per-axis block labels; empty unless the grid carries a symbol.
  std::vector<std::string>& blocks() { return blocks_; }
  const std::vector<std::string>& blocks() const { return blocks_; }

  // Multilinear interpolation at a point; `inside` is cleared when the point
  // leaves the sampled box (the returned value is then 0).
  cplx interpolate(const std::vector<double>& p, bool* inside = nullptr) const {
    const std::size_t d = rank();
    std::size_t base = 0;
    double frac[8];
    std::size_t step[8];
    if (d > 8) throw std::invalid_argument("interpolate: rank > 8");
    for (std::size_t a = 0; a < d; ++a) {
      const double s = (p[a] - origin_[a]) / spacing_[a];
      const double last = static_cast<double>(shape_[a] - 1);
      if (s < -1e-9 || s > last + 1e-9) {
        if (inside) *inside = false;
        return {};
      }
      double fl = std::floor(std::clamp(s, 0.0, last));
      if (fl >= last) fl = std::max(0.0, last - 1.0);
      const std::size_t i = static_cast<std::size_t>(fl);
      frac[a] = std::clamp(s - fl, 0.0, 1.0);
      step[a] = shape_[a] > 1 ? strides_[a] : 0;
      base += i * strides_[a];
    }
    if (inside) *inside = true;
    cplx acc{};
    const std::size_t corners = std::size_t{1} << d;
    for (std::size_t c = 0; c < corners; ++c) {
      double w = 1.0;
      std::size_t off = base;
      for (std::size_t a = 0; a < d; ++a) {
        if (c >> a & 1) {
          w *= frac[a];
          off += step[a];
        } else {
          w *= 1.0 - frac[a];
        }
      }
      if (w != 0.0) acc += w * samples_[off];
    }
    return acc;
  }

  int smoothness = std::numeric_limits<int>::max();

private:
  std::vector<std::string> axes_;
  std::vector<double> origin_, spacing_;
  std::vector<std::size_t> shape_, strides_;
  std::vector<cplx> samples_;
  std::vector<std::string> blocks_;
};

// L2 distance with the grid's cell volume, skipping NaN-marked samples.
inline double l2_distance(const GridFunction& a, const GridFunction& b) {
  if (a.size() != b.size()) throw std::invalid_argument("l2_distance: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const cplx d = a[k] - b[k];
    if (!std::isnan(d.real()) && !std::isnan(d.imag())) s += std::norm(d);
  }
  return std::sqrt(s * a.cell_volume());
}

namespace grid_io {

inline constexpr char magic[8] = {'S', 'Z', 'L', 'A', 'B', 'G', 'F', '1'};

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline std::string encode(const GridFunction& g) {
  nlohmann::ordered_json h;
  h["axes"] = g.axes();
  h["origin"] = g.origin();
  h["spacing"] = g.spacing();
  h["shape"] = g.shape();
  h["dtype"] = "complex64";
  h["order"] = "row-major";
  if (!g.blocks().empty()) {
    h["blocks"] = g.blocks();
    if (g.smoothness != std::numeric_limits<int>::max()) h["smoothness"] = g.smoothness;
  }
  const std::string header = h.dump();
  std::string out(magic, magic + 8);
  put_u64(out, header.size());
  out += header;
  out.reserve(out.size() + 8 * g.size());
  for (const auto& z : g.samples()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(z.real())));
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(z.imag())));
  }
  return out;
}

inline GridFunction decode(const std::string& bytes) {
  auto bad = [](const std::string& why) { return std::runtime_error("grid container: " + why); };
  if (bytes.size() < 16 || std::memcmp(bytes.data(), magic, 8) != 0) throw bad("bad magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t hl = get_u64(p + 8);
  if (16 + hl > bytes.size()) throw bad("truncated header");
  const auto h = nlohmann::json::parse(bytes.substr(16, hl));
  if (h.at("dtype") != "complex64") throw bad("unsupported dtype");
  GridFunction g(h.at("axes").get<std::vector<std::string>>(), h.at("origin").get<std::vector<double>>(),
                 h.at("spacing").get<std::vector<double>>(), h.at("shape").get<std::vector<std::size_t>>());
  if (h.contains("blocks")) g.blocks() = h["blocks"].get<std::vector<std::string>>();
  if (h.contains("smoothness")) g.smoothness = h["smoothness"].get<int>();
  const std::size_t need = 16 + hl + 8 * g.size();
  if (bytes.size() != need) throw bad("payload size does not match shape");
  const unsigned char* s = p + 16 + hl;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const float re = std::bit_cast<float>(get_u32(s + 8 * k));
    const float im = std::bit_cast<float>(get_u32(s + 8 * k + 4));
    g[k] = cplx(re, im);
  }
  return g;
}

inline void write_file(const std::string& path, const GridFunction& g) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  const std::string b = encode(g);
  os.write(b.data(), static_cast<std::streamsize>(b.size()));
}

inline GridFunction read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string b((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode(b);
}

}  // namespace grid_io

}  // namespace szlab
