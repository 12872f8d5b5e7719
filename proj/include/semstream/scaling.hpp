#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "semstream/enhancer_client.hpp"
#include "semstream/eps.hpp"
#include "semstream/error.hpp"
#include "semstream/frame.hpp"

namespace semstream {

// Target raster size for a given eps. Each dimension is scaled by sqrt(eps)
// and rounded half away from zero, never below one pixel.
struct ScaleSpec {
  Eps eps;
  int width = 0;
  int height = 0;
  int target_width = 0;
  int target_height = 0;

  static ScaleSpec of(int width, int height, Eps eps) {
    ScaleSpec s{eps, width, height, width, height};
    if (!eps.is_full()) {
      const double f = eps.per_dim_factor();
      s.target_width = std::max(1, static_cast<int>(std::round(width * f)));
      s.target_height = std::max(1, static_cast<int>(std::round(height * f)));
    }
    return s;
  }

  double per_dim_factor() const { return eps.per_dim_factor(); }
};

// Centre-aligned source index for output index i when mapping n samples onto
// n_out samples: floor((i + 0.5) * n / n_out), evaluated in integers.
inline int center_index(int i, int n, int n_out) {
  return static_cast<int>((2LL * i + 1) * n / (2LL * n_out));
}

// Uniform point subsampling across both dimensions.
inline Frame downscale(const Frame& frame, Eps eps) {
  if (eps.is_full()) return frame;
  const auto spec = ScaleSpec::of(frame.width(), frame.height(), eps);
  const int w = spec.target_width;
  const int h = spec.target_height;
  const int c = frame.channels();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                                static_cast<std::size_t>(c));
  std::size_t k = 0;
  for (int i = 0; i < h; ++i) {
    const int sy = center_index(i, frame.height(), h);
    for (int j = 0; j < w; ++j) {
      const int sx = center_index(j, frame.width(), w);
      for (int ch = 0; ch < c; ++ch) out[k++] = frame.at(sx, sy, ch);
    }
  }
  return Frame(w, h, c, std::move(out), frame.frame_id(), frame.capture_time());
}

inline Frame downscale(const Frame& frame, double eps) {
  if (!(eps > 0.0) || eps > 1.0) throw InvalidEps("eps must lie in (0, 1]");
  // Exact for binary fractions such as 0.25 and 0.0625.
  constexpr std::int64_t kDen = std::int64_t{1} << 40;
  return downscale(frame, Eps(static_cast<std::int64_t>(std::llround(eps * static_cast<double>(kDen))), kDen));
}

enum class Interpolation { Nearest, Bilinear, Bicubic };

inline std::string_view to_string(Interpolation k) {
  switch (k) {
    case Interpolation::Nearest: return "nearest";
    case Interpolation::Bilinear: return "bilinear";
    case Interpolation::Bicubic: return "bicubic";
  }
  return "?";
}

inline Interpolation parse_interpolation(std::string_view s) {
  if (s == "nearest") return Interpolation::Nearest;
  if (s == "bilinear") return Interpolation::Bilinear;
  if (s == "bicubic") return Interpolation::Bicubic;
  throw ConfigError("unknown interpolation '" + std::string(s) + "'");
}

namespace detail {

inline constexpr double kBicubicA = -0.5;

inline double cubic_weight(double d) {
  d = std::abs(d);
  if (d <= 1.0) return ((kBicubicA + 2.0) * d - (kBicubicA + 3.0)) * d * d + 1.0;
  if (d < 2.0) return ((kBicubicA * d - 5.0 * kBicubicA) * d + 8.0 * kBicubicA) * d - 4.0 * kBicubicA;
  return 0.0;
}

// Taps and weights for one output coordinate along one axis.
struct AxisTaps {
  std::array<int, 4> index{};
  std::array<double, 4> weight{};
  int count = 0;
};

inline std::vector<AxisTaps> axis_taps(int n_src, int n_dst, Interpolation kind) {
  std::vector<AxisTaps> taps(static_cast<std::size_t>(n_dst));
  const double scale = static_cast<double>(n_src) / static_cast<double>(n_dst);
  const auto clamp_idx = [n_src](long i) { return static_cast<int>(std::clamp<long>(i, 0, n_src - 1)); };
  for (int o = 0; o < n_dst; ++o) {
    AxisTaps& t = taps[static_cast<std::size_t>(o)];
    if (kind == Interpolation::Nearest) {
      t.index[0] = center_index(o, n_src, n_dst);
      t.weight[0] = 1.0;
      t.count = 1;
      continue;
    }
    const double pos = (o + 0.5) * scale - 0.5;
    const double base = std::floor(pos);
    const double frac = pos - base;
    const long b = static_cast<long>(base);
    if (kind == Interpolation::Bilinear) {
      t.index[0] = clamp_idx(b);
      t.index[1] = clamp_idx(b + 1);
      t.weight[0] = 1.0 - frac;
      t.weight[1] = frac;
      t.count = 2;
    } else {
      for (int k = 0; k < 4; ++k) {
        t.index[static_cast<std::size_t>(k)] = clamp_idx(b - 1 + k);
        t.weight[static_cast<std::size_t>(k)] = cubic_weight(frac - (k - 1));
      }
      t.count = 4;
    }
  }
  return taps;
}

inline std::uint8_t to_pixel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

}  // namespace detail

// Interpolating upscale with centre-aligned sample positions and clamp-to-edge
// borders. Each output sample is evaluated as
//   sum_over_rows( wy[r] * sum_over_cols( wx[c] * src ) )
// with taps in ascending order, in double precision, then rounded half away
// from zero and clamped to [0, 255]. Bicubic uses the Keys kernel, a = -0.5.
inline Frame upscale_traditional(const Frame& frame, int target_w, int target_h, Interpolation kind) {
  if (target_w < frame.width() || target_h < frame.height()) {
    throw InvalidTarget("upscale target " + std::to_string(target_w) + "x" + std::to_string(target_h) +
                        " is smaller than source " + std::to_string(frame.width()) + "x" +
                        std::to_string(frame.height()));
  }
  const auto xs = detail::axis_taps(frame.width(), target_w, kind);
  const auto ys = detail::axis_taps(frame.height(), target_h, kind);
  const int c = frame.channels();
  const auto src = frame.pixels();
  const auto sw = static_cast<std::size_t>(frame.width());
  const auto sh = static_cast<std::size_t>(frame.height());
  const auto tw = static_cast<std::size_t>(target_w);
  const auto cc = static_cast<std::size_t>(c);

  // Horizontal sums for every source row first; the vertical pass then
  // combines them in the same order as the direct two-level sum.
  std::vector<double> rows(sh * tw * cc);
  for (std::size_t y = 0; y < sh; ++y) {
    for (std::size_t x = 0; x < tw; ++x) {
      const auto& tx = xs[x];
      for (std::size_t ch = 0; ch < cc; ++ch) {
        double row = 0.0;
        for (int q = 0; q < tx.count; ++q) {
          const auto sx = static_cast<std::size_t>(tx.index[static_cast<std::size_t>(q)]);
          row += tx.weight[static_cast<std::size_t>(q)] * src[(y * sw + sx) * cc + ch];
        }
        rows[(y * tw + x) * cc + ch] = row;
      }
    }
  }

  std::vector<std::uint8_t> out(tw * static_cast<std::size_t>(target_h) * cc);
  std::size_t k = 0;
  for (int y = 0; y < target_h; ++y) {
    const auto& ty = ys[static_cast<std::size_t>(y)];
    for (std::size_t x = 0; x < tw; ++x) {
      for (std::size_t ch = 0; ch < cc; ++ch) {
        double acc = 0.0;
        for (int r = 0; r < ty.count; ++r) {
          const auto sy = static_cast<std::size_t>(ty.index[static_cast<std::size_t>(r)]);
          acc += ty.weight[static_cast<std::size_t>(r)] * rows[(sy * tw + x) * cc + ch];
        }
        out[k++] = detail::to_pixel(acc);
      }
    }
  }
  return Frame(target_w, target_h, c, std::move(out), frame.frame_id(), frame.capture_time());
}

// Upscaler selection. Enhancer routes through an external plugin process;
// NullEnhancer stands in for it with bicubic interpolation.
struct Upscaler {
  enum class Kind { Nearest, Bilinear, Bicubic, Enhancer, NullEnhancer };

  Kind kind = Kind::Bicubic;
  std::shared_ptr<plugin::EnhancerClient> client;

  static Upscaler traditional(Interpolation i) {
    switch (i) {
      case Interpolation::Nearest: return {Kind::Nearest, nullptr};
      case Interpolation::Bilinear: return {Kind::Bilinear, nullptr};
      case Interpolation::Bicubic: return {Kind::Bicubic, nullptr};
    }
    return {};
  }
  static Upscaler null_enhancer() { return {Kind::NullEnhancer, nullptr}; }
  static Upscaler enhancer(std::shared_ptr<plugin::EnhancerClient> c) { return {Kind::Enhancer, std::move(c)}; }

  bool is_enhancer() const { return kind == Kind::Enhancer || kind == Kind::NullEnhancer; }
};

// Learned reconstruction of a downscaled frame to the original size.
inline Frame enhance(const Frame& frame, int target_w, int target_h, const Upscaler& enhancer) {
  if (target_w < frame.width() || target_h < frame.height()) {
    throw InvalidTarget("enhance target is smaller than the source frame");
  }
  switch (enhancer.kind) {
    case Upscaler::Kind::NullEnhancer:
      return upscale_traditional(frame, target_w, target_h, Interpolation::Bicubic);
    case Upscaler::Kind::Enhancer: {
      if (!enhancer.client) throw EnhancerUnavailable("enhancer has no plugin connection");
      Frame out = enhancer.client->enhance(frame, target_w, target_h);
      if (out.width() != target_w || out.height() != target_h || out.channels() != frame.channels()) {
        throw ProtocolError("enhancer returned wrong dimensions");
      }
      return out;
    }
    default:
      throw InvalidTarget("enhance() requires an Enhancer or NullEnhancer upscaler");
  }
}

// Any upscaler kind, dispatching to the traditional or enhancer path.
inline Frame upscale(const Frame& frame, int target_w, int target_h, const Upscaler& up) {
  switch (up.kind) {
    case Upscaler::Kind::Nearest: return upscale_traditional(frame, target_w, target_h, Interpolation::Nearest);
    case Upscaler::Kind::Bilinear: return upscale_traditional(frame, target_w, target_h, Interpolation::Bilinear);
    case Upscaler::Kind::Bicubic: return upscale_traditional(frame, target_w, target_h, Interpolation::Bicubic);
    default: return enhance(frame, target_w, target_h, up);
  }
}

}  // namespace semstream
