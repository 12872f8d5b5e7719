#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "semstream/csv.hpp"
#include "semstream/error.hpp"
#include "semstream/frame.hpp"
#include "semstream/netpbm.hpp"

namespace semstream {

inline constexpr double kMaxPixelValue = 255.0;
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

struct QualityScore {
  double mse = 0.0;
  double psnr_db = kInfinitePsnr;  // +inf iff mse == 0
  double max_i = kMaxPixelValue;

  bool lossless() const { return mse == 0.0; }
};

inline void require_same_shape(const Frame& a, const Frame& b) {
  if (!a.same_shape(b)) {
    throw DimensionMismatch("cannot compare " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                            "x" + std::to_string(a.channels()) + " with " + std::to_string(b.width()) + "x" +
                            std::to_string(b.height()) + "x" + std::to_string(b.channels()));
  }
}

// Sum of squared sample differences, exact.
inline std::uint64_t squared_error_sum(const Frame& a, const Frame& b) {
  require_same_shape(a, b);
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const int d = static_cast<int>(pa[i]) - static_cast<int>(pb[i]);
    sum += static_cast<std::uint64_t>(d * d);
  }
  return sum;
}

// Mean squared error over all m*n*C samples; the divisor is applied once.
inline double mse(const Frame& a, const Frame& b) {
  const auto sum = squared_error_sum(a, b);
  return static_cast<double>(sum) / static_cast<double>(a.sample_count());
}

inline double psnr_from_mse(double mse_value) {
  if (mse_value == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(kMaxPixelValue * kMaxPixelValue / mse_value);
}

inline QualityScore psnr(const Frame& a, const Frame& b) {
  const double m = mse(a, b);
  return QualityScore{m, psnr_from_mse(m), kMaxPixelValue};
}

inline std::string format_psnr(double db) { return csv::num(db); }

// Empirical CDF; +inf values sort after every finite value.
struct CdfSeries {
  std::string metric_name;
  std::vector<double> sorted_values;
  std::vector<double> cumulative_fraction;

  std::size_t size() const { return sorted_values.size(); }

  // Fraction of values strictly below the threshold.
  double fraction_below(double threshold) const {
    const auto it = std::lower_bound(sorted_values.begin(), sorted_values.end(), threshold);
    return static_cast<double>(it - sorted_values.begin()) / static_cast<double>(sorted_values.size());
  }

  std::string to_csv() const {
    csv::Table t({"value", "cumulative_fraction"});
    for (std::size_t i = 0; i < sorted_values.size(); ++i) {
      t.add({csv::num(sorted_values[i]), csv::num(cumulative_fraction[i])});
    }
    return t.text();
  }
};

inline CdfSeries cdf(std::vector<double> values, std::string metric_name) {
  if (values.empty()) throw EmptySeries("cannot build a CDF of " + metric_name + " from zero values");
  for (double v : values) {
    if (std::isnan(v)) throw Error("NaN in " + metric_name + " series");
  }
  std::sort(values.begin(), values.end());
  CdfSeries s{std::move(metric_name), std::move(values), {}};
  const auto n = static_cast<double>(s.sorted_values.size());
  s.cumulative_fraction.reserve(s.sorted_values.size());
  for (std::size_t k = 1; k <= s.sorted_values.size(); ++k) {
    s.cumulative_fraction.push_back(static_cast<double>(k) / n);
  }
  return s;
}

// Nearest-rank percentile: the ceil(p/100 * N)-th smallest value (1-based),
// p in (0, 100]. p = 100 gives the maximum.
inline double percentile_nearest_rank(std::span<const double> sorted_values, double p) {
  if (sorted_values.empty()) throw EmptySeries("percentile of an empty series");
  if (!(p > 0.0) || p > 100.0) throw Error("percentile must lie in (0, 100]");
  const auto n = sorted_values.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted_values[rank - 1];
}

// Writes original/ and delivered/ raster sequences plus pairs.csv (header
// "original_path,delivered_path", then one row per pair) for external VMAF
// tooling.
inline void export_vmaf_pair(std::span<const Frame> original, std::span<const Frame> delivered,
                             const std::filesystem::path& out_dir) {
  if (original.size() != delivered.size()) {
    throw DimensionMismatch("sequence lengths differ: " + std::to_string(original.size()) + " vs " +
                            std::to_string(delivered.size()));
  }
  for (std::size_t i = 0; i < original.size(); ++i) {
    require_same_shape(original[i], delivered[i]);
    if (!original[i].same_shape(original.front())) {
      throw DimensionMismatch("frame " + std::to_string(i) + " differs in size from frame 0");
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "original", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "original").string() + ": " + ec.message());
  std::filesystem::create_directories(out_dir / "delivered", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "delivered").string() + ": " + ec.message());

  std::string manifest = "original_path,delivered_path\n";
  for (std::size_t i = 0; i < original.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.%s", i, original[i].channels() == 3 ? "ppm" : "pgm");
    const auto rel_o = std::filesystem::path("original") / name;
    const auto rel_d = std::filesystem::path("delivered") / name;
    store_frame(original[i], out_dir / rel_o);
    store_frame(delivered[i], out_dir / rel_d);
    manifest += rel_o.generic_string() + "," + rel_d.generic_string() + "\n";
  }
  csv::write_atomic(out_dir / "pairs.csv", manifest);
}

}  // namespace semstream
