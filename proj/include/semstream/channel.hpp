#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "semstream/csv.hpp"
#include "semstream/error.hpp"

namespace semstream {

enum class Direction { UL, DL };

inline std::string_view to_string(Direction d) { return d == Direction::UL ? "UL" : "DL"; }

inline constexpr double kSampleInterval = 1e-3;  // seconds

// Slot index of time t on a 1 ms grid anchored at `start`. The 1e-9 slack
// keeps exact millisecond boundaries from landing in the previous slot due
// to binary rounding of decimal times.
inline std::int64_t slot_index(double t, double start) {
  return static_cast<std::int64_t>(std::floor((t - start) / kSampleInterval + 1e-9));
}

inline double slot_start(std::int64_t k, double start) {
  return start + static_cast<double>(k) * kSampleInterval;
}

// SNR samples at 1 ms spacing. Lookups past the end return the last sample.
struct SnrTrace {
  Direction direction = Direction::UL;
  double start_time = 0.0;
  std::vector<double> samples;

  double duration() const { return static_cast<double>(samples.size()) * kSampleInterval; }
  double sample_time(std::size_t k) const { return slot_start(static_cast<std::int64_t>(k), start_time); }

  std::string to_csv() const {
    csv::Table t({"timestamp_ms", "snr_db"});
    for (std::size_t k = 0; k < samples.size(); ++k) t.add({csv::num(static_cast<std::uint64_t>(k)), csv::num(samples[k])});
    return t.text();
  }
};

inline double snr_at(const SnrTrace& trace, double t) {
  if (trace.samples.empty()) throw EmptyTrace("lookup on an empty trace");
  if (t < trace.start_time) {
    throw OutOfRange("time " + csv::num(t) + " s precedes trace start " + csv::num(trace.start_time) + " s");
  }
  const auto k = std::max<std::int64_t>(0, slot_index(t, trace.start_time));
  const auto last = static_cast<std::int64_t>(trace.samples.size()) - 1;
  return trace.samples[static_cast<std::size_t>(std::min(k, last))];
}

// Step-function SNR -> bitrate map standing in for MCS tiers.
struct RateTier {
  double snr_min_db = 0.0;
  double bitrate_bps = 0.0;
};

struct RateMap {
  std::vector<RateTier> tiers;

  void validate() const {
    if (tiers.empty()) throw ConfigError("rate map has no tiers");
    for (std::size_t i = 0; i < tiers.size(); ++i) {
      if (!(tiers[i].bitrate_bps >= 0.0)) throw ConfigError("rate map bitrate must be non-negative");
      if (i > 0) {
        if (!(tiers[i].snr_min_db > tiers[i - 1].snr_min_db)) {
          throw ConfigError("rate map thresholds must be strictly ascending");
        }
        if (tiers[i].bitrate_bps < tiers[i - 1].bitrate_bps) {
          throw ConfigError("rate map bitrates must be non-decreasing");
        }
      }
    }
  }

  double min_bitrate() const { return tiers.empty() ? 0.0 : tiers.front().bitrate_bps; }

  RateMap scaled(double factor) const {
    RateMap m = *this;
    for (auto& t : m.tiers) t.bitrate_bps *= factor;
    return m;
  }

  // Uplink tiers; the downlink default is the same ladder at 5x the rate.
  static RateMap default_ul() {
    return RateMap{{{-std::numeric_limits<double>::infinity(), 1e6}, {10.0, 5e6}, {18.0, 20e6}}};
  }
  static RateMap default_dl() { return default_ul().scaled(5.0); }

  // "snr:bps, snr:bps, ..." with "-inf" allowed as the first threshold.
  static RateMap parse(std::string_view text) {
    RateMap m;
    for (auto& item : csv::split(text, ',')) {
      const auto a = item.find_first_not_of(" \t");
      const auto b = item.find_last_not_of(" \t");
      if (a == std::string::npos) continue;
      item = item.substr(a, b - a + 1);
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw ConfigError("rate tier '" + item + "' is not snr:bitrate");
      try {
        m.tiers.push_back({csv::parse_double(item.substr(0, colon)), csv::parse_double(item.substr(colon + 1))});
      } catch (const ParseError& e) {
        throw ConfigError(std::string("rate map: ") + e.what());
      }
    }
    m.validate();
    return m;
  }

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < tiers.size(); ++i) {
      if (i) s += ", ";
      s += csv::num(tiers[i].snr_min_db) + ":" + csv::num(tiers[i].bitrate_bps);
    }
    return s;
  }
};

// Bitrate of the highest tier whose threshold is <= snr; below every tier
// the first tier applies.
inline double bitrate_at(const RateMap& map, double snr_db) {
  if (map.tiers.empty()) throw ConfigError("rate map has no tiers");
  double rate = map.tiers.front().bitrate_bps;
  for (const auto& t : map.tiers) {
    if (t.snr_min_db <= snr_db) rate = t.bitrate_bps;
    else break;
  }
  return rate;
}

// Alternating high/low SNR, high first, each segment exactly `dwell` long.
struct TwoStateProfile {
  double high_snr_db = 22.0;
  double low_snr_db = 6.0;
  double dwell = 15.0;  // seconds
  double jitter_std_db = 0.0;
  std::uint64_t seed = 1;
};

inline SnrTrace generate_two_state(const TwoStateProfile& profile, double duration, Direction direction,
                                   double start_time = 0.0) {
  if (!(duration > 0.0)) throw ConfigError("trace duration must be positive");
  if (!(profile.dwell > 0.0)) throw ConfigError("dwell must be positive");
  if (!(profile.jitter_std_db >= 0.0)) throw ConfigError("jitter must be non-negative");

  const auto count = static_cast<std::size_t>(std::ceil(duration / kSampleInterval - 1e-9));
  const auto dwell_slots = std::max<std::int64_t>(1, std::llround(profile.dwell / kSampleInterval));

  SnrTrace trace{direction, start_time, {}};
  trace.samples.reserve(count);
  std::mt19937_64 rng(profile.seed ^ (direction == Direction::DL ? 0xD1B54A32D192ED03ULL : 0ULL));
  std::normal_distribution<double> jitter(0.0, profile.jitter_std_db > 0 ? profile.jitter_std_db : 1.0);
  for (std::size_t k = 0; k < count; ++k) {
    const bool high = (static_cast<std::int64_t>(k) / dwell_slots) % 2 == 0;
    double v = high ? profile.high_snr_db : profile.low_snr_db;
    if (profile.jitter_std_db > 0) v += jitter(rng);
    trace.samples.push_back(v);
  }
  return trace;
}

// Parses "timestamp_ms,snr_db" CSV with consecutive timestamps from 0.
inline SnrTrace parse_trace_csv(std::string_view text, Direction direction, const std::string& origin = "<trace>") {
  SnrTrace trace{direction, 0.0, {}};
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!header_seen) {
      if (line != "timestamp_ms,snr_db") throw ParseError(origin + ": expected header 'timestamp_ms,snr_db'");
      header_seen = true;
      continue;
    }
    const auto cells = csv::split(line);
    if (cells.size() != 2) throw ParseError(origin + ":" + std::to_string(line_no) + ": expected 2 columns");
    double ts = 0;
    double snr = 0;
    try {
      ts = csv::parse_double(cells[0]);
      snr = csv::parse_double(cells[1]);
    } catch (const ParseError& e) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!std::isfinite(snr)) throw ParseError(origin + ":" + std::to_string(line_no) + ": non-finite snr");
    if (ts != static_cast<double>(trace.samples.size())) {
      throw TraceGapError(origin + ":" + std::to_string(line_no) + ": timestamp " + cells[0] + " ms, expected " +
                          std::to_string(trace.samples.size()));
    }
    trace.samples.push_back(snr);
    if (end == text.size()) break;
  }
  if (!header_seen) throw ParseError(origin + ": missing header");
  if (trace.samples.empty()) throw EmptyTrace(origin + ": no samples");
  return trace;
}

inline SnrTrace load_trace(const std::filesystem::path& path, Direction direction) {
  return parse_trace_csv(csv::read_text(path), direction, path.string());
}

}  // namespace semstream
