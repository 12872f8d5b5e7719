#pragma once

#include <cmath>
#include <limits>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "semstream/channel.hpp"
#include "semstream/frame.hpp"

namespace testutil {

inline semstream::Frame random_frame(std::mt19937_64& rng, int w, int h, int c, std::uint64_t id = 0) {
  std::uniform_int_distribution<int> px(0, 255);
  std::vector<std::uint8_t> v(static_cast<std::size_t>(w) * h * c);
  for (auto& x : v) x = static_cast<std::uint8_t>(px(rng));
  return semstream::Frame(w, h, c, std::move(v), id);
}

inline semstream::Frame constant_frame(int w, int h, int c, std::uint8_t value) {
  return semstream::Frame(w, h, c, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * c, value));
}

inline semstream::Frame gray(int w, int h, std::vector<std::uint8_t> px) {
  return semstream::Frame(w, h, 1, std::move(px));
}

// Fresh, empty directory under the system temp dir, unique per name.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("semstream_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline semstream::SnrTrace constant_trace(double snr, std::size_t samples, double start = 0.0,
                                          semstream::Direction d = semstream::Direction::UL) {
  return semstream::SnrTrace{d, start, std::vector<double>(samples, snr)};
}

// Rate map with a single tier: every SNR maps to `bps`.
inline semstream::RateMap flat_map(double bps) {
  return semstream::RateMap{{{-std::numeric_limits<double>::infinity(), bps}}};
}

}  // namespace testutil
