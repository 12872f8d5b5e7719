#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "semstream/error.hpp"
#include "semstream/frame.hpp"
#include "semstream/netpbm.hpp"

namespace semstream {

inline FrameRate parse_frame_rate(std::string_view text) {
  std::pair<std::int64_t, std::int64_t> r;
  try {
    r = Eps::parse_rational(text);
  } catch (const InvalidEps& e) {
    throw ParseError(e.what());
  }
  if (r.first <= 0) throw ParseError("frame rate must be positive: '" + std::string(text) + "'");
  return FrameRate{r.first, r.second};
}

// Manifest layout: first line "fps <num>[/<den>]", then one raster path per
// line in display order. Relative paths resolve against the manifest's
// directory. Blank lines and '#' comments are ignored.
inline VideoSource load_video(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());

  VideoSource video;
  video.source_id = manifest_path.stem().string();

  std::string line;
  bool have_fps = false;
  const auto base = manifest_path.parent_path();
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    line = line.substr(first, line.find_last_not_of(" \t") - first + 1);
    if (!have_fps) {
      if (line.rfind("fps", 0) != 0 || line.size() < 5 || (line[3] != ' ' && line[3] != '\t')) {
        throw ParseError(manifest_path.string() + ": first line must be 'fps <rate>'");
      }
      video.frame_rate = parse_frame_rate(std::string_view(line).substr(4));
      have_fps = true;
      continue;
    }
    std::filesystem::path frame_path(line);
    if (frame_path.is_relative()) frame_path = base / frame_path;
    const auto id = static_cast<std::uint64_t>(video.frames.size());
    Frame f = load_frame(frame_path).with_identity(id, video.frame_rate.capture_time(id));
    if (!video.frames.empty() && !video.frames.front().same_shape(f)) {
      const auto& r = video.frames.front();
      throw DimensionMismatch(frame_path.string() + " is " + std::to_string(f.width()) + "x" +
                              std::to_string(f.height()) + "x" + std::to_string(f.channels()) +
                              ", earlier frames are " + std::to_string(r.width()) + "x" +
                              std::to_string(r.height()) + "x" + std::to_string(r.channels()));
    }
    video.frames.push_back(std::move(f));
  }
  if (!have_fps) throw ParseError(manifest_path.string() + ": missing 'fps' line");
  return video;
}

// Writes frames as f00000.ppm/.pgm next to a manifest. Returns the manifest path.
inline std::filesystem::path write_video(const VideoSource& video, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto manifest = dir / (video.source_id.empty() ? "video.txt" : video.source_id + ".txt");
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw IoError("cannot write " + manifest.string());
  out << "fps " << video.frame_rate.num;
  if (video.frame_rate.den != 1) out << "/" << video.frame_rate.den;
  out << "\n";
  for (const auto& f : video.frames) {
    char name[32];
    std::snprintf(name, sizeof name, "f%05llu.%s", static_cast<unsigned long long>(f.frame_id()),
                  f.channels() == 3 ? "ppm" : "pgm");
    store_frame(f, dir / name);
    out << name << "\n";
  }
  if (!out) throw IoError("write failed: " + manifest.string());
  return manifest;
}

struct SyntheticVideoSpec {
  int width = 320;
  int height = 240;
  int channels = 3;
  int frames = 300;
  FrameRate frame_rate{30, 1};
  std::uint64_t seed = 1;
  int noise_amplitude = 12;
};

// Procedural test clip: a diagonal colour gradient drifting one pixel per
// frame, a moving bright square, and uniform per-sample noise. Noise draws
// come straight from mt19937_64 words, so output is identical on every
// standard library.
inline Frame synthetic_frame(const SyntheticVideoSpec& spec, std::uint64_t index) {
  std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ULL + index);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(spec.width) *
                               static_cast<std::size_t>(spec.height) *
                               static_cast<std::size_t>(spec.channels));
  const int span = spec.width + spec.height;
  const int box = std::max(1, std::min(spec.width, spec.height) / 6);
  const int box_x = static_cast<int>((index * 3) % static_cast<std::uint64_t>(std::max(1, spec.width - box)));
  const int box_y = spec.height / 3;
  const int amp = spec.noise_amplitude;
  std::size_t k = 0;
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const int diag = (x + y + static_cast<int>(index)) % span;
      const bool in_box = x >= box_x && x < box_x + box && y >= box_y && y < box_y + box;
      for (int c = 0; c < spec.channels; ++c) {
        int base = (diag * 255) / span;
        if (c == 1) base = 255 - base;
        if (c == 2) base = (y * 255) / std::max(1, spec.height - 1);
        if (in_box) base = 235;
        int noise = 0;
        if (amp > 0) noise = static_cast<int>(rng() % static_cast<std::uint64_t>(2 * amp + 1)) - amp;
        px[k++] = static_cast<std::uint8_t>(std::clamp(base + noise, 0, 255));
      }
    }
  }
  return Frame(spec.width, spec.height, spec.channels, std::move(px), index,
               spec.frame_rate.capture_time(index));
}

inline VideoSource synthetic_video(const SyntheticVideoSpec& spec) {
  VideoSource v;
  v.source_id = "synthetic";
  v.frame_rate = spec.frame_rate;
  v.frames.reserve(static_cast<std::size_t>(std::max(0, spec.frames)));
  for (int i = 0; i < spec.frames; ++i) v.frames.push_back(synthetic_frame(spec, static_cast<std::uint64_t>(i)));
  return v;
}

}  // namespace semstream
