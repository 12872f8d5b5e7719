#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semstream/eps.hpp"
#include "semstream/error.hpp"

namespace semstream {

// An 8-bit raster, row-major with interleaved channels (1 = gray, 3 = RGB),
// plus its position in the source video. Immutable once built.
class Frame {
 public:
  Frame() = default;

  Frame(int width, int height, int channels, std::vector<std::uint8_t> pixels,
        std::uint64_t frame_id = 0, double capture_time = 0.0)
      : frame_id_(frame_id),
        capture_time_(capture_time),
        width_(width),
        height_(height),
        channels_(channels),
        pixels_(std::move(pixels)) {
    if (width < 1 || height < 1) {
      throw DimensionMismatch("frame dimensions must be positive, got " +
                              std::to_string(width) + "x" + std::to_string(height));
    }
    if (channels != 1 && channels != 3) {
      throw UnsupportedFormat("frame channel count must be 1 or 3, got " +
                              std::to_string(channels));
    }
    if (pixels_.size() != sample_count()) {
      throw DimensionMismatch("pixel buffer holds " + std::to_string(pixels_.size()) +
                              " samples, expected " + std::to_string(sample_count()));
    }
  }

  // Zero-filled raster of the given shape.
  static Frame blank(int width, int height, int channels) {
    return Frame(width, height, channels,
                 std::vector<std::uint8_t>(static_cast<std::size_t>(width) *
                                           static_cast<std::size_t>(height) *
                                           static_cast<std::size_t>(channels)));
  }

  std::uint64_t frame_id() const { return frame_id_; }
  double capture_time() const { return capture_time_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }

  std::size_t sample_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_) *
           static_cast<std::size_t>(channels_);
  }
  // Raw raster size; this is the payload size used for every transmission.
  std::uint64_t payload_bits() const { return static_cast<std::uint64_t>(sample_count()) * 8U; }

  std::span<const std::uint8_t> pixels() const { return pixels_; }

  std::uint8_t at(int x, int y, int c) const {
    return pixels_[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                    static_cast<std::size_t>(x)) *
                       static_cast<std::size_t>(channels_) +
                   static_cast<std::size_t>(c)];
  }

  bool same_shape(const Frame& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  // Same raster, new identity/timestamp.
  Frame with_identity(std::uint64_t frame_id, double capture_time) const {
    Frame f = *this;
    f.frame_id_ = frame_id;
    f.capture_time_ = capture_time;
    return f;
  }

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.same_shape(b) && a.pixels_ == b.pixels_;
  }

 private:
  std::uint64_t frame_id_ = 0;
  double capture_time_ = 0.0;
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Compression metadata that travels with every transmitted frame.
struct FrameMeta {
  std::uint64_t frame_id = 0;
  bool compressed = false;
  Eps eps;
  int original_width = 0;
  int original_height = 0;
  std::uint64_t payload_bits = 0;

  static FrameMeta describe(const Frame& original, const Frame& transmitted, Eps eps) {
    return FrameMeta{original.frame_id(), !eps.is_full(), eps, original.width(),
                     original.height(), transmitted.payload_bits()};
  }
};

struct FrameRate {
  std::int64_t num = 30;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  // Capture time of frame k, computed as k*den/num to keep the step exact.
  double capture_time(std::uint64_t k) const {
    return static_cast<double>(k) * static_cast<double>(den) / static_cast<double>(num);
  }
};

struct VideoSource {
  std::string source_id;
  FrameRate frame_rate;
  std::vector<Frame> frames;
};

}  // namespace semstream
