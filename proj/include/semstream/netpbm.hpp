#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "semstream/error.hpp"
#include "semstream/frame.hpp"

namespace semstream {

namespace detail {

class PnmHeaderReader {
 public:
  PnmHeaderReader(std::span<const std::uint8_t> bytes, const std::string& origin)
      : bytes_(bytes), origin_(origin) {}

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) throw ParseError(origin_ + ": truncated netpbm header");
    return out;
  }

  long number(const char* what) {
    const std::string t = token();
    long v = 0;
    for (char ch : t) {
      if (!std::isdigit(static_cast<unsigned char>(ch))) {
        throw ParseError(origin_ + ": bad " + what + " '" + t + "'");
      }
      v = v * 10 + (ch - '0');
      if (v > 1'000'000'000L) throw ParseError(origin_ + ": " + what + " too large");
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw ParseError(origin_ + ": missing whitespace before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace detail

// Parses a binary P5/P6 image with maxval 255. Pixels are copied verbatim.
inline Frame decode_pnm(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>") {
  detail::PnmHeaderReader reader(bytes, origin);
  const std::string magic = reader.token();
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else if (magic.size() == 2 && magic[0] == 'P' && magic[1] >= '1' && magic[1] <= '7') {
    throw UnsupportedFormat(origin + ": netpbm variant " + magic + " is not supported (P5/P6 only)");
  } else {
    throw ParseError(origin + ": not a netpbm file");
  }
  const long width = reader.number("width");
  const long height = reader.number("height");
  const long maxval = reader.number("maxval");
  if (width < 1 || height < 1) throw ParseError(origin + ": zero image dimension");
  if (maxval != 255) {
    throw UnsupportedFormat(origin + ": maxval " + std::to_string(maxval) + " (only 255 supported)");
  }
  const std::size_t offset = reader.raster_offset();
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                           static_cast<std::size_t>(channels);
  if (bytes.size() < offset + need) {
    throw ParseError(origin + ": truncated pixel data (" + std::to_string(bytes.size() - offset) +
                     " of " + std::to_string(need) + " bytes)");
  }
  auto first = bytes.begin() + static_cast<std::ptrdiff_t>(offset);
  return Frame(static_cast<int>(width), static_cast<int>(height), channels,
               std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(need)));
}

inline std::vector<std::uint8_t> encode_pnm(const Frame& frame) {
  const std::string header = std::string(frame.channels() == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(frame.width()) + " " + std::to_string(frame.height()) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), frame.pixels().begin(), frame.pixels().end());
  return out;
}

inline Frame load_frame(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  return decode_pnm(bytes, path.string());
}

inline void store_frame(const Frame& frame, const std::filesystem::path& path) {
  const auto bytes = encode_pnm(frame);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace semstream
