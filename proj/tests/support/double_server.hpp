#pragma once

// Protocol test double: serves enhancement requests over a pair of file
// descriptors by bicubic interpolation, or misbehaves on purpose.

#include <unistd.h>

#include <cstdint>
#include <string>
#include <vector>

#include "semstream/enhancer_client.hpp"
#include "semstream/scaling.hpp"

namespace testdouble {

enum class Behaviour { Bicubic, ShortReply, LongReply, ModelError, WrongId, UnknownStatus, CloseImmediately, TruncatedHeader };

inline Behaviour parse_behaviour(const std::string& s) {
  if (s == "short") return Behaviour::ShortReply;
  if (s == "long") return Behaviour::LongReply;
  if (s == "model-error") return Behaviour::ModelError;
  if (s == "wrong-id") return Behaviour::WrongId;
  if (s == "unknown-status") return Behaviour::UnknownStatus;
  if (s == "close") return Behaviour::CloseImmediately;
  if (s == "truncated-header") return Behaviour::TruncatedHeader;
  return Behaviour::Bicubic;
}

inline bool read_exact(int fd, std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const auto r = ::read(fd, p, n);
    if (r <= 0) return false;
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

inline void write_exact(int fd, const std::vector<std::uint8_t>& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto w = ::write(fd, bytes.data() + off, bytes.size() - off);
    if (w <= 0) return;
    off += static_cast<std::size_t>(w);
  }
}

// Serves until EOF or a malformed request. Returns the number of requests seen.
inline int serve(int in, int out, Behaviour b) {
  using namespace semstream;
  int served = 0;
  while (true) {
    std::vector<std::uint8_t> header(plugin::kRequestHeaderSize);
    if (!read_exact(in, header.data(), header.size())) return served;
    plugin::RequestHeader h;
    try {
      h = plugin::decode_request_header(header);
    } catch (const Error&) {
      return served;
    }
    std::vector<std::uint8_t> payload(h.payload_size());
    if (!read_exact(in, payload.data(), payload.size())) return served;
    ++served;
    if (b == Behaviour::CloseImmediately) return served;
    if (b == Behaviour::TruncatedHeader) {
      write_exact(out, {'E', 'N', 'H'});
      return served;
    }
    if (b == Behaviour::ModelError) {
      write_exact(out, plugin::encode_response(h.frame_id, plugin::kStatusModelError, std::span<const std::uint8_t>()));
      continue;
    }
    const Frame src(h.src_w, h.src_h, h.channels, std::move(payload), h.frame_id);
    const Frame up = upscale_traditional(src, h.target_w, h.target_h, Interpolation::Bicubic);
    std::vector<std::uint8_t> reply(up.pixels().begin(), up.pixels().end());
    std::uint32_t id = h.frame_id;
    std::uint8_t status = plugin::kStatusOk;
    if (b == Behaviour::ShortReply) reply.resize(reply.size() - static_cast<std::size_t>(h.target_h) * h.channels);
    if (b == Behaviour::LongReply) reply.resize(reply.size() + static_cast<std::size_t>(h.target_h) * h.channels, 0);
    if (b == Behaviour::WrongId) ++id;
    if (b == Behaviour::UnknownStatus) status = 7;
    write_exact(out, plugin::encode_response(id, status, reply));
    if (b == Behaviour::ShortReply) return served;
  }
}

}  // namespace testdouble
