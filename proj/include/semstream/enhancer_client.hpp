#pragma once

// Client side of the enhancer plugin wire protocol.
//
// Request  (18-byte header + payload, little-endian):
//   "ENH1" | frame_id u32 | src_w u16 | src_h u16 | target_w u16 | target_h u16
//   | channels u8 | reserved u8 (=0) | src_w*src_h*channels raster bytes
// Response (9-byte header + payload):
//   "ENH1" | frame_id u32 (echoed) | status u8 (0 ok, 1 model error)
//   | target_w*target_h*channels raster bytes, present iff status == 0
//
// The same framing is used on a child process's stdin/stdout and on TCP.

#include <array>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "semstream/error.hpp"
#include "semstream/frame.hpp"

namespace semstream::plugin {

inline constexpr std::array<std::uint8_t, 4> kMagic{'E', 'N', 'H', '1'};
inline constexpr std::size_t kRequestHeaderSize = 18;
inline constexpr std::size_t kResponseHeaderSize = 9;
inline constexpr std::uint8_t kStatusOk = 0;
inline constexpr std::uint8_t kStatusModelError = 1;

struct RequestHeader {
  std::uint32_t frame_id = 0;
  std::uint16_t src_w = 0;
  std::uint16_t src_h = 0;
  std::uint16_t target_w = 0;
  std::uint16_t target_h = 0;
  std::uint8_t channels = 0;

  std::size_t payload_size() const {
    return static_cast<std::size_t>(src_w) * src_h * channels;
  }
  std::size_t reply_payload_size() const {
    return static_cast<std::size_t>(target_w) * target_h * channels;
  }
};

struct ResponseHeader {
  std::uint32_t frame_id = 0;
  std::uint8_t status = 0;
};

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}
inline std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}
inline std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}
inline bool magic_ok(std::span<const std::uint8_t> b) {
  return b.size() >= 4 && std::equal(kMagic.begin(), kMagic.end(), b.begin());
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_request(const Frame& frame, int target_w, int target_h) {
  if (frame.width() > 0xFFFF || frame.height() > 0xFFFF || target_w > 0xFFFF || target_h > 0xFFFF) {
    throw ProtocolError("frame dimensions exceed the 16-bit protocol limit");
  }
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  out.reserve(kRequestHeaderSize + frame.sample_count());
  detail::put_u32(out, static_cast<std::uint32_t>(frame.frame_id()));
  detail::put_u16(out, static_cast<std::uint16_t>(frame.width()));
  detail::put_u16(out, static_cast<std::uint16_t>(frame.height()));
  detail::put_u16(out, static_cast<std::uint16_t>(target_w));
  detail::put_u16(out, static_cast<std::uint16_t>(target_h));
  out.push_back(static_cast<std::uint8_t>(frame.channels()));
  out.push_back(0);
  out.insert(out.end(), frame.pixels().begin(), frame.pixels().end());
  return out;
}

inline RequestHeader decode_request_header(std::span<const std::uint8_t> b) {
  if (b.size() < kRequestHeaderSize || !detail::magic_ok(b)) throw ProtocolError("bad request magic");
  RequestHeader h;
  h.frame_id = detail::get_u32(b, 4);
  h.src_w = detail::get_u16(b, 8);
  h.src_h = detail::get_u16(b, 10);
  h.target_w = detail::get_u16(b, 12);
  h.target_h = detail::get_u16(b, 14);
  h.channels = b[16];
  if (b[17] != 0) throw ProtocolError("reserved request byte must be zero");
  if (h.channels != 1 && h.channels != 3) throw ProtocolError("channels must be 1 or 3");
  if (h.src_w == 0 || h.src_h == 0 || h.target_w < h.src_w || h.target_h < h.src_h) {
    throw ProtocolError("request target must be at least the source size");
  }
  return h;
}

inline std::vector<std::uint8_t> encode_response(std::uint32_t frame_id, std::uint8_t status,
                                                 std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  detail::put_u32(out, frame_id);
  out.push_back(status);
  if (status == kStatusOk) out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

inline ResponseHeader decode_response_header(std::span<const std::uint8_t> b) {
  if (b.size() < kResponseHeaderSize || !detail::magic_ok(b)) throw ProtocolError("bad response magic");
  return ResponseHeader{detail::get_u32(b, 4), b[8]};
}

// Blocking byte stream with a read deadline. Owns its descriptors.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void write_all(std::span<const std::uint8_t> bytes) = 0;
  // Fills `into`; returns fewer bytes only on EOF. Throws
  // EnhancerUnavailable on timeout.
  virtual std::size_t read_some_exact(std::span<std::uint8_t> into) = 0;
  // True when bytes beyond the current reply are immediately readable.
  virtual bool has_pending() = 0;
};

class FdTransport : public Transport {
 public:
  FdTransport(int read_fd, int write_fd, std::chrono::milliseconds timeout)
      : read_fd_(read_fd), write_fd_(write_fd), timeout_(timeout) {}
  FdTransport(const FdTransport&) = delete;
  FdTransport& operator=(const FdTransport&) = delete;
  ~FdTransport() override {
    if (read_fd_ >= 0) ::close(read_fd_);
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  }

  void write_all(std::span<const std::uint8_t> bytes) override {
    std::size_t done = 0;
    while (done < bytes.size()) {
      const ssize_t n = ::write(write_fd_, bytes.data() + done, bytes.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EnhancerUnavailable(std::string("enhancer write failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  std::size_t read_some_exact(std::span<std::uint8_t> into) override {
    std::size_t got = 0;
    while (got < into.size()) {
      pollfd p{read_fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(timeout_.count()));
      if (r < 0) {
        if (errno == EINTR) continue;
        throw EnhancerUnavailable(std::string("enhancer poll failed: ") + std::strerror(errno));
      }
      if (r == 0) throw EnhancerUnavailable("enhancer timed out");
      const ssize_t n = ::read(read_fd_, into.data() + got, into.size() - got);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EnhancerUnavailable(std::string("enhancer read failed: ") + std::strerror(errno));
      }
      if (n == 0) break;
      got += static_cast<std::size_t>(n);
    }
    return got;
  }

  // Consumes at most one byte; only called once a reply is complete.
  bool has_pending() override {
    pollfd p{read_fd_, POLLIN, 0};
    if (::poll(&p, 1, 1) <= 0 || (p.revents & POLLIN) == 0) return false;
    std::uint8_t byte = 0;
    return ::read(read_fd_, &byte, 1) == 1;
  }

 protected:
  void close_write() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    write_fd_ = -1;
  }

 private:
  int read_fd_;
  int write_fd_;
  std::chrono::milliseconds timeout_;
};

// Launches argv[0] with the given arguments, wired to a pipe pair.
class ChildProcessTransport : public FdTransport {
 public:
  static std::unique_ptr<ChildProcessTransport> spawn(const std::vector<std::string>& argv,
                                                      std::chrono::milliseconds timeout) {
    if (argv.empty()) throw EnhancerUnavailable("empty enhancer command");
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw EnhancerUnavailable("pipe() failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw EnhancerUnavailable("pipe() failed");
    }
    // Writes to a dead child must surface as EPIPE, not kill us.
    ::signal(SIGPIPE, SIG_IGN);
    const pid_t pid = ::fork();
    if (pid < 0) throw EnhancerUnavailable("fork() failed");
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      std::vector<char*> args;
      for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
      args.push_back(nullptr);
      ::execvp(args[0], args.data());
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    return std::unique_ptr<ChildProcessTransport>(
        new ChildProcessTransport(from_child[0], to_child[1], timeout, pid));
  }

  ~ChildProcessTransport() override {
    // Closing stdin lets a well-behaved plugin exit on its own.
    close_write();
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) != 0) return;
      ::usleep(10'000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }

 private:
  ChildProcessTransport(int rfd, int wfd, std::chrono::milliseconds timeout, pid_t pid)
      : FdTransport(rfd, wfd, timeout), pid_(pid) {}

  pid_t pid_;
};

inline std::unique_ptr<FdTransport> connect_tcp(const std::string& host, int port,
                                                std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw EnhancerUnavailable("cannot resolve enhancer host " + host);
  }
  int fd = -1;
  for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw EnhancerUnavailable("cannot connect to enhancer at " + host + ":" + service);
  ::signal(SIGPIPE, SIG_IGN);
  return std::make_unique<FdTransport>(fd, fd, timeout);
}

// One in-flight request at a time; a handle is not shareable across threads.
class EnhancerClient {
 public:
  explicit EnhancerClient(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {}

  Frame enhance(const Frame& src, int target_w, int target_h) {
    if (broken_) throw EnhancerUnavailable("enhancer connection previously failed");
    const auto request = encode_request(src, target_w, target_h);
    try {
      transport_->write_all(request);

      std::array<std::uint8_t, kResponseHeaderSize> header{};
      const auto got = transport_->read_some_exact(header);
      if (got == 0) throw EnhancerUnavailable("enhancer closed the connection");
      if (got < header.size()) throw ProtocolError("truncated enhancer response header");
      const auto h = decode_response_header(header);
      if (h.frame_id != static_cast<std::uint32_t>(src.frame_id())) {
        throw ProtocolError("enhancer echoed frame_id " + std::to_string(h.frame_id) +
                            ", expected " + std::to_string(src.frame_id()));
      }
      if (h.status == kStatusModelError) {
        throw EnhancerUnavailable("enhancer reported a model error for frame " +
                                  std::to_string(h.frame_id));
      }
      if (h.status != kStatusOk) throw ProtocolError("unknown enhancer status " + std::to_string(h.status));

      std::vector<std::uint8_t> payload(static_cast<std::size_t>(target_w) * target_h * src.channels());
      if (transport_->read_some_exact(payload) != payload.size()) {
        throw ProtocolError("enhancer reply shorter than " + std::to_string(target_w) + "x" +
                            std::to_string(target_h) + "x" + std::to_string(src.channels()));
      }
      if (transport_->has_pending()) {
        throw ProtocolError("enhancer reply longer than the requested dimensions");
      }
      return Frame(target_w, target_h, src.channels(), std::move(payload), src.frame_id(),
                   src.capture_time());
    } catch (...) {
      broken_ = true;
      throw;
    }
  }

 private:
  std::unique_ptr<Transport> transport_;
  bool broken_ = false;
};

}  // namespace semstream::plugin
