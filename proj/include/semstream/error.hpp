#pragma once

#include <stdexcept>
#include <string>

namespace semstream {

// Root of every error thrown by the library. The CLI maps ConfigError to exit
// code 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SEMSTREAM_DEFINE_ERROR(Name, Base)   \
  class Name : public Base {                 \
   public:                                   \
    using Base::Base;                        \
  };

// frame I/O
SEMSTREAM_DEFINE_ERROR(ParseError, Error)
SEMSTREAM_DEFINE_ERROR(UnsupportedFormat, Error)
SEMSTREAM_DEFINE_ERROR(IoError, Error)
SEMSTREAM_DEFINE_ERROR(DimensionMismatch, Error)

// scaling / enhancer
SEMSTREAM_DEFINE_ERROR(InvalidEps, Error)
SEMSTREAM_DEFINE_ERROR(InvalidTarget, Error)
SEMSTREAM_DEFINE_ERROR(EnhancerUnavailable, Error)
SEMSTREAM_DEFINE_ERROR(ProtocolError, Error)

// metrics
SEMSTREAM_DEFINE_ERROR(EmptySeries, Error)

// channel
SEMSTREAM_DEFINE_ERROR(TraceGapError, ParseError)
SEMSTREAM_DEFINE_ERROR(EmptyTrace, Error)
SEMSTREAM_DEFINE_ERROR(OutOfRange, Error)
SEMSTREAM_DEFINE_ERROR(ConfigError, Error)

// simulator / control
SEMSTREAM_DEFINE_ERROR(StarvationError, Error)
SEMSTREAM_DEFINE_ERROR(WrongPath, Error)
SEMSTREAM_DEFINE_ERROR(OrderingError, Error)
SEMSTREAM_DEFINE_ERROR(TooEarly, Error)

// harness
SEMSTREAM_DEFINE_ERROR(IncomparableRuns, Error)

#undef SEMSTREAM_DEFINE_ERROR

}  // namespace semstream
