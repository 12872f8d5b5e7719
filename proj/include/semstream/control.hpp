#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "semstream/csv.hpp"
#include "semstream/eps.hpp"
#include "semstream/error.hpp"

namespace semstream {

enum class Mode { Full, Downscale };

inline std::string_view to_string(Mode m) { return m == Mode::Full ? "FULL" : "DOWNSCALE"; }

// Instruction to the sending UE. effective_at includes the propagation delay
// of the signalling path.
struct ControlCommand {
  Mode kind = Mode::Full;
  Eps eps;  // 1 for FULL
  double issued_at = 0.0;
  double effective_at = 0.0;

  static ControlCommand full(double issued_at, double delay) {
    return ControlCommand{Mode::Full, Eps::full(), issued_at, issued_at + delay};
  }
  static ControlCommand downscale(Eps eps, double issued_at, double delay) {
    if (eps.is_full()) throw InvalidEps("DOWNSCALE requires eps < 1");
    return ControlCommand{Mode::Downscale, eps, issued_at, issued_at + delay};
  }
};

// The eps UE1 uses for frames enqueued at or after the command takes effect.
inline Eps ue1_apply(const ControlCommand& command, double now, Eps /*current_eps*/) {
  if (now < command.effective_at) {
    throw TooEarly("command effective at " + csv::num(command.effective_at) + " s applied at " + csv::num(now) + " s");
  }
  return command.kind == Mode::Full ? Eps::full() : command.eps;
}

// ---------------------------------------------------------------------------
// Proactive controller: watches every 1 ms UL SNR sample and switches with a
// hysteresis band plus a consecutive-sample hold on each edge.

struct ProactivePolicy {
  double snr_low_db = 10.0;
  double snr_high_db = 15.0;
  int hold_low = 5;
  int hold_high = 200;
  Eps eps_down{1, 16};

  void validate() const {
    if (!(snr_high_db > snr_low_db)) throw ConfigError("proactive: snr_high_db must exceed snr_low_db");
    if (hold_low < 1 || hold_high < 1) throw ConfigError("proactive: hold counts must be >= 1");
    if (eps_down.is_full()) throw ConfigError("proactive: eps_down must be < 1");
  }
};

class ProactiveController {
 public:
  ProactiveController(ProactivePolicy policy, double control_delay)
      : policy_(policy), control_delay_(control_delay) {
    policy_.validate();
    if (control_delay < 0) throw ConfigError("control delay must be non-negative");
  }

  std::optional<ControlCommand> step(double snr_db, double now) {
    if (last_time_ && now < *last_time_) {
      throw OrderingError("SNR sample at " + csv::num(now) + " s after one at " + csv::num(*last_time_) + " s");
    }
    last_time_ = now;
    low_run_ = snr_db < policy_.snr_low_db ? low_run_ + 1 : 0;
    high_run_ = snr_db > policy_.snr_high_db ? high_run_ + 1 : 0;

    if (mode_ == Mode::Full && low_run_ >= policy_.hold_low) {
      mode_ = Mode::Downscale;
      low_run_ = high_run_ = 0;
      return ControlCommand::downscale(policy_.eps_down, now, control_delay_);
    }
    if (mode_ == Mode::Downscale && high_run_ >= policy_.hold_high) {
      mode_ = Mode::Full;
      low_run_ = high_run_ = 0;
      return ControlCommand::full(now, control_delay_);
    }
    return std::nullopt;
  }

  Mode mode() const { return mode_; }
  const ProactivePolicy& policy() const { return policy_; }

 private:
  ProactivePolicy policy_;
  double control_delay_;
  Mode mode_ = Mode::Full;
  std::int64_t low_run_ = 0;
  std::int64_t high_run_ = 0;
  std::optional<double> last_time_;
};

// ---------------------------------------------------------------------------
// Reactive probe-and-adapt ABR driven from the receiver. Congestion is a
// delivered frame whose end-to-end latency exceeds the trigger. While
// downscaled, one full-quality probe frame is requested every probe_interval;
// probe_success_window consecutive on-time probes restore FULL.

struct AbrPolicy {
  double latency_trigger = 0.150;
  double feedback_delay = 0.020;
  double probe_interval = 2.0;
  int probe_success_window = 1;
  Eps eps_down{1, 16};

  void validate() const {
    if (!(latency_trigger > 0) || !(feedback_delay > 0) || !(probe_interval > 0) || probe_success_window < 1) {
      throw ConfigError("abr: trigger, feedback delay, probe interval and window must be positive");
    }
    if (eps_down.is_full()) throw ConfigError("abr: eps_down must be < 1");
  }
};

struct FrameDelivered {
  double latency = 0.0;
  bool probe = false;
};
struct ProbeTick {};
using AbrEvent = std::variant<FrameDelivered, ProbeTick>;

struct AbrDecision {
  std::optional<ControlCommand> command;
  // UE1 sends its next frame at full quality from this time on.
  std::optional<double> probe_effective_at;
  // When the driver should deliver the next ProbeTick.
  std::optional<double> next_tick_at;
};

class AbrController {
 public:
  explicit AbrController(AbrPolicy policy) : policy_(policy) { policy_.validate(); }

  AbrDecision step(const AbrEvent& event, double now) {
    if (last_time_ && now < *last_time_) {
      throw OrderingError("ABR event at " + csv::num(now) + " s after one at " + csv::num(*last_time_) + " s");
    }
    last_time_ = now;
    AbrDecision d;
    if (const auto* delivered = std::get_if<FrameDelivered>(&event)) {
      const bool late = delivered->latency > policy_.latency_trigger;
      if (mode_ == Mode::Full) {
        if (late) {
          mode_ = Mode::Downscale;
          successes_ = 0;
          next_probe_at_ = now + policy_.probe_interval;
          d.command = ControlCommand::downscale(policy_.eps_down, now, policy_.feedback_delay);
          d.next_tick_at = next_probe_at_;
        }
      } else if (delivered->probe) {
        if (late) {
          successes_ = 0;
        } else if (++successes_ >= policy_.probe_success_window) {
          mode_ = Mode::Full;
          successes_ = 0;
          d.command = ControlCommand::full(now, policy_.feedback_delay);
        }
      }
    } else {
      if (mode_ == Mode::Downscale && now >= next_probe_at_) {
        d.probe_effective_at = now + policy_.feedback_delay;
        next_probe_at_ = now + policy_.probe_interval;
        d.next_tick_at = next_probe_at_;
      }
    }
    return d;
  }

  Mode mode() const { return mode_; }
  int consecutive_probe_successes() const { return successes_; }
  const AbrPolicy& policy() const { return policy_; }

 private:
  AbrPolicy policy_;
  Mode mode_ = Mode::Full;
  int successes_ = 0;
  double next_probe_at_ = 0.0;
  std::optional<double> last_time_;
};

// No feedback at all: every frame is sent at one fixed eps.
struct FixedEps {
  Eps eps;
};

using Controller = std::variant<FixedEps, ProactiveController, AbrController>;

inline std::string_view controller_name(const Controller& c) {
  switch (c.index()) {
    case 0: return "fixed";
    case 1: return "proactive";
    default: return "abr";
  }
}

struct ControlLogEntry {
  std::string controller;
  ControlCommand command;
};

inline std::string control_log_csv(const std::vector<ControlLogEntry>& log) {
  csv::Table t({"time_s", "controller", "command", "eps", "effective_at_s"});
  for (const auto& e : log) {
    t.add({csv::num(e.command.issued_at), e.controller, std::string(to_string(e.command.kind)), e.command.eps.str(),
           csv::num(e.command.effective_at)});
  }
  return t.text();
}

}  // namespace semstream
