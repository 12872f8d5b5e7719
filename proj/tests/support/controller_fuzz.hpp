#pragma once

// Randomized drivers for the two controllers. Each returns an empty string
// when every property held, or a description of the first violation.

#include <cstdint>
#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "semstream/control.hpp"

namespace fuzz {

// Random-walk SNR with occasional jumps so every band edge gets crossed.
inline std::vector<double> random_snr_walk(std::mt19937_64& rng, std::size_t steps) {
  std::normal_distribution<double> step(0.0, 1.5);
  std::uniform_real_distribution<double> jump(0.0, 25.0);
  std::vector<double> out;
  double snr = 12.0;
  for (std::size_t i = 0; i < steps; ++i) {
    if (rng() % 200 == 0) snr = jump(rng);
    snr = std::clamp(snr + step(rng), -5.0, 30.0);
    out.push_back(snr);
  }
  return out;
}

// Proactive controller against the trace: hysteresis, hold counts,
// alternation, and agreement with a sliding-window reading of the policy.
inline std::string check_proactive(std::uint64_t seed, std::size_t steps) {
  using namespace semstream;
  std::mt19937_64 rng(seed);
  ProactivePolicy p;
  p.hold_low = 1 + static_cast<int>(rng() % 8);
  p.hold_high = 1 + static_cast<int>(rng() % 40);
  ProactiveController ctl(p, 0.01);
  const auto snr = random_snr_walk(rng, steps);

  Mode mode = Mode::Full;
  std::optional<Mode> last_kind;
  // Side of the band most recently visited since the last command.
  bool seen_low_since = false;
  bool seen_high_since = false;
  for (std::size_t i = 0; i < snr.size(); ++i) {
    const double now = static_cast<double>(i) * 1e-3;
    if (snr[i] < p.snr_low_db) seen_low_since = true;
    if (snr[i] > p.snr_high_db) seen_high_since = true;

    // Window oracle: the last `hold` samples all beyond the threshold.
    const auto window_all = [&](int hold, auto pred) {
      if (static_cast<int>(i) + 1 < hold) return false;
      for (std::size_t k = i + 1 - static_cast<std::size_t>(hold); k <= i; ++k) {
        if (!pred(snr[k])) return false;
      }
      return true;
    };
    std::optional<Mode> expected;
    if (mode == Mode::Full && window_all(p.hold_low, [&](double s) { return s < p.snr_low_db; })) {
      expected = Mode::Downscale;
    } else if (mode == Mode::Downscale && window_all(p.hold_high, [&](double s) { return s > p.snr_high_db; })) {
      expected = Mode::Full;
    }
    const auto cmd = ctl.step(snr[i], now);
    const std::string at = " at step " + std::to_string(i);
    if (cmd.has_value() != expected.has_value()) return "command presence differs from the window rule" + at;
    if (!cmd) continue;
    if (cmd->kind != *expected) return "wrong command kind" + at;
    if (last_kind && *last_kind == cmd->kind) return "duplicate command" + at;
    if (cmd->kind == Mode::Downscale) {
      if (!seen_low_since) return "DOWNSCALE without a low-side crossing" + at;
      if (!window_all(p.hold_low, [&](double s) { return s < p.snr_low_db; })) return "DOWNSCALE before hold_low" + at;
      if (cmd->eps != p.eps_down) return "DOWNSCALE with wrong eps" + at;
    } else {
      if (!seen_high_since) return "FULL without a high-side crossing" + at;
      if (!window_all(p.hold_high, [&](double s) { return s > p.snr_high_db; })) return "FULL before hold_high" + at;
    }
    if (cmd->issued_at != now || cmd->effective_at < cmd->issued_at) return "bad command timing" + at;
    last_kind = cmd->kind;
    mode = cmd->kind;
    if (ctl.mode() != mode) return "mode() disagrees with commands" + at;
    seen_low_since = seen_high_since = false;
  }
  return {};
}

// ABR controller against random deliveries and probe ticks: alternation,
// trigger rule, probe window, probe scheduling.
inline std::string check_abr(std::uint64_t seed, std::size_t steps) {
  using namespace semstream;
  std::mt19937_64 rng(seed);
  AbrPolicy p;
  p.probe_success_window = 1 + static_cast<int>(rng() % 3);
  p.probe_interval = 0.05 + static_cast<double>(rng() % 100) * 1e-3;
  AbrController ctl(p);

  Mode mode = Mode::Full;
  std::optional<Mode> last_kind;
  int successes = 0;
  double next_probe = 0.0;
  double now = 0.0;
  std::exponential_distribution<double> gap(200.0);
  std::uniform_real_distribution<double> latency(0.0, 0.3);
  for (std::size_t i = 0; i < steps; ++i) {
    now += gap(rng);
    const std::string at = " at step " + std::to_string(i);
    AbrDecision d;
    std::optional<Mode> expected;
    bool expect_probe = false;
    if (rng() % 4 == 0) {
      d = ctl.step(ProbeTick{}, now);
      if (mode == Mode::Downscale && now >= next_probe) {
        expect_probe = true;
        next_probe = now + p.probe_interval;
      }
    } else {
      const FrameDelivered ev{latency(rng), rng() % 3 == 0};
      d = ctl.step(ev, now);
      const bool late = ev.latency > p.latency_trigger;
      if (mode == Mode::Full && late) {
        expected = Mode::Downscale;
        next_probe = now + p.probe_interval;
        successes = 0;
      } else if (mode == Mode::Downscale && ev.probe) {
        successes = late ? 0 : successes + 1;
        if (successes >= p.probe_success_window) {
          expected = Mode::Full;
          successes = 0;
        }
      }
    }
    if (d.command.has_value() != expected.has_value()) return "unexpected command presence" + at;
    if (d.probe_effective_at.has_value() != expect_probe) return "unexpected probe decision" + at;
    if (d.probe_effective_at && *d.probe_effective_at != now + p.feedback_delay) return "probe delay wrong" + at;
    if (expect_probe && (!d.next_tick_at || *d.next_tick_at != next_probe)) return "probe not rescheduled" + at;
    if (d.command) {
      if (d.command->kind != *expected) return "wrong command kind" + at;
      if (last_kind && *last_kind == d.command->kind) return "duplicate command" + at;
      if (d.command->effective_at != now + p.feedback_delay) return "feedback delay wrong" + at;
      if (d.command->kind == Mode::Downscale && (!d.next_tick_at || *d.next_tick_at != next_probe)) {
        return "first probe tick not scheduled" + at;
      }
      last_kind = d.command->kind;
      mode = d.command->kind;
    }
    if (ctl.mode() != mode) return "mode() disagrees with commands" + at;
    if (ctl.consecutive_probe_successes() != successes) return "probe window count wrong" + at;
  }
  return {};
}

}  // namespace fuzz
