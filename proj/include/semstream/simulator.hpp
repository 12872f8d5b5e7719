#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "semstream/channel.hpp"
#include "semstream/control.hpp"
#include "semstream/csv.hpp"
#include "semstream/error.hpp"
#include "semstream/frame.hpp"
#include "semstream/metrics.hpp"
#include "semstream/scaling.hpp"

namespace semstream {

// Per-frame stage latencies, seconds.
struct StageLatencies {
  double queue_wait = 0.0;
  double t_ran = 0.0;
  double t_cn_in = 0.0;
  double t_mec = 0.0;
  double t_cn_out = 0.0;
  double t_ue2 = 0.0;

  double sum() const { return queue_wait + t_ran + t_cn_in + t_mec + t_cn_out + t_ue2; }
};

// Trad: the MEC is transparent and UE2 interpolates (three-term latency).
// GAI: the MEC enhances through the plugin (five-term latency).
// NullGAI: as GAI, with bicubic standing in for the plugin.
enum class PipelineMode { Trad, GAI, NullGAI };

inline std::string_view to_string(PipelineMode m) {
  switch (m) {
    case PipelineMode::Trad: return "trad";
    case PipelineMode::GAI: return "gai";
    case PipelineMode::NullGAI: return "null_gai";
  }
  return "?";
}

enum class FramePath { Full, TradUpscaled, Enhanced, DroppedQueueOverflow };

inline std::string_view to_string(FramePath p) {
  switch (p) {
    case FramePath::Full: return "full";
    case FramePath::TradUpscaled: return "trad_upscaled";
    case FramePath::Enhanced: return "enhanced";
    case FramePath::DroppedQueueOverflow: return "dropped_queue_overflow";
  }
  return "?";
}

struct PipelineConfig {
  double cn_delay = 0.010;
  // 640x480x3 output samples enhanced in ~50 ms.
  double mec_per_pixel = 0.050 / (640.0 * 480.0 * 3.0);
  double mec_forward = 0.001;
  // 640x480x3 output samples interpolated in ~5 ms.
  double ue2_upscale_per_pixel = 0.005 / (640.0 * 480.0 * 3.0);
  double control_delay = 0.010;
  int sender_queue_cap = 120;
  double starvation_horizon = 60.0;

  void validate() const {
    if (cn_delay < 0 || mec_per_pixel < 0 || mec_forward < 0 || ue2_upscale_per_pixel < 0 || control_delay < 0) {
      throw ConfigError("pipeline costs and delays must be non-negative");
    }
    if (sender_queue_cap < 1) throw ConfigError("sender_queue_cap must be >= 1");
    if (!(starvation_horizon > 0)) throw ConfigError("starvation_horizon must be positive");
  }
};

struct FrameRecord {
  std::uint64_t frame_id = 0;
  FramePath path = FramePath::Full;
  PipelineMode mode = PipelineMode::Trad;
  Eps eps_used;
  bool probe = false;
  StageLatencies stage;
  double end_to_end = 0.0;
  QualityScore quality;
  std::uint64_t bits_ul = 0;
  std::uint64_t bits_dl = 0;
  double capture_time = 0.0;
  double ul_start = 0.0;
  double ul_snr_db = 0.0;  // UL SNR at capture

  bool delivered() const { return path != FramePath::DroppedQueueOverflow; }
  double delivered_at() const { return capture_time + end_to_end; }
};

// Traditional-path latency: queueing + RAN + CN + UE2.
inline double latency_trad(const FrameRecord& r) {
  if (r.mode != PipelineMode::Trad || r.path == FramePath::Enhanced) {
    throw WrongPath("latency_trad applies to records from the traditional pipeline");
  }
  if (!r.delivered()) throw WrongPath("frame was dropped before transmission");
  const auto& s = r.stage;
  return s.queue_wait + s.t_ran + s.t_cn_in + s.t_ue2;
}

// Enhancement-path latency: queueing + RAN + CN + MEC + CN + UE2.
inline double latency_gai(const FrameRecord& r) {
  if (r.mode == PipelineMode::Trad) throw WrongPath("latency_gai applies to records from an enhancement pipeline");
  if (!r.delivered()) throw WrongPath("frame was dropped before transmission");
  return r.stage.sum();
}

inline double latency_model(const FrameRecord& r) {
  return r.mode == PipelineMode::Trad ? latency_trad(r) : latency_gai(r);
}

// Time to push `bits` through a link whose rate follows the trace, starting
// at `start`. Each 1 ms trace slot drains bitrate * (time spent in slot);
// the final slot is resolved linearly. Past the trace end the last sample's
// rate holds.
inline double transmit_time(std::uint64_t bits, const SnrTrace& trace, const RateMap& map, double start,
                            double horizon = 60.0) {
  if (bits == 0) return 0.0;
  if (trace.samples.empty()) throw EmptyTrace("transmit over an empty trace");
  if (start < trace.start_time) {
    throw OutOfRange("transmission at " + csv::num(start) + " s precedes trace start");
  }
  double remaining = static_cast<double>(bits);
  double t = start;
  std::int64_t k = slot_index(start, trace.start_time);
  const auto last = static_cast<std::int64_t>(trace.samples.size()) - 1;
  while (true) {
    const double rate = bitrate_at(map, trace.samples[static_cast<std::size_t>(std::min(k, last))]);
    if (k >= last) {
      if (!(rate > 0)) throw StarvationError("link rate is zero past the end of the trace");
      return (t - start) + remaining / rate;
    }
    const double slot_end = slot_start(k + 1, trace.start_time);
    if (slot_end > t) {
      const double capacity = rate * (slot_end - t);
      if (rate > 0 && capacity >= remaining) return (t - start) + remaining / rate;
      remaining -= capacity;
      t = slot_end;
    }
    ++k;
    if (t - start > horizon) {
      throw StarvationError("transmission of " + std::to_string(bits) + " bits exceeded " + csv::num(horizon) +
                            " s starting at " + csv::num(start) + " s");
    }
  }
}

struct PipelineOptions {
  Interpolation ue2_interpolation = Interpolation::Bicubic;
  Upscaler enhancer = Upscaler::null_enhancer();
  // On EnhancerUnavailable, continue with NullEnhancer instead of failing.
  bool enhancer_fallback = false;
  bool keep_delivered_frames = false;
};

struct PipelineResult {
  std::vector<FrameRecord> records;
  std::vector<ControlLogEntry> control_log;
  std::vector<Frame> delivered_frames;  // only with keep_delivered_frames; dropped frames are skipped
  bool enhancer_fell_back = false;
};

namespace detail {

enum class EventKind : int {
  CommandEffective = 0,
  ProbeArm = 1,
  SnrSample = 2,
  Capture = 3,
  UplinkFree = 4,
  Delivery = 5,
  ProbeTick = 6,
};

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Capture;
  std::uint64_t seq = 0;
  std::uint64_t index = 0;  // frame index, sample index or command slot
  bool flag = false;        // probe marker on Delivery
  double value = 0.0;       // latency on Delivery

  // Min-heap on (time, kind, seq).
  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return static_cast<int>(kind) > static_cast<int>(o.kind);
    return seq > o.seq;
  }
};

struct QueuedFrame {
  std::size_t index = 0;
  Eps eps;
  bool probe = false;
  Frame transmitted;
};

class PipelineRun {
 public:
  PipelineRun(const VideoSource& video, const SnrTrace& ul, const SnrTrace& dl, const RateMap& ul_map,
              const RateMap& dl_map, const PipelineConfig& cfg, Controller& controller, PipelineMode mode,
              const PipelineOptions& options)
      : video_(video), ul_(ul), dl_(dl), ul_map_(ul_map), dl_map_(dl_map), cfg_(cfg), controller_(controller),
        mode_(mode), options_(options), enhancer_(options.enhancer) {
    cfg_.validate();
    ul_map_.validate();
    dl_map_.validate();
    if (mode_ == PipelineMode::NullGAI) enhancer_ = Upscaler::null_enhancer();
    if (mode_ == PipelineMode::GAI && !enhancer_.is_enhancer()) {
      throw ConfigError("GAI mode needs an Enhancer or NullEnhancer upscaler");
    }
    if (const auto* fixed = std::get_if<FixedEps>(&controller_)) current_eps_ = fixed->eps;
  }

  PipelineResult run() {
    const std::size_t n = video_.frames.size();
    records_.resize(n);
    for (std::size_t i = 0; i < n; ++i) push(video_.frames[i].capture_time(), EventKind::Capture, i);
    if (std::holds_alternative<ProactiveController>(controller_) && !ul_.samples.empty()) {
      push(ul_.sample_time(0), EventKind::SnrSample, 0);
    }

    while (finished_ < n && !events_.empty()) {
      const Event e = events_.top();
      events_.pop();
      switch (e.kind) {
        case EventKind::CommandEffective: {
          current_eps_ = ue1_apply(commands_[e.index], e.time, current_eps_);
          break;
        }
        case EventKind::ProbeArm: probe_armed_ = true; break;
        case EventKind::SnrSample: on_snr_sample(e); break;
        case EventKind::Capture: on_capture(e); break;
        case EventKind::UplinkFree:
          uplink_busy_ = false;
          if (!queue_.empty()) start_uplink(e.time);
          break;
        case EventKind::Delivery: on_abr(FrameDelivered{e.value, e.flag}, e.time); break;
        case EventKind::ProbeTick: on_abr(ProbeTick{}, e.time); break;
      }
    }

    PipelineResult out;
    out.records.reserve(n);
    for (auto& r : records_) out.records.push_back(*r);
    out.control_log = std::move(log_);
    if (options_.keep_delivered_frames) {
      for (auto& f : delivered_) {
        if (f) out.delivered_frames.push_back(std::move(*f));
      }
    }
    out.enhancer_fell_back = fell_back_;
    return out;
  }

 private:
  void push(double time, EventKind kind, std::uint64_t index, bool flag = false, double value = 0.0) {
    events_.push(Event{time, kind, seq_++, index, flag, value});
  }

  void issue(const ControlCommand& cmd) {
    commands_.push_back(cmd);
    log_.push_back(ControlLogEntry{std::string(controller_name(controller_)), cmd});
    push(cmd.effective_at, EventKind::CommandEffective, commands_.size() - 1);
  }

  void on_snr_sample(const Event& e) {
    auto& ctl = std::get<ProactiveController>(controller_);
    if (auto cmd = ctl.step(ul_.samples[e.index], e.time)) issue(*cmd);
    if (e.index + 1 < ul_.samples.size()) push(ul_.sample_time(e.index + 1), EventKind::SnrSample, e.index + 1);
  }

  void on_abr(const AbrEvent& ev, double now) {
    auto* ctl = std::get_if<AbrController>(&controller_);
    if (ctl == nullptr) return;
    const auto d = ctl->step(ev, now);
    if (d.command) issue(*d.command);
    if (d.probe_effective_at) push(*d.probe_effective_at, EventKind::ProbeArm, 0);
    if (d.next_tick_at) push(*d.next_tick_at, EventKind::ProbeTick, 0);
  }

  void on_capture(const Event& e) {
    const std::size_t i = e.index;
    const Frame& original = video_.frames[i];
    Eps eps = current_eps_;
    bool probe = false;
    if (probe_armed_) {
      eps = Eps::full();
      probe = true;
      probe_armed_ = false;
    }
    if (static_cast<int>(queue_.size()) >= cfg_.sender_queue_cap) {
      drop(queue_.front());
      queue_.pop_front();
    }
    queue_.push_back(QueuedFrame{i, eps, probe, downscale(original, eps)});
    if (!uplink_busy_) start_uplink(e.time);
  }

  void drop(const QueuedFrame& q) {
    const Frame& original = video_.frames[q.index];
    FrameRecord r;
    r.frame_id = original.frame_id();
    r.path = FramePath::DroppedQueueOverflow;
    r.mode = mode_;
    r.eps_used = q.eps;
    r.probe = q.probe;
    r.capture_time = original.capture_time();
    r.end_to_end = std::numeric_limits<double>::quiet_NaN();
    r.quality = QualityScore{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                             kMaxPixelValue};
    r.bits_ul = q.transmitted.payload_bits();
    r.ul_snr_db = snr_at(ul_, r.capture_time);
    records_[q.index] = r;
    ++finished_;
  }

  Frame reconstruct(const Frame& transmitted, const Frame& original) {
    if (mode_ == PipelineMode::Trad) {
      return upscale_traditional(transmitted, original.width(), original.height(), options_.ue2_interpolation);
    }
    try {
      return enhance(transmitted, original.width(), original.height(), enhancer_);
    } catch (const EnhancerUnavailable&) {
      if (!options_.enhancer_fallback) throw;
      enhancer_ = Upscaler::null_enhancer();
      fell_back_ = true;
      return enhance(transmitted, original.width(), original.height(), enhancer_);
    }
  }

  void start_uplink(double now) {
    QueuedFrame q = std::move(queue_.front());
    queue_.pop_front();
    const Frame& original = video_.frames[q.index];
    const bool compressed = !q.eps.is_full();
    const bool enhancing = mode_ != PipelineMode::Trad;

    FrameRecord r;
    r.frame_id = original.frame_id();
    r.mode = mode_;
    r.eps_used = q.eps;
    r.probe = q.probe;
    r.capture_time = original.capture_time();
    r.ul_start = now;
    r.ul_snr_db = snr_at(ul_, r.capture_time);
    r.bits_ul = q.transmitted.payload_bits();

    auto& s = r.stage;
    s.queue_wait = now - r.capture_time;
    s.t_ran = transmit_time(r.bits_ul, ul_, ul_map_, now, cfg_.starvation_horizon);
    s.t_cn_in = cfg_.cn_delay;
    const std::uint64_t full_samples = original.sample_count();
    if (enhancing) {
      s.t_mec = cfg_.mec_forward + (compressed ? cfg_.mec_per_pixel * static_cast<double>(full_samples) : 0.0);
      s.t_cn_out = cfg_.cn_delay;
      r.bits_dl = original.payload_bits();
    } else {
      r.bits_dl = q.transmitted.payload_bits();
    }
    const double dl_start = now + s.t_ran + s.t_cn_in + s.t_mec + s.t_cn_out;
    s.t_ue2 = transmit_time(r.bits_dl, dl_, dl_map_, dl_start, cfg_.starvation_horizon);
    if (compressed && !enhancing) s.t_ue2 += cfg_.ue2_upscale_per_pixel * static_cast<double>(full_samples);
    r.end_to_end = s.sum();

    if (!compressed) {
      r.path = FramePath::Full;
      r.quality = QualityScore{};
      if (options_.keep_delivered_frames) delivered_slot(q.index) = original;
    } else {
      r.path = enhancing ? FramePath::Enhanced : FramePath::TradUpscaled;
      Frame out = reconstruct(q.transmitted, original);
      r.quality = psnr(original, out);
      if (options_.keep_delivered_frames) delivered_slot(q.index) = std::move(out);
    }

    uplink_busy_ = true;
    push(now + s.t_ran, EventKind::UplinkFree, q.index);
    if (std::holds_alternative<AbrController>(controller_)) {
      push(r.delivered_at(), EventKind::Delivery, q.index, r.probe, r.end_to_end);
    }
    records_[q.index] = r;
    ++finished_;
  }

  std::optional<Frame>& delivered_slot(std::size_t i) {
    if (delivered_.size() < records_.size()) delivered_.resize(records_.size());
    return delivered_[i];
  }

  const VideoSource& video_;
  const SnrTrace& ul_;
  const SnrTrace& dl_;
  RateMap ul_map_;
  RateMap dl_map_;
  PipelineConfig cfg_;
  Controller& controller_;
  PipelineMode mode_;
  PipelineOptions options_;
  Upscaler enhancer_;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  std::deque<QueuedFrame> queue_;
  bool uplink_busy_ = false;
  bool probe_armed_ = false;
  bool fell_back_ = false;
  Eps current_eps_ = Eps::full();
  std::vector<ControlCommand> commands_;
  std::vector<ControlLogEntry> log_;
  std::vector<std::optional<FrameRecord>> records_;
  std::vector<std::optional<Frame>> delivered_;
  std::size_t finished_ = 0;
};

}  // namespace detail

// Runs every frame of the video through UE1 -> UL -> CN -> MEC -> CN -> DL -> UE2.
// UE1 fixes each frame's eps when the frame is captured and sends frames one
// at a time from a FIFO that drops its oldest entry when full. The MEC and DL
// stages do not queue.
inline PipelineResult run_pipeline(const VideoSource& video, const SnrTrace& ul, const SnrTrace& dl,
                                   const RateMap& ul_map, const RateMap& dl_map, const PipelineConfig& cfg,
                                   Controller controller, PipelineMode mode, const PipelineOptions& options = {}) {
  detail::PipelineRun run(video, ul, dl, ul_map, dl_map, cfg, controller, mode, options);
  return run.run();
}

inline std::string records_csv(const std::vector<FrameRecord>& records) {
  csv::Table t({"frame_id", "path", "eps", "queue_wait_s", "t_ran_s", "t_cn_in_s", "t_mec_s", "t_cn_out_s",
                "t_ue2_s", "end_to_end_s", "mse", "psnr_db"});
  for (const auto& r : records) {
    if (!r.delivered()) {
      t.add({csv::num(r.frame_id), std::string(to_string(r.path)), r.eps_used.str(), "", "", "", "", "", "", "", "",
             ""});
      continue;
    }
    const auto& s = r.stage;
    t.add({csv::num(r.frame_id), std::string(to_string(r.path)), r.eps_used.str(), csv::num(s.queue_wait),
           csv::num(s.t_ran), csv::num(s.t_cn_in), csv::num(s.t_mec), csv::num(s.t_cn_out), csv::num(s.t_ue2),
           csv::num(r.end_to_end), csv::num(r.quality.mse), format_psnr(r.quality.psnr_db)});
  }
  return t.text();
}

}  // namespace semstream
