#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "semstream/channel.hpp"
#include "semstream/control.hpp"
#include "semstream/csv.hpp"
#include "semstream/error.hpp"
#include "semstream/scaling.hpp"
#include "semstream/simulator.hpp"
#include "semstream/video.hpp"

namespace semstream {

// Flat sectioned key-value text:
//
//   # comment
//   [section]
//   key = value
//
// Keys are addressed as "section.key". Duplicate keys are an error.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text, const std::string& origin = "<config>") {
    KeyValueFile kv;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string line(text.substr(pos, end - pos));
      pos = end + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto where = origin + ":" + std::to_string(line_no);
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(where + ": malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty()) throw ConfigError(where + ": empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
      const auto key = trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError(where + ": empty key");
      const auto full = section.empty() ? key : section + "." + key;
      if (!kv.values_.emplace(full, trim(line.substr(eq + 1))).second) {
        throw ConfigError(where + ": duplicate key '" + full + "'");
      }
    }
    return kv;
  }

  std::optional<std::string> take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    std::string v = it->second;
    values_.erase(it);
    return v;
  }

  // Every key must have been consumed.
  void reject_unknown(const std::string& origin) const {
    if (!values_.empty()) throw ConfigError(origin + ": unknown key '" + values_.begin()->first + "'");
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
  }

  std::map<std::string, std::string> values_;
};

enum class Method { GAI, NoGAI, ABR, TradFixed };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::GAI: return "GAI";
    case Method::NoGAI: return "NoGAI";
    case Method::ABR: return "ABR";
    case Method::TradFixed: return "TradFixed";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "GAI") return Method::GAI;
  if (s == "NoGAI") return Method::NoGAI;
  if (s == "ABR") return Method::ABR;
  if (s == "TradFixed") return Method::TradFixed;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected GAI, NoGAI, ABR or TradFixed)");
}

struct ChannelConfig {
  enum class Source { TwoState, Traces };
  Source source = Source::TwoState;
  TwoStateProfile ul_profile;
  // The downlink is the robust direction: steady high SNR by default.
  TwoStateProfile dl_profile{25.0, 25.0, 15.0, 0.0, 1};
  double duration = 30.0;
  // Trace time of simulation time zero is -start_time.
  double start_time = 0.0;
  std::filesystem::path ul_trace;
  std::filesystem::path dl_trace;
};

struct EnhancerConfig {
  std::vector<std::string> command;  // stdio transport when non-empty
  std::string tcp_host;
  int tcp_port = 0;
  bool fallback = false;
  int timeout_ms = 10'000;

  bool configured() const { return !command.empty() || tcp_port > 0; }
};

inline constexpr std::string_view kSyntheticVideo = "synthetic";

struct ExperimentConfig {
  std::vector<std::string> videos{std::string(kSyntheticVideo)};  // manifest paths, or "synthetic"
  SyntheticVideoSpec synthetic;
  std::vector<Method> methods{Method::GAI, Method::NoGAI, Method::ABR, Method::TradFixed};
  Eps eps{1, 16};
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
  ChannelConfig channel;
  RateMap ul_map = RateMap::default_ul();
  RateMap dl_map = RateMap::default_dl();
  PipelineConfig pipeline;
  Interpolation ue2_interpolation = Interpolation::Bicubic;
  ProactivePolicy proactive;
  AbrPolicy abr;
  EnhancerConfig enhancer;
  std::vector<double> psnr_thresholds{25.0, 30.0};

  void validate() const {
    if (methods.empty()) throw ConfigError("experiment.methods is empty");
    if (videos.empty()) throw ConfigError("experiment.videos is empty");
    for (const auto& v : videos) {
      if (v != kSyntheticVideo && !std::filesystem::exists(v)) throw ConfigError("video manifest not found: " + v);
    }
    if (channel.source == ChannelConfig::Source::Traces) {
      for (const auto& p : {channel.ul_trace, channel.dl_trace}) {
        if (p.empty() || !std::filesystem::exists(p)) throw ConfigError("trace file not found: " + p.string());
      }
    } else if (!(channel.duration > 0)) {
      throw ConfigError("channel.duration_s must be positive");
    }
    if (channel.start_time > 0) throw ConfigError("channel.start_time_s must be <= 0");
    ul_map.validate();
    dl_map.validate();
    pipeline.validate();
    const bool adaptive = std::any_of(methods.begin(), methods.end(), [](Method m) { return m != Method::TradFixed; });
    if (adaptive) {
      if (eps.is_full()) throw ConfigError("adaptive methods need eps < 1");
      proactive.validate();
      abr.validate();
    }
    if (synthetic.width < 1 || synthetic.height < 1 || (synthetic.channels != 1 && synthetic.channels != 3) ||
        synthetic.frames < 0) {
      throw ConfigError("invalid synthetic video geometry");
    }
  }

  // Everything that determines simulation output except methods and out_dir.
  std::string canonical() const {
    std::string s;
    const auto add = [&s](std::string_view k, const std::string& v) { s.append(k).append("=").append(v).append("\n"); };
    std::string vids;
    for (const auto& v : videos) vids += v + ";";
    add("videos", vids);
    add("synthetic", std::to_string(synthetic.width) + "x" + std::to_string(synthetic.height) + "x" +
                         std::to_string(synthetic.channels) + "/" + std::to_string(synthetic.frames) + "@" +
                         std::to_string(synthetic.frame_rate.num) + "/" + std::to_string(synthetic.frame_rate.den) +
                         "~" + std::to_string(synthetic.noise_amplitude));
    add("eps", eps.str());
    add("seed", std::to_string(seed));
    const auto prof = [](const TwoStateProfile& p) {
      return csv::num(p.high_snr_db) + "/" + csv::num(p.low_snr_db) + "/" + csv::num(p.dwell) + "/" +
             csv::num(p.jitter_std_db);
    };
    add("channel", channel.source == ChannelConfig::Source::TwoState
                       ? "two_state " + prof(channel.ul_profile) + " " + prof(channel.dl_profile) + " " +
                             csv::num(channel.duration)
                       : "traces " + channel.ul_trace.string() + " " + channel.dl_trace.string());
    add("start_time", csv::num(channel.start_time));
    add("ul_map", ul_map.str());
    add("dl_map", dl_map.str());
    add("pipeline", csv::num(pipeline.cn_delay) + " " + csv::num(pipeline.mec_per_pixel) + " " +
                        csv::num(pipeline.mec_forward) + " " + csv::num(pipeline.ue2_upscale_per_pixel) + " " +
                        csv::num(pipeline.control_delay) + " " + std::to_string(pipeline.sender_queue_cap) + " " +
                        std::string(to_string(ue2_interpolation)));
    add("proactive", csv::num(proactive.snr_low_db) + " " + csv::num(proactive.snr_high_db) + " " +
                         std::to_string(proactive.hold_low) + " " + std::to_string(proactive.hold_high));
    add("abr", csv::num(abr.latency_trigger) + " " + csv::num(abr.feedback_delay) + " " +
                   csv::num(abr.probe_interval) + " " + std::to_string(abr.probe_success_window));
    std::string enh;
    for (const auto& a : enhancer.command) enh += a + " ";
    add("enhancer", enh + enhancer.tcp_host + ":" + std::to_string(enhancer.tcp_port));
    return s;
  }

  std::string fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& item : csv::split(s, ',')) {
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    out.push_back(item.substr(a, item.find_last_not_of(" \t") - a + 1));
  }
  return out;
}

inline std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

class ConfigReader {
 public:
  ConfigReader(KeyValueFile kv, std::string origin) : kv_(std::move(kv)), origin_(std::move(origin)) {}

  void real(const std::string& key, double& out) {
    if (auto v = kv_.take(key)) out = parse_real(key, *v);
  }
  void integer(const std::string& key, int& out) {
    if (auto v = kv_.take(key)) out = static_cast<int>(parse_int(key, *v));
  }
  void u64(const std::string& key, std::uint64_t& out) {
    if (auto v = kv_.take(key)) {
      const auto i = parse_int(key, *v);
      if (i < 0) throw ConfigError(origin_ + ": " + key + " must be non-negative");
      out = static_cast<std::uint64_t>(i);
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (auto v = kv_.take(key)) {
      if (*v == "true" || *v == "1" || *v == "yes") out = true;
      else if (*v == "false" || *v == "0" || *v == "no") out = false;
      else throw ConfigError(origin_ + ": " + key + " must be true or false");
    }
  }
  std::optional<std::string> text(const std::string& key) { return kv_.take(key); }
  void done() const { kv_.reject_unknown(origin_); }
  const std::string& origin() const { return origin_; }

  double parse_real(const std::string& key, const std::string& v) const {
    try {
      return csv::parse_double(v);
    } catch (const ParseError&) {
      throw ConfigError(origin_ + ": " + key + " is not a number: '" + v + "'");
    }
  }

 private:
  std::int64_t parse_int(const std::string& key, const std::string& v) const {
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) {
      throw ConfigError(origin_ + ": " + key + " is not an integer: '" + v + "'");
    }
    return out;
  }

  KeyValueFile kv_;
  std::string origin_;
};

}  // namespace detail

// Relative paths in the file resolve against `base_dir`.
inline ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir,
                                                const std::string& origin = "<config>") {
  ExperimentConfig cfg;
  detail::ConfigReader r(KeyValueFile::parse(text, origin), origin);
  const auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() ? (base_dir / path).lexically_normal() : path;
  };

  try {
    if (auto v = r.text("experiment.videos")) {
      cfg.videos.clear();
      for (const auto& item : detail::split_list(*v)) {
        cfg.videos.push_back(item == kSyntheticVideo ? item : resolve(item).string());
      }
    }
    if (auto v = r.text("experiment.methods")) {
      cfg.methods.clear();
      for (const auto& item : detail::split_list(*v)) {
        const auto m = parse_method(item);
        if (std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end()) {
          throw ConfigError("method " + item + " listed twice");
        }
        cfg.methods.push_back(m);
      }
    }
    if (auto v = r.text("experiment.eps")) cfg.eps = Eps::parse(*v);
    r.u64("experiment.seed", cfg.seed);
    if (auto v = r.text("experiment.out_dir")) cfg.out_dir = resolve(*v);

    r.integer("synthetic.width", cfg.synthetic.width);
    r.integer("synthetic.height", cfg.synthetic.height);
    r.integer("synthetic.channels", cfg.synthetic.channels);
    r.integer("synthetic.frames", cfg.synthetic.frames);
    r.integer("synthetic.noise_amplitude", cfg.synthetic.noise_amplitude);
    if (auto v = r.text("synthetic.fps")) cfg.synthetic.frame_rate = parse_frame_rate(*v);

    auto& ch = cfg.channel;
    if (auto v = r.text("channel.source")) {
      if (*v == "two_state") ch.source = ChannelConfig::Source::TwoState;
      else if (*v == "traces") ch.source = ChannelConfig::Source::Traces;
      else throw ConfigError("channel.source must be two_state or traces");
    }
    r.real("channel.high_snr_db", ch.ul_profile.high_snr_db);
    r.real("channel.low_snr_db", ch.ul_profile.low_snr_db);
    r.real("channel.dwell_s", ch.ul_profile.dwell);
    r.real("channel.jitter_std_db", ch.ul_profile.jitter_std_db);
    r.real("channel.dl_high_snr_db", ch.dl_profile.high_snr_db);
    r.real("channel.dl_low_snr_db", ch.dl_profile.low_snr_db);
    r.real("channel.dl_jitter_std_db", ch.dl_profile.jitter_std_db);
    ch.dl_profile.dwell = ch.ul_profile.dwell;
    r.real("channel.duration_s", ch.duration);
    r.real("channel.start_time_s", ch.start_time);
    if (auto v = r.text("channel.ul_trace")) ch.ul_trace = resolve(*v);
    if (auto v = r.text("channel.dl_trace")) ch.dl_trace = resolve(*v);

    if (auto v = r.text("rate_map.ul")) cfg.ul_map = RateMap::parse(*v);
    if (auto v = r.text("rate_map.dl")) cfg.dl_map = RateMap::parse(*v);

    auto& p = cfg.pipeline;
    r.real("pipeline.cn_delay_s", p.cn_delay);
    p.control_delay = p.cn_delay;
    r.real("pipeline.control_delay_s", p.control_delay);
    r.real("pipeline.mec_per_pixel_s", p.mec_per_pixel);
    r.real("pipeline.mec_forward_s", p.mec_forward);
    r.real("pipeline.ue2_upscale_per_pixel_s", p.ue2_upscale_per_pixel);
    r.integer("pipeline.sender_queue_cap", p.sender_queue_cap);
    r.real("pipeline.starvation_horizon_s", p.starvation_horizon);
    if (auto v = r.text("pipeline.ue2_interpolation")) cfg.ue2_interpolation = parse_interpolation(*v);

    r.real("proactive.snr_low_db", cfg.proactive.snr_low_db);
    r.real("proactive.snr_high_db", cfg.proactive.snr_high_db);
    r.integer("proactive.hold_low", cfg.proactive.hold_low);
    r.integer("proactive.hold_high", cfg.proactive.hold_high);

    r.real("abr.latency_trigger_s", cfg.abr.latency_trigger);
    r.real("abr.feedback_delay_s", cfg.abr.feedback_delay);
    r.real("abr.probe_interval_s", cfg.abr.probe_interval);
    r.integer("abr.probe_success_window", cfg.abr.probe_success_window);

    if (auto v = r.text("enhancer.command")) cfg.enhancer.command = detail::split_words(*v);
    if (auto v = r.text("enhancer.tcp")) {
      const auto colon = v->rfind(':');
      if (colon == std::string::npos) throw ConfigError("enhancer.tcp must be host:port");
      cfg.enhancer.tcp_host = v->substr(0, colon);
      cfg.enhancer.tcp_port = static_cast<int>(r.parse_real("enhancer.tcp", v->substr(colon + 1)));
    }
    r.boolean("enhancer.fallback", cfg.enhancer.fallback);
    r.integer("enhancer.timeout_ms", cfg.enhancer.timeout_ms);

    if (auto v = r.text("summary.psnr_thresholds_db")) {
      cfg.psnr_thresholds.clear();
      for (const auto& item : detail::split_list(*v)) cfg.psnr_thresholds.push_back(r.parse_real("summary", item));
    }
    r.done();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  cfg.proactive.eps_down = cfg.eps;
  cfg.abr.eps_down = cfg.eps;
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  std::string text;
  try {
    text = csv::read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_experiment_config(text, path.parent_path(), path.string());
}

}  // namespace semstream
