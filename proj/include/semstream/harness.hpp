#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semstream/channel.hpp"
#include "semstream/config.hpp"
#include "semstream/control.hpp"
#include "semstream/csv.hpp"
#include "semstream/enhancer_client.hpp"
#include "semstream/metrics.hpp"
#include "semstream/simulator.hpp"
#include "semstream/video.hpp"

namespace semstream {

inline constexpr double kSummaryLatencyPercentiles[] = {50, 80, 95, 99, 100};
inline constexpr double kSummaryPsnrPercentiles[] = {5, 20, 50, 80, 95};

struct Distribution {
  std::size_t count = 0;
  std::map<std::string, double> percentiles;  // "p50" ... "max"
};

inline std::string percentile_key(double p) {
  return p >= 100.0 ? "max" : "p" + csv::num(p);
}

inline Distribution describe(std::vector<double> values, std::span<const double> ps) {
  Distribution d;
  d.count = values.size();
  if (values.empty()) return d;
  std::sort(values.begin(), values.end());
  for (double p : ps) d.percentiles[percentile_key(p)] = percentile_nearest_rank(values, p);
  return d;
}

struct MethodSummary {
  std::string method;
  std::string video;  // empty for the pooled per-method entry
  std::size_t frames = 0;
  std::size_t dropped = 0;
  Distribution latency;
  Distribution psnr;
  std::map<std::string, double> fraction_psnr_below;  // threshold text -> fraction of delivered frames
};

struct RunSummary {
  std::string fingerprint;
  std::uint64_t seed = 0;
  std::string eps;
  std::vector<std::string> videos;
  std::vector<MethodSummary> methods;  // pooled over videos
  std::vector<MethodSummary> runs;     // one per (video, method)
};

inline MethodSummary summarize(const std::string& method, const std::string& video,
                               const std::vector<const FrameRecord*>& records,
                               const std::vector<double>& psnr_thresholds) {
  MethodSummary s;
  s.method = method;
  s.video = video;
  s.frames = records.size();
  std::vector<double> lat;
  std::vector<double> q;
  for (const auto* r : records) {
    if (!r->delivered()) {
      ++s.dropped;
      continue;
    }
    lat.push_back(r->end_to_end);
    q.push_back(r->quality.psnr_db);
  }
  for (double th : psnr_thresholds) {
    double frac = 0.0;
    if (!q.empty()) {
      frac = static_cast<double>(std::count_if(q.begin(), q.end(), [th](double v) { return v < th; })) /
             static_cast<double>(q.size());
    }
    s.fraction_psnr_below[csv::num(th)] = frac;
  }
  s.latency = describe(std::move(lat), kSummaryLatencyPercentiles);
  s.psnr = describe(std::move(q), kSummaryPsnrPercentiles);
  return s;
}

// JSON numbers cannot hold +inf; lossless PSNR is written as "inf".
inline nlohmann::json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) return csv::parse_double(j.get<std::string>());
  return j.get<double>();
}

inline nlohmann::json to_json(const Distribution& d) {
  nlohmann::json j = {{"count", d.count}};
  for (const auto& [k, v] : d.percentiles) j[k] = number_json(v);
  return j;
}

inline Distribution distribution_from_json(const nlohmann::json& j) {
  Distribution d;
  d.count = j.at("count").get<std::size_t>();
  for (const auto& [k, v] : j.items()) {
    if (k != "count") d.percentiles[k] = number_from_json(v);
  }
  return d;
}

inline nlohmann::json to_json(const MethodSummary& m) {
  nlohmann::json j = {{"method", m.method}, {"frames", m.frames}, {"dropped", m.dropped},
                      {"latency_s", to_json(m.latency)}, {"psnr_db", to_json(m.psnr)}};
  if (!m.video.empty()) j["video"] = m.video;
  nlohmann::json below = nlohmann::json::object();
  for (const auto& [k, v] : m.fraction_psnr_below) below[k] = v;
  j["fraction_psnr_below"] = below;
  return j;
}

inline MethodSummary method_summary_from_json(const nlohmann::json& j) {
  MethodSummary m;
  m.method = j.at("method").get<std::string>();
  m.video = j.value("video", "");
  m.frames = j.at("frames").get<std::size_t>();
  m.dropped = j.at("dropped").get<std::size_t>();
  m.latency = distribution_from_json(j.at("latency_s"));
  m.psnr = distribution_from_json(j.at("psnr_db"));
  for (const auto& [k, v] : j.at("fraction_psnr_below").items()) m.fraction_psnr_below[k] = v.get<double>();
  return m;
}

inline nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json j = {{"fingerprint", s.fingerprint}, {"seed", s.seed}, {"eps", s.eps}, {"videos", s.videos}};
  j["methods"] = nlohmann::json::array();
  for (const auto& m : s.methods) j["methods"].push_back(to_json(m));
  j["runs"] = nlohmann::json::array();
  for (const auto& m : s.runs) j["runs"].push_back(to_json(m));
  return j;
}

inline RunSummary run_summary_from_json(const nlohmann::json& j) {
  RunSummary s;
  s.fingerprint = j.at("fingerprint").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.eps = j.at("eps").get<std::string>();
  s.videos = j.at("videos").get<std::vector<std::string>>();
  for (const auto& m : j.at("methods")) s.methods.push_back(method_summary_from_json(m));
  for (const auto& m : j.value("runs", nlohmann::json::array())) s.runs.push_back(method_summary_from_json(m));
  return s;
}

inline RunSummary load_run_summary(const std::filesystem::path& path) {
  try {
    return run_summary_from_json(nlohmann::json::parse(csv::read_text(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

struct ChannelTraces {
  SnrTrace ul;
  SnrTrace dl;
};

inline ChannelTraces build_traces(const ExperimentConfig& cfg) {
  const auto& ch = cfg.channel;
  ChannelTraces t;
  if (ch.source == ChannelConfig::Source::Traces) {
    t.ul = load_trace(ch.ul_trace, Direction::UL);
    t.dl = load_trace(ch.dl_trace, Direction::DL);
  } else {
    auto ul = ch.ul_profile;
    auto dl = ch.dl_profile;
    ul.seed = cfg.seed;
    dl.seed = cfg.seed;
    t.ul = generate_two_state(ul, ch.duration, Direction::UL);
    t.dl = generate_two_state(dl, ch.duration, Direction::DL);
  }
  t.ul.start_time = ch.start_time;
  t.dl.start_time = ch.start_time;
  return t;
}

inline std::vector<VideoSource> load_videos(const ExperimentConfig& cfg) {
  std::vector<VideoSource> out;
  std::map<std::string, int> seen;
  for (const auto& v : cfg.videos) {
    VideoSource video;
    if (v == kSyntheticVideo) {
      auto spec = cfg.synthetic;
      spec.seed = cfg.seed;
      video = synthetic_video(spec);
    } else {
      video = load_video(v);
    }
    if (const int n = seen[video.source_id]++; n > 0) video.source_id += "_" + std::to_string(n);
    out.push_back(std::move(video));
  }
  return out;
}

// Opens one plugin handle, or nullptr when none is configured.
inline std::shared_ptr<plugin::EnhancerClient> open_enhancer(const EnhancerConfig& e) {
  if (!e.configured()) return nullptr;
  const std::chrono::milliseconds timeout(e.timeout_ms);
  if (!e.command.empty()) {
    return std::make_shared<plugin::EnhancerClient>(plugin::ChildProcessTransport::spawn(e.command, timeout));
  }
  return std::make_shared<plugin::EnhancerClient>(plugin::connect_tcp(e.tcp_host, e.tcp_port, timeout));
}

struct MethodSetup {
  Controller controller;
  PipelineMode mode;
};

inline MethodSetup method_setup(Method m, const ExperimentConfig& cfg, bool have_enhancer) {
  auto proactive = cfg.proactive;
  proactive.eps_down = cfg.eps;
  auto abr = cfg.abr;
  abr.eps_down = cfg.eps;
  switch (m) {
    case Method::GAI:
      return {ProactiveController(proactive, cfg.pipeline.control_delay),
              have_enhancer ? PipelineMode::GAI : PipelineMode::NullGAI};
    case Method::NoGAI: return {ProactiveController(proactive, cfg.pipeline.control_delay), PipelineMode::Trad};
    case Method::ABR: return {AbrController(abr), PipelineMode::Trad};
    case Method::TradFixed: return {FixedEps{cfg.eps}, PipelineMode::Trad};
  }
  throw ConfigError("unknown method");
}

// Runs one (video, method) pair, opening an enhancer handle when needed.
inline PipelineResult run_method(const VideoSource& video, const ChannelTraces& traces, Method m,
                                 const ExperimentConfig& cfg, bool keep_frames = false) {
  std::shared_ptr<plugin::EnhancerClient> client;
  bool fell_back = false;
  if (m == Method::GAI && cfg.enhancer.configured()) {
    try {
      client = open_enhancer(cfg.enhancer);
    } catch (const EnhancerUnavailable&) {
      if (!cfg.enhancer.fallback) throw;
      fell_back = true;
    }
  }
  auto setup = method_setup(m, cfg, client != nullptr);
  PipelineOptions opt;
  opt.ue2_interpolation = cfg.ue2_interpolation;
  opt.enhancer = client ? Upscaler::enhancer(client) : Upscaler::null_enhancer();
  opt.enhancer_fallback = cfg.enhancer.fallback;
  opt.keep_delivered_frames = keep_frames;
  auto result = run_pipeline(video, traces.ul, traces.dl, cfg.ul_map, cfg.dl_map, cfg.pipeline,
                             std::move(setup.controller), setup.mode, opt);
  result.enhancer_fell_back = result.enhancer_fell_back || fell_back;
  return result;
}

inline std::string timeseries_csv(const std::vector<FrameRecord>& records) {
  csv::Table t({"time_s", "snr_db", "psnr_db"});
  for (const auto& r : records) {
    if (!r.delivered()) continue;
    t.add({csv::num(r.capture_time), csv::num(r.ul_snr_db), format_psnr(r.quality.psnr_db)});
  }
  return t.text();
}

inline std::string cdf_csv(std::vector<double> values, const std::string& name) {
  if (values.empty()) return csv::Table({"value", "cumulative_fraction"}).text();
  return cdf(std::move(values), name).to_csv();
}

inline std::string summary_table_text(const RunSummary& s) {
  csv::Table t({"method", "frames", "dropped", "lat_p50_s", "lat_p80_s", "lat_p95_s", "lat_p99_s", "lat_max_s",
                "psnr_p5_db", "psnr_p50_db"});
  const auto get = [](const Distribution& d, const std::string& k) {
    auto it = d.percentiles.find(k);
    return it == d.percentiles.end() ? std::string() : csv::num(it->second);
  };
  for (const auto& m : s.methods) {
    t.add({m.method, std::to_string(m.frames), std::to_string(m.dropped), get(m.latency, "p50"),
           get(m.latency, "p80"), get(m.latency, "p95"), get(m.latency, "p99"), get(m.latency, "max"),
           get(m.psnr, "p5"), get(m.psnr, "p50")});
  }
  return t.text();
}

struct ExperimentResult {
  RunSummary summary;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> notes;  // e.g. enhancer fallback, trace clamping
};

// Runs every (video, method) pair and writes, under cfg.out_dir:
//   records/<video>__<method>.csv        per-frame FrameRecord rows
//   latency_cdf/<video>__<method>.csv    end-to-end latency CDF
//   psnr_cdf/<video>__<method>.csv       delivered-frame PSNR CDF
//   controller_log/<video>__<method>.csv control commands
//   timeseries/<video>__<method>.csv     capture time, UL SNR, PSNR
//   summary.json, summary.csv
// On failure every file written so far is removed.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  auto& written = result.files;
  const auto emit = [&](const std::filesystem::path& rel, const std::string& text) {
    const auto path = cfg.out_dir / rel;
    csv::write_atomic(path, text);
    written.push_back(path);
  };

  try {
    const auto traces = build_traces(cfg);
    const auto videos = load_videos(cfg);
    const double sim_span = -cfg.channel.start_time;
    for (const auto& v : videos) {
      const double end = v.frames.empty() ? 0.0 : v.frames.back().capture_time();
      if (end + sim_span > traces.ul.duration()) {
        result.notes.push_back("video " + v.source_id + " outruns the UL trace; the last SNR sample is held");
      }
    }

    RunSummary& summary = result.summary;
    summary.fingerprint = cfg.fingerprint();
    summary.seed = cfg.seed;
    summary.eps = cfg.eps.str();
    for (const auto& v : videos) summary.videos.push_back(v.source_id);

    std::map<Method, std::vector<FrameRecord>> pooled;
    for (const auto& video : videos) {
      for (const Method m : cfg.methods) {
        const std::string name = video.source_id + "__" + std::string(to_string(m));
        PipelineResult run;
        try {
          run = run_method(video, traces, m, cfg);
        } catch (const ConfigError& e) {
          throw ConfigError("[" + name + "] " + e.what());
        } catch (const std::exception& e) {
          throw Error("[" + name + "] " + e.what());
        }
        if (run.enhancer_fell_back) result.notes.push_back(name + ": enhancer unavailable, fell back to NullEnhancer");

        std::vector<double> lat;
        std::vector<double> q;
        for (const auto& r : run.records) {
          if (!r.delivered()) continue;
          lat.push_back(r.end_to_end);
          q.push_back(r.quality.psnr_db);
        }
        emit(std::filesystem::path("records") / (name + ".csv"), records_csv(run.records));
        emit(std::filesystem::path("latency_cdf") / (name + ".csv"), cdf_csv(std::move(lat), "latency_s"));
        emit(std::filesystem::path("psnr_cdf") / (name + ".csv"), cdf_csv(std::move(q), "psnr_db"));
        emit(std::filesystem::path("controller_log") / (name + ".csv"), control_log_csv(run.control_log));
        emit(std::filesystem::path("timeseries") / (name + ".csv"), timeseries_csv(run.records));

        std::vector<const FrameRecord*> ptrs;
        for (const auto& r : run.records) ptrs.push_back(&r);
        summary.runs.push_back(summarize(std::string(to_string(m)), video.source_id, ptrs, cfg.psnr_thresholds));
        auto& pool = pooled[m];
        pool.insert(pool.end(), run.records.begin(), run.records.end());
      }
    }
    for (const Method m : cfg.methods) {
      std::vector<const FrameRecord*> ptrs;
      for (const auto& r : pooled[m]) ptrs.push_back(&r);
      summary.methods.push_back(summarize(std::string(to_string(m)), "", ptrs, cfg.psnr_thresholds));
    }
    emit("summary.json", to_json(summary).dump(2) + "\n");
    emit("summary.csv", summary_table_text(summary));
  } catch (...) {
    for (const auto& p : written) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
    throw;
  }
  return result;
}

// ---------------------------------------------------------------------------

struct ComparisonRow {
  std::string label;
  std::map<std::string, double> latency_delta;  // vs the reference row
  std::map<std::string, double> psnr_delta;
  double fraction_psnr_below_25 = 0.0;
};

struct HeadlineCheck {
  std::string description;
  bool holds = false;
};

struct Comparison {
  std::string reference;
  std::vector<ComparisonRow> rows;
  std::vector<HeadlineCheck> checks;

  std::string to_csv() const {
    csv::Table t({"label", "d_lat_p50_s", "d_lat_p80_s", "d_lat_p95_s", "d_lat_p99_s", "d_lat_max_s",
                  "d_psnr_p5_db", "d_psnr_p50_db", "frac_psnr_below_25"});
    const auto get = [](const std::map<std::string, double>& m, const std::string& k) {
      auto it = m.find(k);
      return it == m.end() ? std::string() : csv::num(it->second);
    };
    for (const auto& r : rows) {
      t.add({r.label, get(r.latency_delta, "p50"), get(r.latency_delta, "p80"), get(r.latency_delta, "p95"),
             get(r.latency_delta, "p99"), get(r.latency_delta, "max"), get(r.psnr_delta, "p5"),
             get(r.psnr_delta, "p50"), csv::num(r.fraction_psnr_below_25)});
    }
    return t.text();
  }

  std::string to_text() const {
    std::string s = "reference: " + reference + "\n" + to_csv();
    for (const auto& c : checks) s += std::string(c.holds ? "[yes] " : "[no]  ") + c.description + "\n";
    return s;
  }
};

namespace detail {

inline double delta(const Distribution& a, const Distribution& b, const std::string& key) {
  const auto ia = a.percentiles.find(key);
  const auto ib = b.percentiles.find(key);
  if (ia == a.percentiles.end() || ib == b.percentiles.end()) return std::nan("");
  if (ia->second == ib->second) return 0.0;  // also covers inf - inf
  return ia->second - ib->second;
}

inline bool is_proactive(const std::string& method) {
  return method.rfind("GAI", 0) == 0 || method.rfind("NoGAI", 0) == 0;
}

}  // namespace detail

// Percentile deltas of every method against the first one, plus the latency
// ordering between ABR and each proactive method and the PSNR < 25 dB share.
inline Comparison compare_methods(const std::vector<RunSummary>& summaries) {
  if (summaries.empty()) throw IncomparableRuns("no summaries to compare");
  for (const auto& s : summaries) {
    if (s.fingerprint != summaries.front().fingerprint || s.seed != summaries.front().seed) {
      throw IncomparableRuns("summaries come from different configurations or seeds (" + s.fingerprint + " vs " +
                             summaries.front().fingerprint + ")");
    }
  }
  std::vector<std::pair<std::string, const MethodSummary*>> entries;
  std::map<std::string, int> seen;
  for (const auto& s : summaries) {
    for (const auto& m : s.methods) {
      const int n = seen[m.method]++;
      entries.emplace_back(n == 0 ? m.method : m.method + "#" + std::to_string(n + 1), &m);
    }
  }
  if (entries.size() < 2) throw IncomparableRuns("need at least two method summaries");

  Comparison c;
  c.reference = entries.front().first;
  const auto& ref = *entries.front().second;
  for (const auto& [label, m] : entries) {
    ComparisonRow row;
    row.label = label;
    for (const auto* k : {"p50", "p80", "p95", "p99", "max"}) row.latency_delta[k] = detail::delta(m->latency, ref.latency, k);
    for (const auto* k : {"p5", "p50"}) row.psnr_delta[k] = detail::delta(m->psnr, ref.psnr, k);
    auto it = m->fraction_psnr_below.find("25");
    row.fraction_psnr_below_25 = it == m->fraction_psnr_below.end() ? std::nan("") : it->second;
    c.rows.push_back(std::move(row));
  }
  for (const auto& [abr_label, abr] : entries) {
    if (abr->method != "ABR") continue;
    for (const auto& [label, m] : entries) {
      if (!detail::is_proactive(m->method)) continue;
      const auto get = [](const MethodSummary* s, const char* k) {
        auto it = s->latency.percentiles.find(k);
        return it == s->latency.percentiles.end() ? std::nan("") : it->second;
      };
      c.checks.push_back({abr_label + " max > " + label + " max", get(abr, "max") > get(m, "max")});
      c.checks.push_back({abr_label + " p99 > " + label + " p99", get(abr, "p99") > get(m, "p99")});
    }
  }
  for (const auto& row : c.rows) {
    c.checks.push_back({row.label + " frames with PSNR < 25 dB: " + csv::num(row.fraction_psnr_below_25), true});
  }
  return c;
}

}  // namespace semstream
