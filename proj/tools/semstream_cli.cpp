#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semstream/semstream.hpp"

namespace fs = std::filesystem;
using namespace semstream;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

bool is_image_path(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

ExperimentConfig load_with_overrides(const std::string& path, std::optional<std::uint64_t> seed,
                                     std::optional<std::string> out) {
  auto cfg = load_experiment_config(path);
  if (seed) cfg.seed = *seed;
  if (out) cfg.out_dir = *out;
  return cfg;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, std::optional<std::string> out) {
  const auto cfg = load_with_overrides(config, seed, out);
  const auto result = run_experiment(cfg);
  for (const auto& note : result.notes) std::cerr << "note: " << note << "\n";
  std::cout << summary_table_text(result.summary);
  std::cout << "wrote " << result.files.size() << " files to " << cfg.out_dir.string() << "\n";
  return kExitOk;
}

int cmd_gen_trace(const TwoStateProfile& profile, double duration, const std::string& direction,
                  const std::string& out) {
  Direction dir = Direction::UL;
  if (direction == "dl" || direction == "DL") dir = Direction::DL;
  else if (direction != "ul" && direction != "UL") throw ConfigError("--direction must be ul or dl");
  const auto trace = generate_two_state(profile, duration, dir);
  if (out.empty() || out == "-") {
    std::cout << trace.to_csv();
  } else {
    csv::write_atomic(out, trace.to_csv());
  }
  return kExitOk;
}

void print_quality(const QualityScore& q) {
  std::cout << "mse=" << csv::num(q.mse) << " psnr_db=" << format_psnr(q.psnr_db) << "\n";
}

int cmd_metrics(const std::string& a, const std::string& b) {
  if (is_image_path(a) && is_image_path(b)) {
    print_quality(psnr(load_frame(a), load_frame(b)));
    return kExitOk;
  }
  const auto va = load_video(a);
  const auto vb = load_video(b);
  if (va.frames.size() != vb.frames.size()) {
    throw DimensionMismatch("sequences have " + std::to_string(va.frames.size()) + " and " +
                            std::to_string(vb.frames.size()) + " frames");
  }
  for (std::size_t i = 0; i < va.frames.size(); ++i) {
    std::cout << "frame=" << i << " ";
    print_quality(psnr(va.frames[i], vb.frames[i]));
  }
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& files, const std::string& out) {
  std::vector<RunSummary> summaries;
  for (const auto& f : files) summaries.push_back(load_run_summary(f));
  const auto c = compare_methods(summaries);
  std::cout << c.to_text();
  if (!out.empty()) csv::write_atomic(out, c.to_csv());
  return kExitOk;
}

int cmd_export_vmaf(const std::string& config, const std::string& method, std::optional<std::uint64_t> seed,
                    const std::string& original, const std::string& delivered, const std::string& out) {
  if (out.empty()) throw ConfigError("export-vmaf needs --out");
  std::size_t pairs = 0;
  if (!config.empty()) {
    auto cfg = load_with_overrides(config, seed, std::nullopt);
    cfg.validate();
    const Method m = parse_method(method);
    const auto traces = build_traces(cfg);
    const auto videos = load_videos(cfg);
    for (const auto& video : videos) {
      const auto run = run_method(video, traces, m, cfg, true);
      std::vector<Frame> originals;
      for (const auto& r : run.records) {
        if (r.delivered()) originals.push_back(video.frames[r.frame_id]);
      }
      const fs::path dir = videos.size() == 1 ? fs::path(out) : fs::path(out) / video.source_id;
      export_vmaf_pair(originals, run.delivered_frames, dir);
      pairs += originals.size();
    }
  } else {
    if (original.empty() || delivered.empty()) {
      throw ConfigError("export-vmaf needs --config/--method or --original/--delivered");
    }
    const auto a = load_video(original);
    const auto b = load_video(delivered);
    export_vmaf_pair(a.frames, b.frames, out);
    pairs = a.frames.size();
  }
  std::cout << "exported " << pairs << " frame pairs to " << out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven simulator of proactive and reactive live video streaming"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  auto* run = app.add_subcommand("run", "Run the experiment matrix described by a config file");
  run->add_option("--config", config, "Experiment config file")->required();
  run->add_option("--seed", seed, "Override experiment.seed");
  run->add_option("--out", out, "Override experiment.out_dir");

  TwoStateProfile profile;
  double duration = 60.0;
  std::string direction = "ul";
  std::string trace_out;
  auto* gen = app.add_subcommand("gen-trace", "Write a two-state SNR trace as timestamp_ms,snr_db CSV");
  gen->add_option("--high", profile.high_snr_db, "High-state SNR (dB)")->capture_default_str();
  gen->add_option("--low", profile.low_snr_db, "Low-state SNR (dB)")->capture_default_str();
  gen->add_option("--dwell", profile.dwell, "Seconds per state")->capture_default_str();
  gen->add_option("--duration", duration, "Trace length (s)")->capture_default_str();
  gen->add_option("--jitter", profile.jitter_std_db, "Gaussian jitter std (dB)")->capture_default_str();
  gen->add_option("--seed", profile.seed, "Jitter seed")->capture_default_str();
  gen->add_option("--direction", direction, "ul or dl")->capture_default_str();
  gen->add_option("--out", trace_out, "Output file (stdout when omitted)");

  std::string metric_a;
  std::string metric_b;
  auto* metrics = app.add_subcommand("metrics", "MSE/PSNR between two frames (.ppm/.pgm) or two manifests");
  metrics->add_option("reference", metric_a, "Reference frame or manifest")->required();
  metrics->add_option("test", metric_b, "Test frame or manifest")->required();

  std::vector<std::string> summaries;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Compare methods across summary.json files");
  compare->add_option("summaries", summaries, "summary.json files")->required();
  compare->add_option("--out", compare_out, "Also write the table as CSV");

  std::string vmaf_config;
  std::string vmaf_method = "GAI";
  std::optional<std::uint64_t> vmaf_seed;
  std::string vmaf_original;
  std::string vmaf_delivered;
  std::string vmaf_out;
  auto* vmaf = app.add_subcommand("export-vmaf", "Export original/delivered frame pairs for an external VMAF tool");
  vmaf->add_option("--config", vmaf_config, "Experiment config; the method is re-run to collect delivered frames");
  vmaf->add_option("--method", vmaf_method, "GAI, NoGAI, ABR or TradFixed")->capture_default_str();
  vmaf->add_option("--seed", vmaf_seed, "Override experiment.seed");
  vmaf->add_option("--original", vmaf_original, "Original sequence manifest");
  vmaf->add_option("--delivered", vmaf_delivered, "Delivered sequence manifest");
  vmaf->add_option("--out", vmaf_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, seed, out);
    if (*gen) return cmd_gen_trace(profile, duration, direction, trace_out);
    if (*metrics) return cmd_metrics(metric_a, metric_b);
    if (*compare) return cmd_compare(summaries, compare_out);
    if (*vmaf) return cmd_export_vmaf(vmaf_config, vmaf_method, vmaf_seed, vmaf_original, vmaf_delivered, vmaf_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
