#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "semstream/config.hpp"
#include "semstream/harness.hpp"
#include "semstream/video.hpp"

using namespace semstream;
namespace fs = std::filesystem;

namespace {

// 32x24 RGB frames (18,432 bits) over a fast-switching two-state channel.
std::string small_config(const std::string& methods, const std::string& extra = "") {
  return "[experiment]\n"
         "methods = " + methods + "\n"
         "eps = 1/4\n"
         "seed = 3\n"
         "[synthetic]\nwidth = 32\nheight = 24\nframes = 60\nfps = 30\n"
         "[channel]\ndwell_s = 1\njitter_std_db = 1\nduration_s = 3\nstart_time_s = -0.5\n"
         "[rate_map]\nul = -inf:1.5e5, 10:4e5, 18:1e6\ndl = -inf:1e6, 10:2e6, 18:5e6\n"
         "[proactive]\nhold_high = 20\n"
         "[abr]\nprobe_interval_s = 0.5\n" +
         extra;
}

ExperimentConfig small(const std::string& methods, const fs::path& out, const std::string& extra = "") {
  auto cfg = parse_experiment_config(small_config(methods, extra), out.parent_path());
  cfg.out_dir = out;
  return cfg;
}

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv::read_text(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST(Config, DefaultsWhenEmpty) {
  const auto cfg = parse_experiment_config("", ".");
  EXPECT_EQ(cfg.videos, std::vector<std::string>{"synthetic"});
  EXPECT_EQ(cfg.methods.size(), 4u);
  EXPECT_EQ(cfg.eps, Eps(1, 16));
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ParsesDeskScenario) {
  const auto cfg = load_experiment_config(fs::path(SEMSTREAM_SOURCE_DIR) / "scenarios" / "desk.cfg");
  EXPECT_EQ(cfg.seed, 1u);
  EXPECT_EQ(cfg.channel.ul_profile.high_snr_db, 22);
  EXPECT_EQ(cfg.channel.ul_profile.low_snr_db, 6);
  EXPECT_EQ(cfg.channel.start_time, -10);
  EXPECT_EQ(cfg.pipeline.sender_queue_cap, 120);
  EXPECT_EQ(cfg.proactive.eps_down, Eps(1, 16));
  EXPECT_EQ(cfg.abr.eps_down, Eps(1, 16));
  EXPECT_EQ(bitrate_at(cfg.ul_map, 22), 60e6);
  EXPECT_EQ(cfg.out_dir.filename(), "desk");
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_experiment_config("[experiment]\nbogus = 1\n", "."), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\nmethods = GAI, GAI\n", "."), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\nmethods = Magic\n", "."), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\neps = 2\n", "."), ConfigError);
  EXPECT_THROW(parse_experiment_config("[pipeline]\ncn_delay_s = fast\n", "."), ConfigError);
  EXPECT_THROW(parse_experiment_config("no equals sign\n", "."), ConfigError);
  EXPECT_THROW(parse_experiment_config("[channel]\nsource = radio\n", "."), ConfigError);
  EXPECT_THROW(load_experiment_config("/nonexistent/x.cfg"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\neps = 1\n", ".").validate(), ConfigError);
  EXPECT_THROW(parse_experiment_config("[channel]\nstart_time_s = 1\n", ".").validate(), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\nvideos = missing.txt\n", "/nonexistent").validate(),
               ConfigError);
  EXPECT_NO_THROW(parse_experiment_config("[experiment]\nmethods = TradFixed\neps = 1\n", ".").validate());
}

TEST(Config, FingerprintIgnoresMethodsAndOutDir) {
  auto a = parse_experiment_config(small_config("GAI"), ".");
  auto b = parse_experiment_config(small_config("ABR, NoGAI"), ".");
  b.out_dir = "elsewhere";
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  b.pipeline.cn_delay = 0.02;
  EXPECT_NE(a.fingerprint(), b.fingerprint());
}

TEST(Experiment, WritesOneArtifactSetPerVideoAndMethod) {
  const auto dir = testutil::scratch_dir("exp_artifacts");
  VideoSource v = synthetic_video(SyntheticVideoSpec{16, 12, 3, 20, FrameRate{30, 1}, 9, 8});
  v.source_id = "clip";
  const auto manifest = write_video(v, dir / "clip");
  auto cfg = small("GAI, ABR", dir / "out");
  cfg.videos = {std::string(kSyntheticVideo), manifest.string()};
  const auto res = run_experiment(cfg);
  for (const auto* sub : {"records", "latency_cdf", "psnr_cdf", "controller_log", "timeseries"}) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir / "out" / sub)) n += e.path().extension() == ".csv" ? 1 : 0;
    EXPECT_EQ(n, 4u) << sub;
  }
  EXPECT_TRUE(fs::exists(dir / "out" / "records" / "clip__ABR.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
  EXPECT_EQ(res.summary.runs.size(), 4u);
  ASSERT_EQ(res.summary.methods.size(), 2u);
  EXPECT_EQ(res.summary.methods[0].frames, 80u);
}

TEST(Experiment, FixedFullEpsDeliversLosslessFrames) {
  const auto dir = testutil::scratch_dir("exp_fixed_full");
  auto cfg = small("TradFixed", dir / "out", "");
  cfg.eps = Eps::full();
  const auto res = run_experiment(cfg);
  const auto& m = res.summary.methods.at(0);
  EXPECT_EQ(m.psnr.percentiles.at("p5"), std::numeric_limits<double>::infinity());
  const auto rows = read_rows(dir / "out" / "records" / "synthetic__TradFixed.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][1] != "full") continue;
    EXPECT_EQ(rows[i][10], "0");
    EXPECT_EQ(rows[i][11], "inf");
  }
  const auto json = csv::read_text(dir / "out" / "summary.json");
  EXPECT_NE(json.find("\"inf\""), std::string::npos);
  EXPECT_EQ(load_run_summary(dir / "out" / "summary.json").methods.at(0).psnr.percentiles.at("p50"),
            std::numeric_limits<double>::infinity());
}

TEST(Experiment, SummaryPercentilesRecomputeFromRecords) {
  const auto dir = testutil::scratch_dir("exp_recompute");
  const auto res = run_experiment(small("NoGAI, ABR", dir / "out"));
  for (const auto& m : res.summary.runs) {
    const auto rows = read_rows(dir / "out" / "records" / (m.video + "__" + m.method + ".csv"));
    ASSERT_EQ(rows[0][9], "end_to_end_s");
    std::vector<double> lat, q;
    std::size_t dropped = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i][9].empty()) {
        ++dropped;
        continue;
      }
      lat.push_back(std::stod(rows[i][9]));
      q.push_back(rows[i][11] == "inf" ? std::numeric_limits<double>::infinity() : std::stod(rows[i][11]));
    }
    EXPECT_EQ(m.dropped, dropped);
    EXPECT_EQ(m.frames, rows.size() - 1);
    std::sort(lat.begin(), lat.end());
    std::sort(q.begin(), q.end());
    EXPECT_EQ(m.latency.percentiles.at("max"), lat.back());
    EXPECT_EQ(m.latency.percentiles.at("p50"), percentile_nearest_rank(lat, 50));
    EXPECT_EQ(m.psnr.percentiles.at("p5"), percentile_nearest_rank(q, 5));
    const auto below = static_cast<double>(std::count_if(q.begin(), q.end(), [](double v) { return v < 25; }));
    EXPECT_DOUBLE_EQ(m.fraction_psnr_below.at("25"), below / static_cast<double>(q.size()));
  }
}

TEST(Experiment, SameConfigGivesIdenticalFiles) {
  const auto a = testutil::scratch_dir("exp_det_a");
  const auto b = testutil::scratch_dir("exp_det_b");
  const auto ra = run_experiment(small("GAI, NoGAI, ABR, TradFixed", a / "out"));
  const auto rb = run_experiment(small("GAI, NoGAI, ABR, TradFixed", b / "out"));
  ASSERT_EQ(ra.files.size(), rb.files.size());
  for (std::size_t i = 0; i < ra.files.size(); ++i) {
    ASSERT_EQ(fs::relative(ra.files[i], a / "out"), fs::relative(rb.files[i], b / "out"));
    EXPECT_EQ(csv::read_text(ra.files[i]), csv::read_text(rb.files[i])) << ra.files[i];
  }
}

TEST(Experiment, FailureRemovesWrittenFiles) {
  const auto dir = testutil::scratch_dir("exp_fail");
  auto cfg = small("NoGAI, GAI", dir / "out", "[enhancer]\ncommand = /nonexistent/enhancer\ntimeout_ms = 500\n");
  EXPECT_THROW(run_experiment(cfg), Error);
  EXPECT_FALSE(fs::exists(dir / "out" / "records" / "synthetic__NoGAI.csv"));
  EXPECT_FALSE(fs::exists(dir / "out" / "summary.json"));
}

TEST(Experiment, UnavailableEnhancerFallsBackWhenAllowed) {
  const auto dir = testutil::scratch_dir("exp_fallback");
  auto cfg = small("GAI", dir / "out",
                   "[enhancer]\ncommand = /nonexistent/enhancer\nfallback = true\ntimeout_ms = 500\n");
  const auto res = run_experiment(cfg);
  EXPECT_FALSE(res.notes.empty());
  auto null_cfg = small("GAI", dir / "null");
  const auto ref = run_experiment(null_cfg);
  EXPECT_EQ(csv::read_text(dir / "out" / "records" / "synthetic__GAI.csv"),
            csv::read_text(dir / "null" / "records" / "synthetic__GAI.csv"));
}

TEST(Experiment, PluginEnhancerRunsThroughTheHarness) {
  const auto dir = testutil::scratch_dir("exp_plugin");
  auto cfg = small("GAI", dir / "out", std::string("[enhancer]\ncommand = ") + SEMSTREAM_ENHANCER_DOUBLE + " bicubic\n");
  const auto res = run_experiment(cfg);
  const auto rows = read_rows(dir / "out" / "records" / "synthetic__GAI.csv");
  EXPECT_NE(std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r[1] == "enhanced"; }), rows.end());
}

TEST(Compare, SelfComparisonHasZeroDeltas) {
  const auto dir = testutil::scratch_dir("cmp_self");
  const auto res = run_experiment(small("GAI, ABR", dir / "out"));
  const auto s = load_run_summary(dir / "out" / "summary.json");
  EXPECT_EQ(s.fingerprint, res.summary.fingerprint);
  const auto c = compare_methods({s, s});
  EXPECT_EQ(c.reference, "GAI");
  ASSERT_EQ(c.rows.size(), 4u);
  EXPECT_EQ(c.rows[2].label, "GAI#2");
  for (const auto& [k, v] : c.rows[2].latency_delta) EXPECT_EQ(v, 0.0) << k;
  for (const auto& [k, v] : c.rows[0].psnr_delta) EXPECT_EQ(v, 0.0) << k;
  EXPECT_FALSE(c.checks.empty());
  EXPECT_NE(c.to_text().find("ABR max > GAI max"), std::string::npos);
}

TEST(Compare, RefusesDifferentSeedsOrConfigs) {
  const auto dir = testutil::scratch_dir("cmp_refuse");
  auto a = small("GAI, ABR", dir / "a");
  auto b = small("GAI, ABR", dir / "b");
  b.seed = 4;
  const auto sa = run_experiment(a).summary;
  const auto sb = run_experiment(b).summary;
  EXPECT_THROW(compare_methods({sa, sb}), IncomparableRuns);
  EXPECT_THROW(compare_methods({}), IncomparableRuns);
  auto one = sa;
  one.methods.resize(1);
  EXPECT_THROW(compare_methods({one}), IncomparableRuns);
  EXPECT_THROW(load_run_summary(dir / "missing.json"), Error);
}
