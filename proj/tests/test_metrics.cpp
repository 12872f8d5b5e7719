#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "helpers.hpp"
#include "semstream/metrics.hpp"
#include "semstream/netpbm.hpp"

using namespace semstream;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Naive per-channel triple loop, accumulated in long double.
long double mse_oracle(const Frame& a, const Frame& b) {
  long double sum = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < a.width(); ++x) {
        const long double d = static_cast<long double>(a.at(x, y, c)) - b.at(x, y, c);
        sum += d * d;
      }
    }
  }
  return sum / (static_cast<long double>(a.width()) * a.height() * a.channels());
}

}  // namespace

TEST(Mse, IdenticalFramesScoreZeroAndInfinitePsnr) {
  std::mt19937_64 rng(21);
  const auto f = testutil::random_frame(rng, 9, 4, 3);
  EXPECT_EQ(mse(f, f), 0.0);
  const auto q = psnr(f, f);
  EXPECT_TRUE(std::isinf(q.psnr_db) && q.psnr_db > 0);
  EXPECT_EQ(q.max_i, 255.0);
  EXPECT_TRUE(q.lossless());
}

TEST(Mse, ExtremesOfOnePixel) {
  const Frame black(1, 1, 1, {0});
  const Frame white(1, 1, 1, {255});
  EXPECT_EQ(mse(black, white), 65025.0);
  EXPECT_EQ(psnr(black, white).psnr_db, 0.0);
}

TEST(Mse, TwentyDecibelsAtOneHundredthOfPeakPower) {
  EXPECT_NEAR(psnr_from_mse(650.25), 20.0, 1e-12);
  EXPECT_EQ(psnr_from_mse(0.0), kInf);
}

TEST(Mse, AgreesWithBruteForceOracle) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 16);
    const int h = 1 + static_cast<int>(rng() % 16);
    const int c = trial % 2 ? 3 : 1;
    const auto a = testutil::random_frame(rng, w, h, c);
    const auto b = testutil::random_frame(rng, w, h, c);
    ASSERT_EQ(mse(a, b), static_cast<double>(mse_oracle(a, b)));
  }
}

TEST(Mse, ShapeMismatchThrows) {
  EXPECT_THROW(mse(Frame::blank(2, 2, 1), Frame::blank(2, 2, 3)), DimensionMismatch);
  EXPECT_THROW(psnr(Frame::blank(2, 2, 1), Frame::blank(2, 3, 1)), DimensionMismatch);
}

TEST(Mse, SymmetricOnRandomPairs) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = testutil::random_frame(rng, 5, 7, 3);
    const auto b = testutil::random_frame(rng, 5, 7, 3);
    EXPECT_EQ(psnr(a, b).psnr_db, psnr(b, a).psnr_db);
  }
}

TEST(Cdf, SortsAndAssignsRankFractions) {
  const auto s = cdf({3, 1, 2}, "x");
  EXPECT_EQ(s.sorted_values, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(s.cumulative_fraction, (std::vector<double>{1.0 / 3, 2.0 / 3, 1.0}));
  const auto one = cdf({5}, "x");
  EXPECT_EQ(one.cumulative_fraction, (std::vector<double>{1.0}));
  EXPECT_THROW(cdf({}, "x"), EmptySeries);
}

TEST(Cdf, InfinitySortsLastAndSerialisesAsInf) {
  const auto s = cdf({kInf, 30, 20}, "psnr_db");
  EXPECT_EQ(s.sorted_values.back(), kInf);
  EXPECT_EQ(s.to_csv(), "value,cumulative_fraction\n20,0.3333333333333333\n30,0.6666666666666666\ninf,1\n");
}

TEST(Cdf, FractionBelowMatchesHandCount) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> d(10, 40);
  std::vector<double> v;
  for (int i = 0; i < 100; ++i) v.push_back(i % 10 == 0 ? kInf : d(rng));
  v[5] = 25.0;  // exactly at the threshold is not below it
  int below = 0;
  for (double x : v) below += x < 25.0 ? 1 : 0;
  EXPECT_DOUBLE_EQ(cdf(v, "psnr_db").fraction_below(25.0), below / 100.0);
}

TEST(Cdf, FractionsNonDecreasingAndEndAtOne) {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + rng() % 200);
    for (auto& x : v) x = static_cast<double>(rng() % 1000) / 10.0;
    const auto s = cdf(v, "x");
    EXPECT_EQ(s.cumulative_fraction.back(), 1.0);
    EXPECT_TRUE(std::is_sorted(s.sorted_values.begin(), s.sorted_values.end()));
    EXPECT_TRUE(std::is_sorted(s.cumulative_fraction.begin(), s.cumulative_fraction.end()));
  }
}

TEST(Percentile, NearestRank) {
  const std::vector<double> v{15, 20, 35, 40, 50};
  EXPECT_EQ(percentile_nearest_rank(v, 5), 15);
  EXPECT_EQ(percentile_nearest_rank(v, 30), 20);
  EXPECT_EQ(percentile_nearest_rank(v, 40), 20);
  EXPECT_EQ(percentile_nearest_rank(v, 50), 35);
  EXPECT_EQ(percentile_nearest_rank(v, 100), 50);
  EXPECT_THROW(percentile_nearest_rank(v, 0), Error);
  EXPECT_THROW(percentile_nearest_rank({}, 50), EmptySeries);
}

TEST(VmafExport, WritesPairsInOrder) {
  std::mt19937_64 rng(26);
  std::vector<Frame> a, b;
  for (int i = 0; i < 3; ++i) {
    a.push_back(testutil::random_frame(rng, 4, 3, 3));
    b.push_back(testutil::random_frame(rng, 4, 3, 3));
  }
  const auto dir = testutil::scratch_dir("vmaf_pairs");
  export_vmaf_pair(a, b, dir);
  EXPECT_EQ(csv::read_text(dir / "pairs.csv"),
            "original_path,delivered_path\n"
            "original/000000.ppm,delivered/000000.ppm\n"
            "original/000001.ppm,delivered/000001.ppm\n"
            "original/000002.ppm,delivered/000002.ppm\n");
  for (int i = 0; i < 3; ++i) {
    const auto name = "00000" + std::to_string(i) + ".ppm";
    EXPECT_EQ(load_frame(dir / "original" / name), a[static_cast<std::size_t>(i)]);
    EXPECT_EQ(load_frame(dir / "delivered" / name), b[static_cast<std::size_t>(i)]);
  }
}

TEST(VmafExport, EmptyAndMismatchedSequences) {
  const auto dir = testutil::scratch_dir("vmaf_empty");
  export_vmaf_pair({}, {}, dir);
  EXPECT_EQ(csv::read_text(dir / "pairs.csv"), "original_path,delivered_path\n");
  std::vector<Frame> one{Frame::blank(2, 2, 1)};
  EXPECT_THROW(export_vmaf_pair(one, {}, dir), DimensionMismatch);
  std::vector<Frame> other{Frame::blank(2, 3, 1)};
  EXPECT_THROW(export_vmaf_pair(one, other, dir), DimensionMismatch);
}
