#include <gtest/gtest.h>

#include "doa/estimator/estimator.hpp"
#include "doa/nnet/inference.hpp"
#include "doa/rng.hpp"
#include "doa/signal/dsp.hpp"

using namespace doa;
using namespace doa::estimator;

TEST(BlockAverage, IdenticalFramesUnchanged) {
  const PosteriorVector f{0.1, 0.7, 0.3, 0.9};
  const std::vector<PosteriorVector> frames(50, f);
  const auto avg = block_average(frames);
  ASSERT_EQ(avg.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(avg[i], f[i], 1e-15);
}

TEST(BlockAverage, TwoOneHots) {
  const std::vector<PosteriorVector> frames{{1.0, 0.0}, {0.0, 1.0}};
  EXPECT_EQ(block_average(frames), (std::vector<double>{0.5, 0.5}));
}

TEST(BlockAverage, WithinElementwiseRange) {
  CounterRng rng(3);
  std::vector<PosteriorVector> frames(17, PosteriorVector(13));
  for (auto& f : frames)
    for (double& v : f) v = rng.uniform();
  const auto avg = block_average(frames);
  for (std::size_t i = 0; i < 13; ++i) {
    double lo = 1, hi = 0;
    for (const auto& f : frames) lo = std::min(lo, f[i]), hi = std::max(hi, f[i]);
    EXPECT_GE(avg[i], lo);
    EXPECT_LE(avg[i], hi);
  }
}

TEST(BlockAverage, Errors) {
  EXPECT_THROW(block_average(std::vector<PosteriorVector>{}), std::invalid_argument);
  EXPECT_THROW(block_average(std::vector<PosteriorVector>{{1.0, 2.0}, {1.0}}), std::invalid_argument);
}

TEST(SelectTopL, Examples) {
  const dataset::DoaGrid grid(5);
  std::vector<double> avg(37, 0.0);
  avg[12] = 1.0;
  auto e = select_top_l(avg, 1, grid);
  EXPECT_EQ(e.doas, (std::vector<double>{60.0}));
  EXPECT_EQ(e.classes, (std::vector<std::size_t>{12}));
  EXPECT_EQ(e.L, 1u);

  std::vector<double> two(37, 0.01);
  two[21] = 0.8;
  two[12] = 0.6;
  e = select_top_l(two, 2, grid);
  EXPECT_EQ(e.doas, (std::vector<double>{60.0, 105.0}));
  EXPECT_EQ(e.averaged_probs, two);
}

TEST(SelectTopL, TiesGoToLowerIndex) {
  const dataset::DoaGrid grid(5);
  std::vector<double> avg(37, 0.1);
  avg[3] = avg[4] = 0.5;
  EXPECT_EQ(select_top_l(avg, 1, grid).classes, (std::vector<std::size_t>{3}));
  std::vector<double> flat(37, 0.2);
  EXPECT_EQ(select_top_l(flat, 3, grid).classes, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(SelectTopL, RejectsBadL) {
  const dataset::DoaGrid grid(15);
  const std::vector<double> avg(13, 0.5);
  EXPECT_THROW(select_top_l(avg, 0, grid), std::invalid_argument);
  EXPECT_THROW(select_top_l(avg, 14, grid), std::invalid_argument);
  EXPECT_NO_THROW(select_top_l(avg, 13, grid));
  EXPECT_THROW(select_top_l(std::vector<double>(12, 0.5), 1, grid), std::invalid_argument);
}

TEST(Block, FiftyFramesSpanPointEightSeconds) {
  // 32 ms frames with 50% overlap at 16 kHz.
  const std::size_t frame = 512, hop = 256;
  const std::size_t samples = 49 * hop + frame;
  EXPECT_EQ(signal::frame_count(samples, frame, hop), 50u);
  EXPECT_NEAR((49.0 * hop) / 16000.0, 0.8, 0.02);
}

TEST(Block, IdenticalFramesMatchSingleFrameDecision) {
  auto spec = nn::ModelSpec::uniform(4, 129, 3, 8, {16}, 13, 0.5);
  nn::Network<float> net(spec);
  net.initialize(17);
  signal::Spectrogram s(4, 20, 256, 128, 16000.0);
  CounterRng rng(5);
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t k = 0; k < s.num_bins(); ++k) {
      const std::complex<double> v{rng.gaussian(), rng.gaussian()};
      for (std::size_t n = 0; n < 20; ++n) s.at(m, n, k) = v;
    }
  const dataset::DoaGrid grid(15);
  const auto single = nn::predict(net, dataset::extract_phase_map(s, 0));
  for (std::size_t L : {1u, 2u, 3u}) {
    const auto block = estimate_block(net, s, 0, 20, L, grid);
    const auto ref = select_top_l(single, L, grid);
    EXPECT_EQ(block.classes, ref.classes);
    for (std::size_t i = 0; i < 13; ++i) EXPECT_NEAR(block.averaged_probs[i], single[i], 1e-12);
  }
  const auto posts = frame_posteriors(net, s, 5, 10);
  EXPECT_EQ(posts.size(), 10u);
  EXPECT_THROW(frame_posteriors(net, s, 15, 10), std::out_of_range);
}
