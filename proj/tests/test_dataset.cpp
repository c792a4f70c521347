#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "doa/acoustics/scene.hpp"
#include "doa/dataset/dataset.hpp"
#include "doa/dataset/features.hpp"
#include "doa/dataset/grid.hpp"
#include "doa/rng.hpp"

using namespace doa;
using namespace doa::dataset;

namespace {

constexpr double kPi = std::numbers::pi;

signal::Spectrogram random_spectrogram(std::size_t m, std::size_t n, std::size_t frame_len, std::uint64_t seed) {
  signal::Spectrogram s(m, n, frame_len, frame_len / 2, 16000.0);
  CounterRng rng(seed);
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t f = 0; f < n; ++f)
      for (std::size_t k = 0; k < s.num_bins(); ++k) s.at(c, f, k) = {rng.gaussian(), rng.gaussian()};
  return s;
}

double wrap(double x) { return std::remainder(x, 2 * kPi); }

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

acoustics::Rir anechoic_rir(double doa) {
  const acoustics::RoomConfig room{{8, 8, 3}, 0.0};
  const auto array = acoustics::ula({4, 4, 1.5}, 4, 0.08);
  return acoustics::image_method_rir(room, acoustics::SourcePlacement{doa, 1.0}.position(array), array, 16000.0);
}

TrainingPlan small_plan() {
  TrainingPlan plan;
  plan.scene.rooms.push_back({"quiet", acoustics::RoomConfig{{6, 6, 2.7}, 0.0}, {{2, 2, 1.5}, {3, 2.5, 1.4}, {4, 1.8, 1.6}}});
  plan.scene.rooms.push_back({"live", acoustics::RoomConfig{{5, 4, 2.7}, 0.15}, {{1.8, 1.5, 1.5}, {2.5, 1.2, 1.4}, {3.2, 1.7, 1.6}}});
  plan.scene.array = {4, 0.08};
  plan.grid_resolution_deg = 15.0;
  plan.min_separation_deg = 30.0;
  plan.signal_len = 1024;
  return plan;
}

}  // namespace

TEST(Grid, ClassCounts) {
  EXPECT_EQ(DoaGrid(5).size(), 37u);
  EXPECT_EQ(DoaGrid(15).size(), 13u);
  const DoaGrid g(90);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g.classes(), (std::vector<double>{0, 90, 180}));
  EXPECT_THROW(DoaGrid(7), std::invalid_argument);
  EXPECT_THROW(DoaGrid(0), std::invalid_argument);
  EXPECT_THROW(DoaGrid(2), std::invalid_argument);  // 91 classes do not fit a u64 label
  EXPECT_EQ(DoaGrid(5).index_of(105), 21u);
  EXPECT_THROW(DoaGrid(5).index_of(107), std::invalid_argument);
}

TEST(Labels, Examples) {
  const DoaGrid g5(5);
  const std::vector<double> two{60, 105};
  const auto l = make_labels(two, g5);
  EXPECT_EQ(l.bits, (1ull << 12) | (1ull << 21));
  EXPECT_EQ(l.count(), 2u);
  const std::vector<double> zero{0};
  EXPECT_EQ(make_labels(zero, g5).bits, 1ull);
  const std::vector<double> dup{0, 0};
  try {
    make_labels(dup, g5);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate DOA"), std::string::npos);
  }
  const std::vector<double> off{62};
  EXPECT_THROW(make_labels(off, g5), std::invalid_argument);
  const auto f = l.as_floats();
  ASSERT_EQ(f.size(), 37u);
  for (std::size_t i = 0; i < 37; ++i) EXPECT_EQ(f[i], (i == 12 || i == 21) ? 1.0f : 0.0f);
}

TEST(PhaseMap, ShapeForPaperFrame) {
  const auto s = random_spectrogram(4, 3, 256, 1);
  const auto p = extract_phase_map(s, 2);
  EXPECT_EQ(p.mics, 4u);
  EXPECT_EQ(p.bins, 129u);
  EXPECT_EQ(p.values.size(), 4u * 129u);
  for (float v : p.values) {
    EXPECT_GT(v, -kPi);
    EXPECT_LE(v, static_cast<float>(kPi));
  }
  EXPECT_THROW(extract_phase_map(s, 3), std::out_of_range);
}

TEST(PhaseMap, PositiveRealIsZeroAndNegativeRealIsPi) {
  signal::Spectrogram s(2, 1, 16, 8, 16000.0);
  for (std::size_t k = 0; k < s.num_bins(); ++k) {
    s.at(0, 0, k) = {1.0 + k, 0.0};
    s.at(1, 0, k) = {-1.0 - k, 0.0};
  }
  const auto p = extract_phase_map(s, 0);
  for (std::size_t k = 0; k < s.num_bins(); ++k) {
    EXPECT_EQ(p.at(0, k), 0.0f);
    EXPECT_EQ(p.at(1, k), static_cast<float>(kPi));
  }
}

TEST(PhaseMap, RotatingOneChannelShiftsItsRow) {
  auto s = random_spectrogram(3, 2, 64, 2);
  const auto before = extract_phase_map(s, 1);
  const double alpha = 2.3;
  for (std::size_t k = 0; k < s.num_bins(); ++k) s.at(1, 1, k) *= std::polar(1.0, alpha);
  const auto after = extract_phase_map(s, 1);
  for (std::size_t k = 0; k < s.num_bins(); ++k) {
    EXPECT_EQ(after.at(0, k), before.at(0, k));
    EXPECT_EQ(after.at(2, k), before.at(2, k));
    EXPECT_NEAR(wrap(after.at(1, k) - before.at(1, k) - alpha), 0.0, 1e-5);
  }
}

TEST(SingleSource, BroadsideHasZeroPhaseDifference) {
  auto median_abs_dphi = [](const signal::Spectrogram& spec, std::size_t a, std::size_t b) {
    std::vector<double> d;
    for (std::size_t n = 0; n < spec.num_frames(); ++n)
      for (std::size_t k = 1; k < spec.num_bins(); ++k)
        d.push_back(std::abs(wrap(std::arg(spec.at(a, n, k)) - std::arg(spec.at(b, n, k)))));
    return median(d);
  };
  // Far field: a plane wave from broadside reaches every mic at once.
  acoustics::Rir plane;
  plane.taps.assign(4, std::vector<double>(200, 0.0));
  for (auto& t : plane.taps) t[50] = 1.0;
  const auto far = synth_single_source_stft(plane, 8192, {}, 3);
  for (std::size_t m = 1; m < 4; ++m) EXPECT_LT(median_abs_dphi(far, m, 0), 0.05);
  // At 1 m the outer mics are farther away, but the inner pair is symmetric.
  const auto near = synth_single_source_stft(anechoic_rir(90), 8192, {}, 3);
  EXPECT_LT(median_abs_dphi(near, 2, 1), 0.05);
}

TEST(SingleSource, EndfireMatchesAnalyticDelay) {
  const auto spec = synth_single_source_stft(anechoic_rir(0), 8192, {}, 4);
  std::vector<double> err;
  for (std::size_t n = 0; n < spec.num_frames(); ++n)
    for (std::size_t k = 1; k < spec.num_bins(); ++k) {
      const double expected = 2 * kPi * spec.bin_frequency(k) * 0.08 / 343.0;
      for (std::size_t m = 1; m < 4; ++m) {
        const double dphi = std::arg(spec.at(m, n, k)) - std::arg(spec.at(m - 1, n, k));
        err.push_back(std::abs(wrap(dphi - expected)));
      }
    }
  EXPECT_LT(median(err), 0.05);
}

TEST(SingleSource, SeedDeterminism) {
  const auto rir = anechoic_rir(45);
  const auto a = synth_single_source_stft(rir, 4096, {}, 5, 20.0);
  const auto b = synth_single_source_stft(rir, 4096, {}, 5, 20.0);
  const auto c = synth_single_source_stft(rir, 4096, {}, 6, 20.0);
  ASSERT_EQ(a.num_frames(), b.num_frames());
  bool differs = false;
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t n = 0; n < a.num_frames(); ++n)
      for (std::size_t k = 0; k < a.num_bins(); ++k) {
        EXPECT_EQ(a.at(m, n, k), b.at(m, n, k));
        differs |= a.at(m, n, k) != c.at(m, n, k);
      }
  EXPECT_TRUE(differs);
  EXPECT_EQ(a.num_frames(), signal::frame_count(4096, 256, 128));
}

TEST(Interleave, PreservesSubbandColumnMultisets) {
  const auto a = random_spectrogram(4, 37, 64, 7);
  const auto b = random_spectrogram(4, 23, 64, 8);
  const auto out = interleave_two_sources(a, b, 9);
  ASSERT_EQ(out.num_frames(), 60u);
  using Column = std::vector<std::pair<double, double>>;
  auto column = [](const signal::Spectrogram& s, std::size_t n, std::size_t k) {
    Column c;
    for (std::size_t m = 0; m < s.num_channels(); ++m) c.emplace_back(s.at(m, n, k).real(), s.at(m, n, k).imag());
    return c;
  };
  for (std::size_t k = 0; k < out.num_bins(); ++k) {
    std::vector<Column> in_cols, out_cols;
    for (std::size_t n = 0; n < 37; ++n) in_cols.push_back(column(a, n, k));
    for (std::size_t n = 0; n < 23; ++n) in_cols.push_back(column(b, n, k));
    for (std::size_t n = 0; n < 60; ++n) out_cols.push_back(column(out, n, k));
    std::sort(in_cols.begin(), in_cols.end());
    std::sort(out_cols.begin(), out_cols.end());
    EXPECT_EQ(in_cols, out_cols) << "bin " << k;
  }
}

TEST(Interleave, ShapeMismatchThrows) {
  EXPECT_THROW(interleave_two_sources(random_spectrogram(4, 5, 64, 1), random_spectrogram(3, 5, 64, 2), 0),
               std::invalid_argument);
  EXPECT_THROW(interleave_two_sources(random_spectrogram(4, 5, 64, 1), random_spectrogram(4, 5, 128, 2), 0),
               std::invalid_argument);
}

TEST(Interleave, EachOutputFrameIsHalfFromEachSourceOnAverage) {
  const std::size_t bins = 257, n = 100;
  std::vector<double> frac(2 * n, 0.0);
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    const auto perms = interleave_permutations(bins, 2 * n, 1000 + s);
    for (std::size_t f = 0; f < 2 * n; ++f) {
      std::size_t from_a = 0;
      for (std::size_t k = 0; k < bins; ++k) from_a += perms[k][f] < n;
      frac[f] += static_cast<double>(from_a) / bins / seeds;
    }
  }
  for (std::size_t f = 0; f < 2 * n; ++f) EXPECT_NEAR(frac[f], 0.5, 0.05) << "frame " << f;
}

TEST(Interleave, PermutationsDifferAcrossSubbands) {
  const auto perms = interleave_permutations(257, 200, 11);
  std::size_t pairs = 0, different = 0;
  for (std::size_t i = 0; i < perms.size(); ++i)
    for (std::size_t j = i + 1; j < perms.size(); ++j) {
      ++pairs;
      different += perms[i] != perms[j];
    }
  EXPECT_GE(static_cast<double>(different), 0.99 * pairs);
  for (const auto& p : perms) {
    std::vector<std::uint32_t> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (std::uint32_t i = 0; i < sorted.size(); ++i) ASSERT_EQ(sorted[i], i);
  }
}

TEST(Pairs, SeparationFilter) {
  const DoaGrid g(15);
  const auto pairs = doa_pairs(g, 30.0);
  // 13 classes: all 78 pairs except the 12 adjacent ones.
  EXPECT_EQ(pairs.size(), 66u);
  for (auto [i, j] : pairs) {
    EXPECT_LT(i, j);
    EXPECT_GE(g[j] - g[i], 30.0);
  }
  EXPECT_EQ(doa_pairs(DoaGrid(5), 10.0).size(), 37u * 36u / 2u - 36u);
}

TEST(TrainingSet, RecordCountLabelsAndDeterminism) {
  const auto plan = small_plan();
  const auto bank = acoustics::simulate_bank(scene_for(plan), 1);
  // 2 rooms x 3 positions x 1 distance x 66 pairs x 2 signals x frames per signal.
  const std::size_t frames = (1024 - 256) / 128 + 1;
  const std::size_t expected = 2 * 3 * 1 * 66 * 2 * frames;
  EXPECT_EQ(expected_record_count(plan), expected);

  const auto data = build_training_set(plan, bank, 42, 1);
  ASSERT_EQ(data.size(), expected);
  EXPECT_EQ(data.mics, 4u);
  EXPECT_EQ(data.bins, 129u);
  EXPECT_EQ(data.classes, 13u);
  const DoaGrid grid(15);
  std::set<std::uint64_t> valid;
  for (auto [i, j] : doa_pairs(grid, 30.0)) valid.insert((1ull << i) | (1ull << j));
  for (std::uint64_t l : data.labels) ASSERT_TRUE(valid.count(l)) << l;
  for (float v : data.features) {
    ASSERT_TRUE(std::isfinite(v));
    ASSERT_GT(v, -kPi);
    ASSERT_LE(v, static_cast<float>(kPi));
  }

  const auto dir = std::filesystem::temp_directory_path() / "doa_test_dataset";
  std::filesystem::create_directories(dir);
  write_dataset(dir / "a.dset", data);
  write_dataset(dir / "b.dset", build_training_set(plan, bank, 42, 2));
  EXPECT_EQ(file_bytes(dir / "a.dset"), file_bytes(dir / "b.dset"));
  EXPECT_EQ(read_dataset_header(dir / "a.dset").record_count, expected);

  write_dataset(dir / "c.dset", build_training_set(plan, bank, 43, 1));
  EXPECT_NE(file_bytes(dir / "a.dset"), file_bytes(dir / "c.dset"));
  std::filesystem::remove_all(dir);
}

TEST(TrainingSet, MissingRirsAreListed) {
  auto plan = small_plan();
  plan.scene.rooms.resize(1);
  auto bank = acoustics::simulate_bank(scene_for(plan), 1);
  plan.scene.rooms.push_back({"absent", acoustics::RoomConfig{{5, 5, 3}, 0.0}, {{2, 2, 1.5}}});
  try {
    build_training_set(plan, bank, 1);
    FAIL();
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("missing RIRs"), std::string::npos);
    EXPECT_NE(msg.find("absent"), std::string::npos);
  }
}

TEST(DatasetFile, RoundTripAndTruncation) {
  Dataset d;
  d.mics = 2;
  d.bins = 3;
  d.classes = 5;
  d.seed = 99;
  CounterRng rng(1);
  for (int r = 0; r < 7; ++r) {
    for (int i = 0; i < 6; ++i) d.features.push_back(static_cast<float>(rng.gaussian()));
    d.labels.push_back(rng.below(32));
  }
  const auto path = std::filesystem::temp_directory_path() / "doa_test_rt.dset";
  write_dataset(path, d);
  const auto back = read_dataset(path);
  EXPECT_EQ(back.mics, 2u);
  EXPECT_EQ(back.bins, 3u);
  EXPECT_EQ(back.classes, 5u);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.labels, d.labels);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  EXPECT_THROW(read_dataset(path), std::runtime_error);
  std::ofstream(path, std::ios::binary | std::ios::trunc) << "NOPE";
  EXPECT_THROW(read_dataset(path), std::runtime_error);
  std::filesystem::remove(path);
}
