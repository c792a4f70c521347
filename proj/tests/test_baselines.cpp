#include <gtest/gtest.h>

#include <complex>
#include <numbers>

#include "doa/acoustics/rir.hpp"
#include "doa/baselines/baselines.hpp"
#include "doa/eval/mixture.hpp"
#include "doa/rng.hpp"
#include "doa/signal/dsp.hpp"

using namespace doa;
using namespace doa::baselines;
using cd = std::complex<double>;

namespace {

// Characteristic polynomial coefficients c[0..n] (c[n] = 1) of A by the
// Faddeev-LeVerrier recursion.
std::vector<cd> char_poly(const Eigen::MatrixXcd& A) {
  const auto n = A.rows();
  std::vector<cd> c(n + 1);
  c[n] = 1.0;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    M = A * M + c[n - k + 1] * I;
    c[n - k] = -(A * M).trace() / static_cast<double>(k);
  }
  return c;
}

// All roots of a monic polynomial by Durand-Kerner iteration.
std::vector<cd> poly_roots(const std::vector<cd>& c) {
  const std::size_t n = c.size() - 1;
  auto eval = [&](cd z) {
    cd v = 1.0;
    for (std::size_t i = n; i-- > 0;) v = v * z + c[i];
    return v;
  };
  std::vector<cd> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = std::pow(cd(0.4, 0.9), static_cast<double>(i));
  for (int it = 0; it < 2000; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      cd den = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) den *= z[i] - z[j];
      z[i] -= eval(z[i]) / den;
    }
  }
  return z;
}

Eigen::MatrixXcd random_hermitian(Eigen::Index n, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXcd A(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = {rng.gaussian(), rng.gaussian()};
  return 0.5 * (A + A.adjoint());
}

struct Scene {
  acoustics::ArrayGeometry array = acoustics::ula({4, 4, 1.5}, 4, 0.08);
  acoustics::RoomConfig room{{8, 8, 3}, 0.0};
};

// Anechoic mixture of noise sources at the given DOAs, optionally with
// white noise, as an STFT of 512-sample frames.
signal::Spectrogram anechoic_scene(const std::vector<double>& doas, std::optional<double> snr_db, std::uint64_t seed,
                                   std::size_t len = 16000) {
  Scene s;
  signal::MultichannelSignal mix(4, len, 16000.0);
  for (std::size_t l = 0; l < doas.size(); ++l) {
    const auto rir = acoustics::image_method_rir(
        s.room, acoustics::SourcePlacement{doas[l], 1.0}.position(s.array), s.array, 16000.0);
    const auto src = signal::white_noise(len, 1, derive_seed(seed, {l}));
    mix += acoustics::apply_rir(rir, src.channel(0), len);
  }
  if (snr_db) mix = eval::add_noise(mix, {eval::NoiseType::White, *snr_db, std::nullopt}, s.array, seed + 99);
  return signal::stft(mix, 512, 256);
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST(HermitianEig, Identity) {
  const auto e = hermitian_eig(Eigen::MatrixXcd::Identity(4, 4));
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(e.values(i), 1.0, 1e-14);
}

TEST(HermitianEig, DiagonalGivesUnitBasis) {
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) D(i, i) = i + 1.0;
  const auto e = hermitian_eig(D);
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(e.values(i), i + 1.0, 1e-14);
    for (Eigen::Index r = 0; r < 4; ++r) EXPECT_NEAR(std::abs(e.vectors(r, i)), r == i ? 1.0 : 0.0, 1e-14);
  }
}

TEST(HermitianEig, MatchesCharacteristicPolynomialRoots) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto A = random_hermitian(4, seed);
    const auto e = hermitian_eig(A);
    auto roots = poly_roots(char_poly(A));
    std::vector<double> re;
    for (const auto& r : roots) {
      EXPECT_LT(std::abs(r.imag()), 1e-8);
      re.push_back(r.real());
    }
    std::sort(re.begin(), re.end());
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(e.values(i), re[i], 1e-8) << "seed " << seed;
  }
}

TEST(HermitianEig, ReconstructionAndOrthonormality) {
  for (Eigen::Index n : {2, 4, 6, 8}) {
    const auto A = random_hermitian(n, 40 + n);
    const auto e = hermitian_eig(A);
    const Eigen::MatrixXcd R = e.vectors * e.values.cast<cd>().asDiagonal() * e.vectors.adjoint();
    EXPECT_LT((R - A).norm() / A.norm(), 1e-8);
    const Eigen::MatrixXcd G = e.vectors.adjoint() * e.vectors;
    EXPECT_LT((G - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index i = 1; i < n; ++i) EXPECT_LE(e.values(i - 1), e.values(i));
  }
}

TEST(HermitianEig, RejectsNonHermitian) {
  auto A = random_hermitian(4, 3);
  A(0, 1) += cd(0.01, 0);
  EXPECT_THROW(hermitian_eig(A), std::invalid_argument);
  EXPECT_THROW(hermitian_eig(Eigen::MatrixXcd::Zero(3, 4)), std::invalid_argument);
}

TEST(SrpPhat, AnechoicSingleSourceFramesPointAtTruth) {
  const dataset::DoaGrid grid(15);
  Scene s;
  std::size_t hits = 0, total = 0;
  for (double doa : grid.classes()) {
    const auto spec = anechoic_scene({doa}, std::nullopt, 7);
    for (std::size_t n = 0; n < spec.num_frames(); ++n) {
      hits += grid[argmax(srp_phat_frame(spec, n, grid, s.array))] == doa;
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(hits), 0.95 * total);
}

TEST(SrpPhat, ScaleInvariantNonNegativeAndNeedsTwoMics) {
  const dataset::DoaGrid grid(5);
  Scene s;
  auto spec = anechoic_scene({40}, 20.0, 8, 4000);
  const auto before = srp_phat_frame(spec, 3, grid, s.array);
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t n = 0; n < spec.num_frames(); ++n)
      for (auto& v : spec.frame(m, n)) v *= 7.5;
  const auto after = srp_phat_frame(spec, 3, grid, s.array);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(after[i], before[i], 1e-9 * std::max(1.0, before[i]));
    EXPECT_GE(before[i], 0.0);
  }
  signal::Spectrogram mono(1, 4, 512, 256, 16000.0);
  const acoustics::ArrayGeometry one_and_spare({{0, 0, 0}, {0.1, 0, 0}});
  EXPECT_THROW(srp_phat_frame(mono, 0, grid, one_and_spare), std::invalid_argument);
}

TEST(Music, AnechoicSingleSourceBlockIsExact) {
  const dataset::DoaGrid grid(15);
  Scene s;
  for (double doa : grid.classes()) {
    const auto spec = anechoic_scene({doa}, 30.0, 9);
    const auto e = baseline_block(Method::Music, spec, 0, spec.num_frames(), 1, grid, s.array);
    EXPECT_EQ(e.doas, (std::vector<double>{doa}));
  }
}

TEST(Music, TwoSourcesWithinOneGridStep) {
  const dataset::DoaGrid grid(15);
  Scene s;
  std::size_t ok = 0, trials = 0;
  for (std::size_t i = 0; i < grid.size(); i += 2)
    for (std::size_t j = i + 2; j < grid.size(); j += 3) {
      const std::vector<double> truth{grid[i], grid[j]};
      const auto spec = anechoic_scene(truth, 30.0, 100 + i * 13 + j);
      const auto e = baseline_block(Method::Music, spec, 0, spec.num_frames(), 2, grid, s.array);
      ok += std::abs(e.doas[0] - truth[0]) <= 15.0 && std::abs(e.doas[1] - truth[1]) <= 15.0;
      ++trials;
    }
  EXPECT_GE(static_cast<double>(ok), 0.8 * trials) << ok << "/" << trials;
}

TEST(Music, NoiseSubspaceAndPositivity) {
  const dataset::DoaGrid grid(5);
  Scene s;
  const auto spec = anechoic_scene({70}, 20.0, 10, 6000);
  try {
    music_frame(spec, 12, grid, s.array, 4);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("noise subspace empty"), std::string::npos);
  }
  for (std::size_t L : {1u, 2u, 3u}) {
    const auto p = music_frame(spec, 12, grid, s.array, L);
    ASSERT_EQ(p.size(), grid.size());
    for (double v : p) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
    }
  }
}

TEST(Baselines, IdenticalFramesBlockEqualsFrame) {
  const dataset::DoaGrid grid(15);
  Scene s;
  const auto src = anechoic_scene({30, 120}, 30.0, 11, 4000);
  signal::Spectrogram rep(4, 12, 512, 256, 16000.0);
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t n = 0; n < 12; ++n)
      for (std::size_t k = 0; k < rep.num_bins(); ++k) rep.at(m, n, k) = src.at(m, 5, k);
  for (Method method : {Method::SrpPhat, Method::Music}) {
    const auto frame = method == Method::SrpPhat ? srp_phat_frame(rep, 11, grid, s.array)
                                                 : music_frame(rep, 11, grid, s.array, 2);
    const auto block = baseline_block(method, rep, 0, 12, 2, grid, s.array);
    const auto ref = estimator::select_top_l(frame, 2, grid);
    EXPECT_EQ(block.classes, ref.classes) << method_name(method);
  }
}

TEST(Baselines, SpatialCorrelationIsHermitian) {
  const auto spec = anechoic_scene({100}, 10.0, 12, 4000);
  for (std::size_t window : {1u, 10u}) {
    const auto R = spatial_correlation(spec, 0, 20, window);
    EXPECT_LT((R - R.adjoint()).norm(), 1e-12);
    const auto e = hermitian_eig(R);
    EXPECT_GE(e.values.minCoeff(), -1e-12 * e.values.maxCoeff());
  }
}
