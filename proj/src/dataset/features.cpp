#include "doa/dataset/features.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doa/rng.hpp"

namespace doa::dataset {
namespace {

constexpr float kPiF = static_cast<float>(std::numbers::pi);

float wrapped_phase(std::complex<double> z) noexcept {
  auto p = static_cast<float>(std::arg(z));
  // arg() may return -pi for negative reals with a -0 imaginary part, and
  // float rounding can land exactly on -pi.
  if (p <= -kPiF) p = kPiF;
  return p;
}

}  // namespace

void extract_phase_map_into(const signal::Spectrogram& spec, std::size_t frame, std::span<float> out) {
  if (frame >= spec.num_frames()) throw std::out_of_range("frame index out of range");
  const std::size_t bins = spec.num_bins();
  if (out.size() != spec.num_channels() * bins) throw std::invalid_argument("phase map buffer size mismatch");
  for (std::size_t m = 0; m < spec.num_channels(); ++m) {
    const auto row = spec.frame(m, frame);
    for (std::size_t k = 0; k < bins; ++k) out[m * bins + k] = wrapped_phase(row[k]);
  }
}

PhaseMap extract_phase_map(const signal::Spectrogram& spec, std::size_t frame) {
  PhaseMap map{spec.num_channels(), spec.num_bins(), {}};
  map.values.resize(map.mics * map.bins);
  extract_phase_map_into(spec, frame, map.values);
  return map;
}

signal::Spectrogram synth_single_source_stft(const acoustics::Rir& rir, std::size_t noise_len,
                                             const signal::StftParams& stft, std::uint64_t seed,
                                             std::optional<double> sensor_snr_db) {
  if (rir.num_mics() == 0 || rir.length() == 0) throw std::invalid_argument("empty RIR");
  if (noise_len == 0) throw std::invalid_argument("noise length must be positive");
  const std::size_t warmup = rir.length();
  const auto source = signal::white_noise(noise_len + warmup, 1, derive_seed(seed, {0}), rir.sample_rate);
  auto full = acoustics::apply_rir(rir, source.channel(0), noise_len + warmup);
  auto steady = full.slice(warmup, noise_len);
  if (sensor_snr_db) {
    const auto noise = signal::white_noise(noise_len, steady.num_channels(), derive_seed(seed, {1}),
                                           rir.sample_rate);
    steady = signal::mix_at_snr(steady, noise, *sensor_snr_db);
  }
  return signal::stft(steady, stft);
}

std::vector<std::vector<std::uint32_t>> interleave_permutations(std::size_t bins, std::size_t frames,
                                                                std::uint64_t seed) {
  std::vector<std::vector<std::uint32_t>> perms(bins, std::vector<std::uint32_t>(frames));
  for (std::size_t k = 0; k < bins; ++k) {
    auto& p = perms[k];
    for (std::size_t n = 0; n < frames; ++n) p[n] = static_cast<std::uint32_t>(n);
    CounterRng rng(derive_seed(seed, {k}));
    rng.shuffle(p.begin(), p.end());
  }
  return perms;
}

signal::Spectrogram interleave_two_sources(const signal::Spectrogram& a, const signal::Spectrogram& b,
                                           std::uint64_t seed) {
  if (!a.compatible(b)) throw std::invalid_argument("spectrogram shapes differ (M, K, frame length or hop)");
  const std::size_t na = a.num_frames();
  const std::size_t total = na + b.num_frames();
  const std::size_t bins = a.num_bins();
  const auto perms = interleave_permutations(bins, total, seed);
  signal::Spectrogram out(a.num_channels(), total, a.frame_len(), a.hop(), a.sample_rate());
  for (std::size_t k = 0; k < bins; ++k) {
    const auto& p = perms[k];
    for (std::size_t n = 0; n < total; ++n) {
      const std::size_t src = p[n];
      const auto& from = src < na ? a : b;
      const std::size_t frame = src < na ? src : src - na;
      for (std::size_t m = 0; m < a.num_channels(); ++m) out.at(m, n, k) = from.at(m, frame, k);
    }
  }
  return out;
}

}  // namespace doa::dataset
