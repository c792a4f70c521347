#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "doa/acoustics/geometry.hpp"
#include "doa/acoustics/rir.hpp"
#include "doa/signal/signal.hpp"

namespace doa::eval {

/// On/off gating of a noise-burst source; durations are drawn uniformly.
struct BurstOptions {
  double min_on_s = 0.08;
  double max_on_s = 0.30;
  double min_off_s = 0.05;
  double max_off_s = 0.25;
  double ramp_s = 0.005;  ///< raised-cosine fade at each edge
};

/// White Gaussian noise switched on and off in random bursts, a stand-in
/// for the temporal sparsity of speech. The first state is random.
std::vector<double> noise_burst_source(std::size_t length, double fs, std::uint64_t seed,
                                       const BurstOptions& options = {});

/// A random excerpt of a mono (or first-channel) WAV file, zero-padded when
/// the file is shorter. Throws when the file's rate differs from `fs`.
std::vector<double> speech_excerpt(const std::filesystem::path& wav, std::size_t length, double fs,
                                   std::uint64_t seed);

enum class NoiseType { White, Diffuse, Babble };

const char* noise_name(NoiseType t) noexcept;
/// Parses "white", "diffuse" or "babble".
NoiseType parse_noise_type(const std::string& name);

/// Sum over sources of each source convolved with its responses, truncated
/// to `length` samples. All responses must have the same microphone count.
signal::MultichannelSignal reverberant_mixture(std::span<const acoustics::Rir* const> rirs,
                                               std::span<const std::vector<double>> sources, std::size_t length);

struct NoiseSpec {
  NoiseType type = NoiseType::White;
  double snr_db = 30.0;
  /// Extra spatially white noise at this SNR (relative to the clean mixture),
  /// as used alongside diffuse babble.
  std::optional<double> white_floor_snr_db;
};

/// Adds noise to a clean multichannel mixture at the requested SNR.
signal::MultichannelSignal add_noise(const signal::MultichannelSignal& clean, const NoiseSpec& noise,
                                     const acoustics::ArrayGeometry& array, std::uint64_t seed);

}  // namespace doa::eval
