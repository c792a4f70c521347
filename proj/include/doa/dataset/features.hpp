#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "doa/acoustics/rir.hpp"
#include "doa/signal/dsp.hpp"
#include "doa/signal/signal.hpp"

namespace doa::dataset {

/// STFT phases of one frame, M x K, mic-major. Entries lie in (-pi, pi]
/// (float-rounded pi at the upper end).
struct PhaseMap {
  std::size_t mics = 0;
  std::size_t bins = 0;
  std::vector<float> values;

  float at(std::size_t m, std::size_t k) const noexcept { return values[m * bins + k]; }
};

/// Phase of every bin of frame `frame`. Throws std::out_of_range past the end.
PhaseMap extract_phase_map(const signal::Spectrogram& spec, std::size_t frame);

/// Writes the phase map of `frame` into `out` (size M*K) without allocating.
void extract_phase_map_into(const signal::Spectrogram& spec, std::size_t frame, std::span<float> out);

/// Single-source training signal: one white-noise realisation convolved with
/// each microphone's response, optionally with spatially white sensor noise
/// at `sensor_snr_db`, then transformed. Only the steady-state part of the
/// convolution (after the response length) is kept.
signal::Spectrogram synth_single_source_stft(const acoustics::Rir& rir, std::size_t noise_len,
                                             const signal::StftParams& stft, std::uint64_t seed,
                                             std::optional<double> sensor_snr_db = std::nullopt);

/// Per-subband frame permutations used by interleave_two_sources():
/// perms[k][n] is the index (into the A-then-B concatenation) of the source
/// frame feeding output frame n at bin k.
std::vector<std::vector<std::uint32_t>> interleave_permutations(std::size_t bins, std::size_t frames,
                                                                std::uint64_t seed);

/// Concatenates A and B along time, then permutes the frame order of each
/// subband independently. All microphones of a bin move together.
signal::Spectrogram interleave_two_sources(const signal::Spectrogram& a, const signal::Spectrogram& b,
                                           std::uint64_t seed);

}  // namespace doa::dataset
