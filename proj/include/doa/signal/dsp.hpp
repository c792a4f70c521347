#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "doa/signal/signal.hpp"

namespace doa::signal {

enum class WindowKind { Hann, Rectangular };

/// Periodic Hann window, w[i] = 0.5 - 0.5 cos(2 pi i / n). Requires n >= 2.
std::vector<double> hann_window(std::size_t n);

std::vector<double> make_window(WindowKind kind, std::size_t n);

struct StftParams {
  std::size_t frame_len = 256;
  std::size_t hop = 128;
  WindowKind window = WindowKind::Hann;
};

/// Multichannel STFT with K = frame_len/2 + 1 bins. The trailing partial
/// frame is dropped; frame n starts at sample n * hop.
/// Throws std::invalid_argument("insufficient samples") when the signal is
/// shorter than one frame.
Spectrogram stft(const MultichannelSignal& signal, std::size_t frame_len, std::size_t hop,
                 WindowKind window = WindowKind::Hann);

inline Spectrogram stft(const MultichannelSignal& signal, const StftParams& p) {
  return stft(signal, p.frame_len, p.hop, p.window);
}

/// Number of full frames that fit in `length` samples.
std::size_t frame_count(std::size_t length, std::size_t frame_len, std::size_t hop);

/// Zero-mean, unit-variance Gaussian noise; deterministic for a seed.
MultichannelSignal white_noise(std::size_t length, std::size_t channels, std::uint64_t seed,
                               double sample_rate = 16000.0);

/// Returns signal + g * noise with g chosen so that the segment-level
/// power ratio equals snr_db. Throws on zero signal power ("undefined SNR").
MultichannelSignal mix_at_snr(const MultichannelSignal& signal, const MultichannelSignal& noise,
                              double snr_db);

/// 10 log10(P_signal / P_noise), powers averaged over all channels.
double snr_db(const MultichannelSignal& signal, const MultichannelSignal& noise);

}  // namespace doa::signal
