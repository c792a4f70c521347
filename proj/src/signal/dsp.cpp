#include "doa/signal/dsp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doa/rng.hpp"
#include "doa/signal/fft.hpp"

namespace doa::signal {

std::vector<double> hann_window(std::size_t n) {
  if (n < 2) throw std::invalid_argument("hann window needs at least 2 points");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

std::vector<double> make_window(WindowKind kind, std::size_t n) {
  switch (kind) {
    case WindowKind::Hann: return hann_window(n);
    case WindowKind::Rectangular: return std::vector<double>(n, 1.0);
  }
  throw std::invalid_argument("unknown window kind");
}

std::size_t frame_count(std::size_t length, std::size_t frame_len, std::size_t hop) {
  if (length < frame_len) return 0;
  return (length - frame_len) / hop + 1;
}

Spectrogram stft(const MultichannelSignal& signal, std::size_t frame_len, std::size_t hop,
                 WindowKind window) {
  if (frame_len < 2 || (frame_len & (frame_len - 1)) != 0)
    throw std::invalid_argument("frame length must be a power of two");
  if (hop == 0 || hop > frame_len) throw std::invalid_argument("hop must be in (0, frame_len]");
  if (signal.length() < frame_len) throw std::invalid_argument("insufficient samples");

  const auto w = make_window(window, frame_len);
  const std::size_t frames = frame_count(signal.length(), frame_len, hop);
  Spectrogram spec(signal.num_channels(), frames, frame_len, hop, signal.sample_rate());
  std::vector<double> buf(frame_len);
  for (std::size_t m = 0; m < signal.num_channels(); ++m) {
    const auto x = signal.channel(m);
    for (std::size_t n = 0; n < frames; ++n) {
      const std::size_t start = n * hop;
      for (std::size_t i = 0; i < frame_len; ++i) buf[i] = x[start + i] * w[i];
      rfft(buf, spec.frame(m, n));
    }
  }
  return spec;
}

MultichannelSignal white_noise(std::size_t length, std::size_t channels, std::uint64_t seed,
                               double sample_rate) {
  std::vector<std::vector<double>> out(channels, std::vector<double>(length));
  for (std::size_t m = 0; m < channels; ++m) {
    CounterRng rng(derive_seed(seed, {m}));
    for (double& x : out[m]) x = rng.gaussian();
  }
  return {std::move(out), sample_rate};
}

double snr_db(const MultichannelSignal& signal, const MultichannelSignal& noise) {
  return 10.0 * std::log10(signal.power() / noise.power());
}

MultichannelSignal mix_at_snr(const MultichannelSignal& signal, const MultichannelSignal& noise,
                              double snr_db_value) {
  if (signal.num_channels() != noise.num_channels() || signal.length() != noise.length())
    throw std::invalid_argument("signal and noise shapes differ");
  const double ps = signal.power();
  if (!(ps > 0.0)) throw std::invalid_argument("undefined SNR: signal has zero power");
  const double pn = noise.power();
  if (!(pn > 0.0)) throw std::invalid_argument("undefined SNR: noise has zero power");
  const double gain = std::sqrt(ps / (pn * std::pow(10.0, snr_db_value / 10.0)));
  MultichannelSignal scaled = noise;
  scaled *= gain;
  scaled += signal;
  return scaled;
}

}  // namespace doa::signal
