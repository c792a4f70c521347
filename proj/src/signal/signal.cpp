#include "doa/signal/signal.hpp"

#include <algorithm>
#include <stdexcept>

namespace doa::signal {

MultichannelSignal::MultichannelSignal(std::vector<std::vector<double>> channels, double sample_rate)
    : channels_(std::move(channels)), sample_rate_(sample_rate) {
  if (!(sample_rate_ > 0.0)) throw std::invalid_argument("sample rate must be positive");
  for (const auto& ch : channels_) {
    if (ch.size() != channels_.front().size())
      throw std::invalid_argument("all channels must have equal length");
  }
}

MultichannelSignal::MultichannelSignal(std::size_t channels, std::size_t length, double sample_rate)
    : MultichannelSignal(std::vector<std::vector<double>>(channels, std::vector<double>(length, 0.0)),
                         sample_rate) {}

double MultichannelSignal::power() const noexcept {
  if (channels_.empty() || length() == 0) return 0.0;
  double total = 0.0;
  for (const auto& ch : channels_) {
    double acc = 0.0;
    for (double x : ch) acc += x * x;
    total += acc / static_cast<double>(ch.size());
  }
  return total / static_cast<double>(channels_.size());
}

MultichannelSignal MultichannelSignal::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > length()) throw std::out_of_range("slice exceeds signal length");
  std::vector<std::vector<double>> out;
  out.reserve(channels_.size());
  for (const auto& ch : channels_) {
    out.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(begin),
                     ch.begin() + static_cast<std::ptrdiff_t>(begin + count));
  }
  return {std::move(out), sample_rate_};
}

MultichannelSignal& MultichannelSignal::operator+=(const MultichannelSignal& other) {
  if (other.num_channels() != num_channels() || other.length() != length())
    throw std::invalid_argument("signal shapes differ");
  for (std::size_t m = 0; m < channels_.size(); ++m) {
    std::transform(channels_[m].begin(), channels_[m].end(), other.channels_[m].begin(),
                   channels_[m].begin(), std::plus<>());
  }
  return *this;
}

MultichannelSignal& MultichannelSignal::operator*=(double gain) noexcept {
  for (auto& ch : channels_)
    for (double& x : ch) x *= gain;
  return *this;
}

Spectrogram::Spectrogram(std::size_t channels, std::size_t frames, std::size_t frame_len,
                         std::size_t hop, double sample_rate)
    : channels_(channels),
      frames_(frames),
      bins_(frame_len / 2 + 1),
      frame_len_(frame_len),
      hop_(hop),
      sample_rate_(sample_rate),
      data_(channels * frames * (frame_len / 2 + 1)) {}

bool Spectrogram::compatible(const Spectrogram& other) const noexcept {
  return channels_ == other.channels_ && bins_ == other.bins_ && frame_len_ == other.frame_len_ &&
         hop_ == other.hop_;
}

Spectrogram Spectrogram::frames(std::size_t begin, std::size_t count) const {
  if (begin + count > frames_) throw std::out_of_range("frame range exceeds spectrogram");
  Spectrogram out(channels_, count, frame_len_, hop_, sample_rate_);
  for (std::size_t m = 0; m < channels_; ++m)
    for (std::size_t n = 0; n < count; ++n) {
      auto src = frame(m, begin + n);
      std::copy(src.begin(), src.end(), out.frame(m, n).begin());
    }
  return out;
}

}  // namespace doa::signal
