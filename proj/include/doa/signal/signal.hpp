#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace doa::signal {

/// Time-domain samples for M equally long channels.
class MultichannelSignal {
 public:
  MultichannelSignal() = default;
  MultichannelSignal(std::vector<std::vector<double>> channels, double sample_rate);
  /// M zero-filled channels of `length` samples.
  MultichannelSignal(std::size_t channels, std::size_t length, double sample_rate);

  std::size_t num_channels() const noexcept { return channels_.size(); }
  std::size_t length() const noexcept { return channels_.empty() ? 0 : channels_.front().size(); }
  double sample_rate() const noexcept { return sample_rate_; }

  std::span<const double> channel(std::size_t m) const { return channels_.at(m); }
  std::span<double> channel(std::size_t m) { return channels_.at(m); }

  /// Mean over channels of the per-channel mean square.
  double power() const noexcept;

  /// Copy of samples [begin, begin + count) of every channel.
  MultichannelSignal slice(std::size_t begin, std::size_t count) const;

  MultichannelSignal& operator+=(const MultichannelSignal& other);
  MultichannelSignal& operator*=(double gain) noexcept;

 private:
  std::vector<std::vector<double>> channels_;
  double sample_rate_ = 1.0;
};

/// One-sided STFT coefficients Y_m(n, k), stored channel-major then frame-major.
class Spectrogram {
 public:
  using value_type = std::complex<double>;

  Spectrogram() = default;
  Spectrogram(std::size_t channels, std::size_t frames, std::size_t frame_len, std::size_t hop,
              double sample_rate);

  std::size_t num_channels() const noexcept { return channels_; }
  std::size_t num_frames() const noexcept { return frames_; }
  std::size_t num_bins() const noexcept { return bins_; }
  std::size_t frame_len() const noexcept { return frame_len_; }
  std::size_t hop() const noexcept { return hop_; }
  double sample_rate() const noexcept { return sample_rate_; }

  /// Centre frequency of bin k in Hz.
  double bin_frequency(std::size_t k) const noexcept {
    return static_cast<double>(k) * sample_rate_ / static_cast<double>(frame_len_);
  }

  value_type& at(std::size_t m, std::size_t n, std::size_t k) noexcept {
    return data_[(m * frames_ + n) * bins_ + k];
  }
  const value_type& at(std::size_t m, std::size_t n, std::size_t k) const noexcept {
    return data_[(m * frames_ + n) * bins_ + k];
  }

  /// The K bins of channel m, frame n.
  std::span<value_type> frame(std::size_t m, std::size_t n) noexcept {
    return {data_.data() + (m * frames_ + n) * bins_, bins_};
  }
  std::span<const value_type> frame(std::size_t m, std::size_t n) const noexcept {
    return {data_.data() + (m * frames_ + n) * bins_, bins_};
  }

  /// True when both spectrograms have the same M, K, frame length and hop.
  bool compatible(const Spectrogram& other) const noexcept;

  /// Frames [begin, begin + count) of every channel.
  Spectrogram frames(std::size_t begin, std::size_t count) const;

  std::span<const value_type> data() const noexcept { return data_; }
  std::span<value_type> data() noexcept { return data_; }

 private:
  std::size_t channels_ = 0;
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::size_t frame_len_ = 0;
  std::size_t hop_ = 0;
  double sample_rate_ = 1.0;
  std::vector<value_type> data_;
};

}  // namespace doa::signal
