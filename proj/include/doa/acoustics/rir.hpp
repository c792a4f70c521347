#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "doa/acoustics/geometry.hpp"
#include "doa/signal/signal.hpp"

namespace doa::acoustics {

/// Sampled room impulse responses, one tap sequence per microphone.
struct Rir {
  std::vector<std::vector<double>> taps;
  double sample_rate = 16000.0;

  std::size_t num_mics() const noexcept { return taps.size(); }
  std::size_t length() const noexcept { return taps.empty() ? 0 : taps.front().size(); }
};

/// Half-width of the windowed-sinc fractional delay filter (81 taps total).
inline constexpr int kFractionalDelayHalfWidth = 40;

/// Reflection coefficient from inverting Eyring's formula.
double eyring_reflection_coefficient(const RoomConfig& room);

/// Uniform wall reflection coefficient for a target RT60. Starts from the
/// Eyring value and bisects until the image-method response for a canonical
/// source and mic has a Schroeder T20 equal to rt60 (cached per room and
/// rate). Eyring alone overshoots: grazing horizontal paths rarely meet the
/// floor or ceiling, and the all-positive images add coherently at low
/// frequencies. Returns 0 for rt60 == 0.
double reflection_coefficient(const RoomConfig& room, double fs = 16000.0);

/// Default RIR length: ceil(1.2 * rt60 * fs) capped at one second, and never
/// shorter than the direct path plus the fractional-delay filter.
std::size_t default_rir_length(const RoomConfig& room, double direct_distance, double fs);

/// Image-method impulse response from `source` to one microphone.
/// `max_len` = 0 selects default_rir_length(). Throws when either point is
/// outside the room or they coincide.
std::vector<double> image_method_rir(const RoomConfig& room, Vec3 source, Vec3 mic, double fs,
                                     std::size_t max_len = 0);

/// Responses from `source` to every microphone of `array`, all of one length.
Rir image_method_rir(const RoomConfig& room, Vec3 source, const ArrayGeometry& array, double fs,
                     std::size_t max_len = 0);

/// Convolves one source signal with every microphone's response and keeps
/// the first `length` samples (0 keeps the full convolution).
signal::MultichannelSignal apply_rir(const Rir& rir, std::span<const double> source,
                                     std::size_t length = 0);

/// Estimates RT60 from a response by Schroeder backward integration and a
/// line fit of the -5..-25 dB decay range (T20 extrapolated to 60 dB).
double schroeder_rt60(std::span<const double> taps, double fs);

// ---- RIR container ------------------------------------------------------
// Binary layout, little-endian:
//   "DRIR" | u32 version | u32 M | u32 fs | u32 taps | f32 data[M][taps]
// Metadata travels in a JSON sidecar next to the binary file.

inline constexpr std::uint32_t kRirFormatVersion = 1;

void write_rir(const std::filesystem::path& path, const Rir& rir);
Rir read_rir(const std::filesystem::path& path);

/// Reads measured responses from a multichannel WAV (one channel per mic).
Rir read_rir_wav(const std::filesystem::path& path);

}  // namespace doa::acoustics
