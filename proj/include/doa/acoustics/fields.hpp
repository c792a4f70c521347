#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "doa/acoustics/geometry.hpp"
#include "doa/signal/signal.hpp"

namespace doa::acoustics {

/// Far-field steering vector: element m is exp(-j 2 pi f tau_m), where tau_m
/// is the arrival delay of microphone m relative to the array centre.
std::vector<std::complex<double>> steering_vector(const ArrayGeometry& array, double doa_deg,
                                                  double freq_hz, double speed_of_sound = 343.0);

/// Theoretical spatial coherence of a spherically isotropic field between
/// two points `spacing` metres apart: sin(x)/x with x = 2 pi f d / c.
double diffuse_coherence(double freq_hz, double spacing, double speed_of_sound = 343.0);

struct DiffuseNoiseOptions {
  std::size_t num_plane_waves = 512;
  double speed_of_sound = 343.0;
  /// Apply a -3 dB/octave tilt to every plane wave (babble-like noise).
  bool babble_tilt = false;
  /// Tilt corner; below this the babble spectrum is flat.
  double tilt_floor_hz = 100.0;
};

/// Isotropic spherically diffuse noise: independent Gaussian plane waves from
/// directions spread uniformly over the sphere (Fibonacci lattice), each
/// delayed per microphone. The result has unit average power per channel.
/// Requires num_plane_waves >= 64.
signal::MultichannelSignal diffuse_noise(const ArrayGeometry& array, std::size_t length, double fs,
                                         std::uint64_t seed, const DiffuseNoiseOptions& options = {});

/// Diffuse noise whose spectrum falls at 3 dB per octave, emulating the
/// low-frequency dominance of babble.
signal::MultichannelSignal babble_like_noise(const ArrayGeometry& array, std::size_t length, double fs,
                                             std::uint64_t seed, std::size_t num_plane_waves = 512);

}  // namespace doa::acoustics
