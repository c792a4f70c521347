#include "doa/acoustics/fields.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doa/rng.hpp"
#include "doa/signal/fft.hpp"

namespace doa::acoustics {

using cd = std::complex<double>;

std::vector<cd> steering_vector(const ArrayGeometry& array, double doa_deg, double freq_hz,
                                double speed_of_sound) {
  if (!(freq_hz >= 0.0)) throw std::invalid_argument("frequency must be non-negative");
  const auto tau = array.far_field_delays(doa_deg, speed_of_sound);
  std::vector<cd> a(tau.size());
  for (std::size_t m = 0; m < tau.size(); ++m)
    a[m] = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz * tau[m]);
  return a;
}

double diffuse_coherence(double freq_hz, double spacing, double speed_of_sound) {
  const double x = 2.0 * std::numbers::pi * freq_hz * spacing / speed_of_sound;
  return std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x;
}

signal::MultichannelSignal diffuse_noise(const ArrayGeometry& array, std::size_t length, double fs,
                                         std::uint64_t seed, const DiffuseNoiseOptions& options) {
  if (options.num_plane_waves < 64) throw std::invalid_argument("diffuse noise needs >= 64 plane waves");
  if (length == 0) throw std::invalid_argument("diffuse noise length must be positive");
  const std::size_t n = std::max<std::size_t>(signal::next_pow2(length), 2);
  const std::size_t bins = n / 2 + 1;
  const std::size_t mics = array.size();
  const std::size_t waves = options.num_plane_waves;
  const Vec3 centre = array.center();

  std::vector<double> shape(bins, 1.0);
  shape[0] = 0.0;
  if (options.babble_tilt) {
    for (std::size_t k = 1; k < bins; ++k) {
      const double f = static_cast<double>(k) * fs / static_cast<double>(n);
      shape[k] = 1.0 / std::sqrt(std::max(f, options.tilt_floor_hz) / options.tilt_floor_hz);
    }
  }

  std::vector<std::vector<cd>> spectra(mics, std::vector<cd>(bins));
  std::vector<cd> wave(bins);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t p = 0; p < waves; ++p) {
    // Fibonacci lattice point p on the unit sphere.
    const double z = 1.0 - (2.0 * static_cast<double>(p) + 1.0) / static_cast<double>(waves);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(p);
    const Vec3 u{r * std::cos(phi), r * std::sin(phi), z};

    CounterRng rng(derive_seed(seed, {p}));
    for (std::size_t k = 0; k < bins; ++k) {
      const bool real_bin = (k == 0 || k == bins - 1);
      const double re = rng.gaussian();
      const double im = real_bin ? 0.0 : rng.gaussian();
      wave[k] = shape[k] * cd(re, im);
    }
    for (std::size_t m = 0; m < mics; ++m) {
      const double tau = -(array[m] - centre).dot(u) / options.speed_of_sound;
      const cd step = std::polar(1.0, -2.0 * std::numbers::pi * fs / static_cast<double>(n) * tau);
      cd phasor(1.0, 0.0);
      auto& acc = spectra[m];
      for (std::size_t k = 0; k < bins; ++k) {
        acc[k] += wave[k] * phasor;
        phasor *= step;
      }
    }
  }

  signal::MultichannelSignal out(mics, length, fs);
  std::vector<double> time(n);
  for (std::size_t m = 0; m < mics; ++m) {
    spectra[m][bins - 1] = cd(spectra[m][bins - 1].real(), 0.0);
    signal::irfft(spectra[m], time);
    std::copy_n(time.begin(), length, out.channel(m).begin());
  }
  const double power = out.power();
  if (power > 0.0) out *= 1.0 / std::sqrt(power);
  return out;
}

signal::MultichannelSignal babble_like_noise(const ArrayGeometry& array, std::size_t length, double fs,
                                             std::uint64_t seed, std::size_t num_plane_waves) {
  DiffuseNoiseOptions opt;
  opt.num_plane_waves = num_plane_waves;
  opt.babble_tilt = true;
  return diffuse_noise(array, length, fs, seed, opt);
}

}  // namespace doa::acoustics
