#include "doa/eval/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doa/acoustics/fields.hpp"
#include "doa/rng.hpp"
#include "doa/signal/dsp.hpp"
#include "doa/signal/wav.hpp"

namespace doa::eval {

std::vector<double> noise_burst_source(std::size_t length, double fs, std::uint64_t seed, const BurstOptions& o) {
  if (!(o.min_on_s > 0 && o.max_on_s >= o.min_on_s && o.min_off_s >= 0 && o.max_off_s >= o.min_off_s))
    throw std::invalid_argument("invalid burst durations");
  CounterRng rng(seed);
  std::vector<double> out(length);
  for (double& v : out) v = rng.gaussian();

  CounterRng gate_rng(derive_seed(seed, {0x47415445ULL}));
  std::vector<double> gain(length, 0.0);
  bool on = gate_rng.uniform() < 0.5;
  const auto ramp = static_cast<std::size_t>(std::round(o.ramp_s * fs));
  std::size_t pos = 0;
  while (pos < length) {
    const double dur = on ? gate_rng.uniform(o.min_on_s, o.max_on_s) : gate_rng.uniform(o.min_off_s, o.max_off_s);
    const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(dur * fs)));
    const std::size_t end = std::min(length, pos + n);
    if (on) {
      for (std::size_t i = pos; i < end; ++i) {
        const std::size_t edge = std::min(i - pos, end - 1 - i);
        gain[i] = edge >= ramp ? 1.0 : 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(edge) / ramp);
      }
    }
    pos = end;
    on = !on;
  }
  bool any = false;
  for (std::size_t i = 0; i < length; ++i) {
    out[i] *= gain[i];
    any = any || gain[i] > 0.0;
  }
  // A burst-free draw would make a silent source; force one burst.
  if (!any && length > 0) {
    CounterRng fix(derive_seed(seed, {0x464958ULL}));
    for (std::size_t i = 0; i < length; ++i) out[i] = fix.gaussian();
  }
  return out;
}

std::vector<double> speech_excerpt(const std::filesystem::path& wav, std::size_t length, double fs,
                                   std::uint64_t seed) {
  const auto sig = signal::read_wav(wav);
  if (std::abs(sig.sample_rate() - fs) > 1e-9)
    throw std::invalid_argument(wav.string() + ": sample rate " + std::to_string(sig.sample_rate()) +
                                " differs from " + std::to_string(fs));
  const auto ch = sig.channel(0);
  std::vector<double> out(length, 0.0);
  if (ch.size() <= length) {
    std::copy(ch.begin(), ch.end(), out.begin());
  } else {
    CounterRng rng(seed);
    const std::size_t start = rng.below(ch.size() - length + 1);
    std::copy(ch.begin() + static_cast<std::ptrdiff_t>(start),
              ch.begin() + static_cast<std::ptrdiff_t>(start + length), out.begin());
  }
  return out;
}

const char* noise_name(NoiseType t) noexcept {
  switch (t) {
    case NoiseType::White: return "white";
    case NoiseType::Diffuse: return "diffuse";
    case NoiseType::Babble: return "babble";
  }
  return "white";
}

NoiseType parse_noise_type(const std::string& name) {
  if (name == "white") return NoiseType::White;
  if (name == "diffuse") return NoiseType::Diffuse;
  if (name == "babble") return NoiseType::Babble;
  throw std::invalid_argument("unknown noise type: " + name);
}

signal::MultichannelSignal reverberant_mixture(std::span<const acoustics::Rir* const> rirs,
                                               std::span<const std::vector<double>> sources, std::size_t length) {
  if (rirs.size() != sources.size() || rirs.empty()) throw std::invalid_argument("one response per source required");
  signal::MultichannelSignal mix(rirs.front()->num_mics(), length, rirs.front()->sample_rate);
  for (std::size_t l = 0; l < rirs.size(); ++l) {
    if (rirs[l]->num_mics() != mix.num_channels()) throw std::invalid_argument("responses differ in microphone count");
    mix += acoustics::apply_rir(*rirs[l], sources[l], length);
  }
  return mix;
}

signal::MultichannelSignal add_noise(const signal::MultichannelSignal& clean, const NoiseSpec& noise,
                                     const acoustics::ArrayGeometry& array, std::uint64_t seed) {
  const std::size_t M = clean.num_channels();
  const std::size_t n = clean.length();
  const double fs = clean.sample_rate();
  signal::MultichannelSignal noise_sig;
  switch (noise.type) {
    case NoiseType::White: noise_sig = signal::white_noise(n, M, derive_seed(seed, {1}), fs); break;
    case NoiseType::Diffuse: noise_sig = acoustics::diffuse_noise(array, n, fs, derive_seed(seed, {2})); break;
    case NoiseType::Babble: noise_sig = acoustics::babble_like_noise(array, n, fs, derive_seed(seed, {3})); break;
  }
  auto out = signal::mix_at_snr(clean, noise_sig, noise.snr_db);
  if (noise.white_floor_snr_db) {
    // Floor level is set against the clean mixture, not the noisy one.
    auto floor = signal::white_noise(n, M, derive_seed(seed, {4}), fs);
    const double gain = std::sqrt(clean.power() / floor.power() * std::pow(10.0, -*noise.white_floor_snr_db / 10.0));
    floor *= gain;
    out += floor;
  }
  return out;
}

}  // namespace doa::eval
