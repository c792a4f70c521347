#include "doa/acoustics/rir.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <tuple>
#include <numbers>
#include <stdexcept>

#include "doa/signal/fft.hpp"
#include "doa/signal/wav.hpp"

namespace doa::acoustics {
namespace {

constexpr double kPi = std::numbers::pi;

// Adds gain * windowed_sinc(n - delay) for the 81 taps around `delay`.
// sin(pi (x0 + i)) = (-1)^i sin(pi x0), and the Hann window cosine is
// advanced by rotation, so each image costs two sin/cos pairs.
void add_fractional_impulse(std::vector<double>& h, double delay, double gain) {
  constexpr int half = kFractionalDelayHalfWidth;
  constexpr double width = half + 1;  // window reaches zero at |x| = 41
  const double base = std::floor(delay);
  const double x0 = base - delay;  // in (-1, 0]
  const auto n0 = static_cast<long>(base);
  const long len = static_cast<long>(h.size());
  if (n0 - half >= len || n0 + half < 0) return;

  if (std::abs(x0) < 1e-12) {
    if (n0 >= 0 && n0 < len) h[static_cast<std::size_t>(n0)] += gain;
    return;
  }
  const double sin_x0 = std::sin(kPi * x0);
  const double step = kPi / width;
  double ca = std::cos((x0 - half) * step), sa = std::sin((x0 - half) * step);
  const double cs = std::cos(step), ss = std::sin(step);
  for (int i = -half; i <= half; ++i) {
    const long n = n0 + i;
    const double x = x0 + i;
    if (n >= 0 && n < len) {
      const double sign = (i & 1) ? -1.0 : 1.0;
      const double sinc = sign * sin_x0 / (kPi * x);
      h[static_cast<std::size_t>(n)] += gain * 0.5 * (1.0 + ca) * sinc;
    }
    const double nc = ca * cs - sa * ss;
    sa = sa * cs + ca * ss;
    ca = nc;
  }
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("rir '" + path.string() + "': truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

double eyring_reflection_coefficient(const RoomConfig& room) {
  room.validate();
  if (room.rt60 == 0.0) return 0.0;
  const auto& d = room.dimensions;
  const double volume = d.x * d.y * d.z;
  const double surface = 2.0 * (d.x * d.y + d.x * d.z + d.y * d.z);
  // Eyring: rt60 = 24 ln(10) V / (-c S ln(1 - alpha)), and beta = sqrt(1 - alpha).
  const double k = 24.0 * std::log(10.0) * volume / (room.speed_of_sound * surface * room.rt60);
  return std::exp(-0.5 * k);
}

namespace {

// Calls fn(distance, reflection order) for every image within `max_dist` of the mic.
template <typename Fn>
void for_each_image(const RoomConfig& room, Vec3 source, Vec3 mic, double max_dist, Fn&& fn) {
  const Vec3 L = room.dimensions;
  const int nx = static_cast<int>(std::ceil(max_dist / (2.0 * L.x))) + 1;
  const int ny = static_cast<int>(std::ceil(max_dist / (2.0 * L.y))) + 1;
  const int nz = static_cast<int>(std::ceil(max_dist / (2.0 * L.z))) + 1;
  const double max_dist2 = max_dist * max_dist;
  for (int ix = -nx; ix <= nx; ++ix) {
    for (int qx = 0; qx <= 1; ++qx) {
      const double dx = (1 - 2 * qx) * source.x + 2.0 * ix * L.x - mic.x;
      const int ox = std::abs(ix - qx) + std::abs(ix);
      if (dx * dx > max_dist2) continue;
      for (int iy = -ny; iy <= ny; ++iy) {
        for (int qy = 0; qy <= 1; ++qy) {
          const double dy = (1 - 2 * qy) * source.y + 2.0 * iy * L.y - mic.y;
          const int oy = std::abs(iy - qy) + std::abs(iy);
          const double dxy2 = dx * dx + dy * dy;
          if (dxy2 > max_dist2) continue;
          for (int iz = -nz; iz <= nz; ++iz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const double dz = (1 - 2 * qz) * source.z + 2.0 * iz * L.z - mic.z;
              const double d2 = dxy2 + dz * dz;
              if (d2 > max_dist2) continue;
              const int oz = std::abs(iz - qz) + std::abs(iz);
              fn(std::sqrt(d2), ox + oy + oz);
            }
          }
        }
      }
    }
  }
}

// T20 of sum_o beta^o * by_order[o], the response with reflection coefficient beta.
double decay_t60(const std::vector<std::vector<double>>& by_order, std::size_t len, double beta, double fs) {
  std::vector<double> h(len, 0.0);
  double b = 1.0;
  for (const auto& taps : by_order) {
    for (std::size_t n = 0; n < len; ++n) h[n] += b * taps[n];
    b *= beta;
    if (b < 1e-15) break;
  }
  try {
    return schroeder_rt60(h, fs);
  } catch (const std::invalid_argument&) {
    return 0.0;
  }
}

double calibrate_reflection_coefficient(const RoomConfig& room, double fs) {
  const Vec3 L = room.dimensions;
  const Vec3 source{0.31 * L.x, 0.37 * L.y, 0.52 * L.z};
  const Vec3 mic{0.63 * L.x, 0.58 * L.y, 0.55 * L.z};
  const std::size_t len = default_rir_length(room, distance(source, mic), fs);
  const double max_dist = (static_cast<double>(len) + kFractionalDelayHalfWidth + 1) / fs * room.speed_of_sound;
  // The response split by reflection order, each part with unit coefficient.
  std::vector<std::vector<double>> by_order;
  for_each_image(room, source, mic, max_dist, [&](double dist, int order) {
    if (static_cast<std::size_t>(order) >= by_order.size()) by_order.resize(order + 1, std::vector<double>(len, 0.0));
    add_fractional_impulse(by_order[order], dist / room.speed_of_sound * fs, 1.0 / (4.0 * kPi * dist));
  });

  // T60 grows with beta; bisect on a = -ln(beta) around the Eyring value.
  const double a0 = -std::log(eyring_reflection_coefficient(room));
  double lo = 0.2 * a0, hi = 5.0 * a0;
  for (int it = 0; it < 40; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (decay_t60(by_order, len, std::exp(-mid), fs) > room.rt60)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(-std::sqrt(lo * hi));
}

}  // namespace

double reflection_coefficient(const RoomConfig& room, double fs) {
  room.validate();
  if (room.rt60 == 0.0) return 0.0;
  static std::mutex mutex;
  static std::map<std::tuple<double, double, double, double, double, double>, double> cache;
  const auto key = std::make_tuple(room.dimensions.x, room.dimensions.y, room.dimensions.z, room.rt60,
                                   room.speed_of_sound, fs);
  {
    std::lock_guard lock(mutex);
    if (const auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double beta = calibrate_reflection_coefficient(room, fs);
  std::lock_guard lock(mutex);
  cache.emplace(key, beta);
  return beta;
}

std::size_t default_rir_length(const RoomConfig& room, double direct_distance, double fs) {
  const auto reverb = static_cast<std::size_t>(std::ceil(1.2 * room.rt60 * fs));
  const auto direct = static_cast<std::size_t>(std::ceil(direct_distance / room.speed_of_sound * fs)) +
                      kFractionalDelayHalfWidth + 2;
  const auto cap = std::max(static_cast<std::size_t>(std::ceil(fs)), direct);
  return std::min(std::max(reverb, direct), cap);
}

std::vector<double> image_method_rir(const RoomConfig& room, Vec3 source, Vec3 mic, double fs,
                                     std::size_t max_len) {
  room.validate();
  if (!(fs > 0.0)) throw std::invalid_argument("sample rate must be positive");
  if (!room.contains(source)) throw std::invalid_argument("source position outside room");
  if (!room.contains(mic)) throw std::invalid_argument("microphone position outside room");
  const double direct = distance(source, mic);
  if (direct <= 0.0) throw std::invalid_argument("source and microphone coincide");
  if (max_len == 0) max_len = default_rir_length(room, direct, fs);

  const double c = room.speed_of_sound;
  const double samples_per_metre = fs / c;
  std::vector<double> h(max_len, 0.0);
  const double beta = reflection_coefficient(room, fs);
  if (beta == 0.0) {
    add_fractional_impulse(h, direct * samples_per_metre, 1.0 / (4.0 * kPi * direct));
    return h;
  }

  const double max_dist = (static_cast<double>(max_len) + kFractionalDelayHalfWidth + 1) / samples_per_metre;
  const Vec3 L = room.dimensions;
  const auto max_order = static_cast<std::size_t>(
      2.0 * (std::ceil(max_dist / L.x) + std::ceil(max_dist / L.y) + std::ceil(max_dist / L.z)) + 16);
  std::vector<double> beta_pow(max_order, 1.0);
  for (std::size_t i = 1; i < beta_pow.size(); ++i) beta_pow[i] = beta_pow[i - 1] * beta;
  for_each_image(room, source, mic, max_dist, [&](double dist, int order) {
    add_fractional_impulse(h, dist * samples_per_metre, beta_pow[static_cast<std::size_t>(order)] / (4.0 * kPi * dist));
  });
  return h;
}

Rir image_method_rir(const RoomConfig& room, Vec3 source, const ArrayGeometry& array, double fs,
                     std::size_t max_len) {
  if (max_len == 0) {
    double far = 0.0;
    for (const auto& p : array.positions()) far = std::max(far, distance(source, p));
    max_len = default_rir_length(room, far, fs);
  }
  Rir rir;
  rir.sample_rate = fs;
  rir.taps.reserve(array.size());
  for (const auto& p : array.positions()) rir.taps.push_back(image_method_rir(room, source, p, fs, max_len));
  return rir;
}

signal::MultichannelSignal apply_rir(const Rir& rir, std::span<const double> source, std::size_t length) {
  if (rir.taps.empty()) throw std::invalid_argument("empty RIR");
  std::vector<std::vector<double>> out;
  out.reserve(rir.num_mics());
  for (const auto& h : rir.taps) {
    auto y = signal::convolve(source, h);
    if (length != 0) y.resize(length, 0.0);
    out.push_back(std::move(y));
  }
  return {std::move(out), rir.sample_rate};
}

double schroeder_rt60(std::span<const double> taps, double fs) {
  std::vector<double> edc(taps.size());
  double acc = 0.0;
  for (std::size_t i = taps.size(); i-- > 0;) {
    acc += taps[i] * taps[i];
    edc[i] = acc;
  }
  if (!(acc > 0.0)) throw std::invalid_argument("zero-energy response");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double db = 10.0 * std::log10(edc[i] / acc);
    if (db > -5.0) continue;
    if (db < -25.0) break;
    const double t = static_cast<double>(i) / fs;
    sx += t;
    sy += db;
    sxx += t * t;
    sxy += t * db;
    ++count;
  }
  if (count < 2) throw std::invalid_argument("decay range too short for an RT60 estimate");
  const double n = static_cast<double>(count);
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return -60.0 / slope;
}

void write_rir(const std::filesystem::path& path, const Rir& rir) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("rir '" + path.string() + "': cannot open for writing");
  out.write("DRIR", 4);
  write_u32(out, kRirFormatVersion);
  write_u32(out, static_cast<std::uint32_t>(rir.num_mics()));
  write_u32(out, static_cast<std::uint32_t>(std::lround(rir.sample_rate)));
  write_u32(out, static_cast<std::uint32_t>(rir.length()));
  for (const auto& ch : rir.taps) {
    if (ch.size() != rir.length()) throw std::invalid_argument("RIR channels differ in length");
    for (double v : ch) write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) throw std::runtime_error("rir '" + path.string() + "': write failed");
}

Rir read_rir(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("rir '" + path.string() + "': cannot open");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "DRIR", 4) != 0)
    throw std::runtime_error("rir '" + path.string() + "': bad magic");
  const auto version = read_u32(in, path);
  if (version != kRirFormatVersion)
    throw std::runtime_error("rir '" + path.string() + "': unsupported version " + std::to_string(version));
  const auto mics = read_u32(in, path);
  const auto fs = read_u32(in, path);
  const auto taps = read_u32(in, path);
  if (mics == 0 || fs == 0) throw std::runtime_error("rir '" + path.string() + "': empty header fields");
  Rir rir;
  rir.sample_rate = fs;
  rir.taps.assign(mics, std::vector<double>(taps));
  for (auto& ch : rir.taps)
    for (double& v : ch) v = static_cast<double>(std::bit_cast<float>(read_u32(in, path)));
  return rir;
}

Rir read_rir_wav(const std::filesystem::path& path) {
  const auto sig = signal::read_wav(path);
  Rir rir;
  rir.sample_rate = sig.sample_rate();
  for (std::size_t m = 0; m < sig.num_channels(); ++m) {
    const auto ch = sig.channel(m);
    rir.taps.emplace_back(ch.begin(), ch.end());
  }
  return rir;
}

}  // namespace doa::acoustics
