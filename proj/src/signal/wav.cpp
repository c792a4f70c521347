#include "doa/signal/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace doa::signal {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::runtime_error wav_error(const std::filesystem::path& path, const std::string& what) {
  return std::runtime_error("wav '" + path.string() + "': " + what);
}

std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}
void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

MultichannelSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw wav_error(path, "cannot open file");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw wav_error(path, "not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      throw wav_error(path, "truncated chunk '" + std::string(reinterpret_cast<const char*>(chunk), 4) + "'");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw wav_error(path, "fmt chunk too short");
      format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      rate = le32(bytes.data() + body + 4);
      bits = le16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw wav_error(path, "extensible fmt chunk too short");
        format = le16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw wav_error(path, "missing fmt chunk");
  if (data == nullptr) throw wav_error(path, "missing data chunk");
  if (channels == 0) throw wav_error(path, "zero channels");
  if (rate == 0) throw wav_error(path, "zero sample rate");

  std::size_t width = 0;
  if (format == kFormatPcm && bits == 16) {
    width = 2;
  } else if (format == kFormatFloat && bits == 32) {
    width = 4;
  } else {
    throw wav_error(path, "unsupported codec (format " + std::to_string(format) + ", " +
                              std::to_string(bits) + " bits); need PCM16 or float32");
  }
  const std::size_t frame_bytes = width * channels;
  if (data_size % frame_bytes != 0) throw wav_error(path, "data size is not a whole number of frames");
  const std::size_t frames = data_size / frame_bytes;

  MultichannelSignal out(channels, frames, static_cast<double>(rate));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * frame_bytes + c * width;
      double v;
      if (width == 2) {
        v = static_cast<double>(static_cast<std::int16_t>(le16(p))) / 32768.0;
      } else {
        v = static_cast<double>(std::bit_cast<float>(le32(p)));
      }
      out.channel(c)[i] = v;
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const MultichannelSignal& signal, WavFormat format) {
  const std::size_t channels = signal.num_channels();
  if (channels == 0) throw wav_error(path, "no channels to write");
  const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
  const std::size_t width = bits / 8;
  const std::size_t data_size = signal.length() * channels * width;
  if (data_size > 0xFFFFFFF0u) throw wav_error(path, "signal too long for RIFF");

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put32(out, static_cast<std::uint32_t>(36 + data_size));
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, format == WavFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  put16(out, static_cast<std::uint16_t>(channels));
  const auto rate = static_cast<std::uint32_t>(std::lround(signal.sample_rate()));
  put32(out, rate);
  put32(out, static_cast<std::uint32_t>(rate * channels * width));
  put16(out, static_cast<std::uint16_t>(channels * width));
  put16(out, bits);
  out += "data";
  put32(out, static_cast<std::uint32_t>(data_size));
  for (std::size_t i = 0; i < signal.length(); ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = signal.channel(c)[i];
      if (format == WavFormat::Pcm16) {
        const double q = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      }
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw wav_error(path, "cannot open for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw wav_error(path, "write failed");
}

}  // namespace doa::signal
