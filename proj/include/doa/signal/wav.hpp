#pragma once

#include <filesystem>

#include "doa/signal/signal.hpp"

namespace doa::signal {

enum class WavFormat { Pcm16, Float32 };

/// Reads a RIFF/WAVE file (PCM16 or IEEE float32, any channel count).
/// Throws std::runtime_error describing the problem on malformed input.
MultichannelSignal read_wav(const std::filesystem::path& path);

/// Writes interleaved samples. PCM16 clips to [-1, 1).
void write_wav(const std::filesystem::path& path, const MultichannelSignal& signal,
               WavFormat format = WavFormat::Float32);

}  // namespace doa::signal
