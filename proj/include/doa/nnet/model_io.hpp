#pragma once

#include <cstdint>
#include <filesystem>

#include "doa/nnet/network.hpp"

namespace doa::nn {

// Little-endian:
//   "DNET" | u32 version | u32 spec_len | spec text (ModelSpec::to_text)
//   | u64 value_count | f32[value_count], parameters in declaration order

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const std::filesystem::path& path, const Network<float>& net);

/// Throws on bad magic, version mismatch, truncation, trailing bytes, and
/// weight blobs that do not match the declared spec.
Network<float> load_model(const std::filesystem::path& path);

}  // namespace doa::nn
