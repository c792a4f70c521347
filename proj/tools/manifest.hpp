#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"

namespace doa::cli {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Records a run: command, seed, hash of the resolved config and a checksum
/// of every artifact (paths relative to `out`). Written to out/manifest.json.
void write_manifest(const std::filesystem::path& out, const std::string& command, std::uint64_t seed,
                    const Config& config, const std::vector<std::filesystem::path>& artifacts);

}  // namespace doa::cli
