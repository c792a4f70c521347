#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace doa::cli {

inline const std::vector<std::string> kCommands{"simulate", "synth", "train", "infer", "eval", "ablate", "dynamic"};

/// Keys accepted by `command`, including the shared room/array keys.
std::vector<std::string> allowed_keys(const std::string& command);

/// Validates the config against the command's schema, runs it and writes
/// out/manifest.json. Human-readable progress goes to `log`; infer prints
/// its estimates to `out`. ConfigError signals a bad configuration.
void run_command(const std::string& command, const Config& config, std::ostream& out, std::ostream& log);

}  // namespace doa::cli
