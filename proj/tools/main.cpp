// doa: command-line front end for the DOA toolkit.
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"

namespace {

const char* describe(const std::string& cmd) {
  if (cmd == "simulate") return "Simulate and index a bank of room impulse responses";
  if (cmd == "synth") return "Build a phase-map training set from simulated RIRs";
  if (cmd == "train") return "Train the CNN on a dataset file";
  if (cmd == "infer") return "Estimate DOAs for a WAV file or a simulated mixture";
  if (cmd == "eval") return "Run the test design and write metrics CSV";
  if (cmd == "ablate") return "Train and evaluate every conv depth per array size";
  return "Render the moving-source scenario and write posterior traces";
}

// Quotes a message for the one-line error record.
std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

int main(int argc, char** argv) {
  using doa::cli::Config;
  using doa::cli::ConfigError;

  CLI::App app{"Multi-speaker DOA estimation with a phase-map CNN", "doa"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "root seed (overrides the config)");
  app.add_option("--threads", threads, "worker cap (default: all cores)")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory (default: out)");

  for (const auto& cmd : doa::cli::kCommands) {
    auto* sub = app.add_subcommand(cmd, describe(cmd));
    std::string keys = "Config keys:";
    for (const auto& k : doa::cli::allowed_keys(cmd)) keys += " " + k;
    sub->footer(keys);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    Config config = config_path.empty() ? Config{} : Config::parse_file(config_path);
    if (seed) config.set("seed", std::to_string(*seed), "--seed");
    if (threads) config.set("threads", std::to_string(*threads), "--threads");
    if (!out_dir.empty()) config.set("out", out_dir, "--out");
    doa::cli::run_command(command, config, std::cout, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "error: kind=config key=" << e.key() << " message=" << quoted(e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: kind=runtime message=" << quoted(e.what()) << "\n";
    return 1;
  }
  return 0;
}
