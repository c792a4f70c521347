#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace doa::cli {

/// Raised for anything wrong with the configuration itself; the CLI maps it
/// to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct ConfigValue {
  std::string text;
  std::string origin;  ///< file:line, or "--flag" for command-line overrides
};

/// Flat `key = value` configuration.
///
///   # comment
///   include = shared/rooms.conf     (relative to the including file)
///   room.lab.dims = 6 6 2.7
///
/// Later assignments override earlier ones, so a file can refine what it
/// includes. Include cycles are errors.
class Config {
 public:
  static Config parse_file(const std::filesystem::path& path);
  static Config parse_text(const std::string& text, const std::string& origin = "<text>",
                           const std::filesystem::path& base_dir = ".");

  void set(const std::string& key, std::string value, std::string origin);
  void erase(const std::string& key) { values_.erase(key), dirs_.erase(key); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, ConfigValue>& values() const noexcept { return values_; }

  /// Throws ConfigError naming the first key that matches no pattern.
  /// A pattern is a literal key or contains `*`, which matches one
  /// dot-free name segment.
  void check_keys(const std::vector<std::string>& patterns) const;

  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key, bool fallback) const;
  /// Whitespace or comma separated numbers.
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::string> words(const std::string& key) const;
  std::vector<std::string> words(const std::string& key, std::vector<std::string> fallback) const;
  /// `;`-separated groups of numbers, e.g. "1 2 3; 4 5 6".
  std::vector<std::vector<double>> groups(const std::string& key) const;
  /// Path values are resolved against the directory of the file that set them.
  std::filesystem::path path(const std::string& key) const;
  std::vector<std::filesystem::path> paths(const std::string& key) const;

  /// Names N appearing in keys "prefix.N.<field>", sorted.
  std::vector<std::string> names(const std::string& prefix) const;

  /// Sorted "key = value" lines; hashing this gives the config hash.
  std::string canonical() const;

 private:
  const ConfigValue& get(const std::string& key) const;
  void parse_into(const std::string& text, const std::string& origin, const std::filesystem::path& base_dir,
                  std::vector<std::filesystem::path>& stack);

  std::map<std::string, ConfigValue> values_;
  std::map<std::string, std::filesystem::path> dirs_;
};

bool key_matches(const std::string& pattern, const std::string& key);

}  // namespace doa::cli
