#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace doa::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
  });
}

std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double parse_double(const std::string& key, const std::string& token) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || p != token.data() + token.size())
    throw ConfigError(key, "'" + token + "' is not a number");
  return v;
}

}  // namespace

bool key_matches(const std::string& pattern, const std::string& key) {
  std::size_t p = 0, k = 0;
  while (p < pattern.size()) {
    if (pattern[p] == '*') {
      const std::size_t start = k;
      while (k < key.size() && key[k] != '.') ++k;
      if (k == start) return false;
      ++p;
    } else {
      if (k >= key.size() || key[k] != pattern[p]) return false;
      ++p, ++k;
    }
  }
  return k == key.size();
}

Config Config::parse_file(const fs::path& path) {
  Config c;
  std::vector<fs::path> stack;
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  stack.push_back(fs::weakly_canonical(path));
  c.parse_into(ss.str(), path.string(), path.parent_path().empty() ? fs::path(".") : path.parent_path(), stack);
  return c;
}

Config Config::parse_text(const std::string& text, const std::string& origin, const fs::path& base_dir) {
  Config c;
  std::vector<fs::path> stack;
  c.parse_into(text, origin, base_dir, stack);
  return c;
}

void Config::parse_into(const std::string& text, const std::string& origin, const fs::path& base_dir,
                        std::vector<fs::path>& stack) {
  std::istringstream in(text);
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("syntax", where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(key, where + ": malformed key");
    if (key == "include") {
      const fs::path target = base_dir / value;
      const fs::path canon = fs::weakly_canonical(target);
      if (std::find(stack.begin(), stack.end(), canon) != stack.end())
        throw ConfigError("include", where + ": include cycle through " + target.string());
      std::ifstream f(target);
      if (!f) throw ConfigError("include", where + ": cannot open " + target.string());
      std::stringstream ss;
      ss << f.rdbuf();
      stack.push_back(canon);
      parse_into(ss.str(), target.string(), target.parent_path(), stack);
      stack.pop_back();
      continue;
    }
    values_[key] = {value, where};
    dirs_[key] = base_dir;
  }
}

void Config::set(const std::string& key, std::string value, std::string origin) {
  values_[key] = {std::move(value), std::move(origin)};
  dirs_[key] = ".";
}

void Config::check_keys(const std::vector<std::string>& patterns) const {
  for (const auto& [key, v] : values_) {
    const bool ok = std::any_of(patterns.begin(), patterns.end(),
                                [&](const std::string& p) { return key_matches(p, key); });
    if (!ok) throw ConfigError(key, v.origin + ": unknown config key '" + key + "'");
  }
}

const ConfigValue& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "missing required config key '" + key + "'");
  return it->second;
}

std::string Config::str(const std::string& key) const { return get(key).text; }

std::string Config::str(const std::string& key, const std::string& fallback) const {
  return has(key) ? str(key) : fallback;
}

double Config::number(const std::string& key) const {
  const auto t = split_tokens(get(key).text);
  if (t.size() != 1) throw ConfigError(key, get(key).origin + ": '" + key + "' expects one number");
  return parse_double(key, t[0]);
}

double Config::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

std::uint64_t Config::u64(const std::string& key) const {
  const std::string t = trim(get(key).text);
  std::uint64_t v = 0;
  const int base = t.rfind("0x", 0) == 0 ? 16 : 10;
  const char* first = t.data() + (base == 16 ? 2 : 0);
  const auto [p, ec] = std::from_chars(first, t.data() + t.size(), v, base);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key, get(key).origin + ": '" + key + "' expects an unsigned integer");
  return v;
}

std::size_t Config::count(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

std::size_t Config::count(const std::string& key, std::size_t fallback) const {
  return has(key) ? count(key) : fallback;
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string t = trim(get(key).text);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ConfigError(key, get(key).origin + ": '" + key + "' expects true or false");
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& t : split_tokens(get(key).text)) out.push_back(parse_double(key, t));
  if (out.empty()) throw ConfigError(key, get(key).origin + ": '" + key + "' is empty");
  return out;
}

std::vector<double> Config::numbers(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

std::vector<std::string> Config::words(const std::string& key) const { return split_tokens(get(key).text); }

std::vector<std::string> Config::words(const std::string& key, std::vector<std::string> fallback) const {
  return has(key) ? words(key) : fallback;
}

std::vector<std::vector<double>> Config::groups(const std::string& key) const {
  std::vector<std::vector<double>> out;
  std::istringstream in(get(key).text);
  std::string part;
  while (std::getline(in, part, ';')) {
    std::vector<double> g;
    for (const auto& t : split_tokens(part)) g.push_back(parse_double(key, t));
    if (!g.empty()) out.push_back(std::move(g));
  }
  return out;
}

fs::path Config::path(const std::string& key) const {
  const fs::path p = trim(get(key).text);
  if (p.empty()) throw ConfigError(key, get(key).origin + ": '" + key + "' is empty");
  if (p.is_absolute()) return p;
  return dirs_.at(key) / p;
}

std::vector<fs::path> Config::paths(const std::string& key) const {
  std::vector<fs::path> out;
  for (const auto& w : words(key)) {
    const fs::path p = w;
    out.push_back(p.is_absolute() ? p : dirs_.at(key) / p);
  }
  return out;
}

std::vector<std::string> Config::names(const std::string& prefix) const {
  std::set<std::string> out;
  const std::string head = prefix + ".";
  for (const auto& [key, v] : values_) {
    if (key.rfind(head, 0) != 0) continue;
    const auto dot = key.find('.', head.size());
    if (dot != std::string::npos) out.insert(key.substr(head.size(), dot - head.size()));
  }
  return {out.begin(), out.end()};
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [key, v] : values_) out += key + " = " + trim(v.text) + "\n";
  return out;
}

}  // namespace doa::cli
