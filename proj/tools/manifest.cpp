#include "manifest.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

#include "json.hpp"

namespace doa::cli {

namespace fs = std::filesystem;

namespace {

struct Sha256 {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

  Sha256() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256: init failed");
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx.get(), data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::string out;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
      std::snprintf(buf, sizeof buf, "%02x", md[i]);
      out += buf;
    }
    return out;
  }
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

void write_manifest(const fs::path& out, const std::string& command, std::uint64_t seed, const Config& config,
                    const std::vector<fs::path>& artifacts) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = seed;
  // Where results go and how many workers ran do not change them.
  Config hashed = config;
  hashed.erase("out");
  hashed.erase("threads");
  j["config_sha256"] = sha256_hex(hashed.canonical());
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [key, v] : config.values()) cfg[key] = v.text;
  j["config"] = cfg;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& a : artifacts) {
    const fs::path full = a.is_absolute() ? a : out / a;
    list.push_back({{"path", fs::relative(full, out).generic_string()},
                    {"bytes", fs::file_size(full)},
                    {"sha256", sha256_file(full)}});
  }
  j["artifacts"] = list;
  std::ofstream f(out / "manifest.json");
  f << j.dump(2) << "\n";
  if (!f) throw std::runtime_error("cannot write " + (out / "manifest.json").string());
}

}  // namespace doa::cli
