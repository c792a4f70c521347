#include "doa/nnet/model_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace doa::nn {
namespace {

template <class U>
void put(std::ofstream& out, U v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

class Reader {
 public:
  Reader(std::vector<char> bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

  const char* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw std::runtime_error("model file " + name_ + " is truncated");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <class U>
  U get() {
    U v;
    std::memcpy(&v, take(sizeof v), sizeof v);
    return v;
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::vector<char> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_model(const std::filesystem::path& path, const Network<float>& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  const std::string spec = net.spec().to_text();
  out.write("DNET", 4);
  put<std::uint32_t>(out, kModelFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.size()));
  out.write(spec.data(), static_cast<std::streamsize>(spec.size()));
  put<std::uint64_t>(out, net.parameter_count());
  for (const auto* p : net.parameters())
    out.write(reinterpret_cast<const char*>(p->data.data()), static_cast<std::streamsize>(p->size() * sizeof(float)));
  if (!out) throw std::runtime_error("failed writing model file " + path.string());
}

Network<float> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}), path.string());

  if (std::memcmp(r.take(4), "DNET", 4) != 0) throw std::runtime_error("not a model file: " + path.string());
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion)
    throw std::runtime_error("model file version " + std::to_string(version) + " is not supported (expected " +
                             std::to_string(kModelFormatVersion) + ")");
  const auto spec_len = r.get<std::uint32_t>();
  const char* spec_text = r.take(spec_len);
  ModelSpec spec;
  try {
    spec = parse_model_spec(std::string(spec_text, spec_len));
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("corrupt model spec: ") + e.what());
  }
  const auto count = r.get<std::uint64_t>();
  if (count != spec.parameter_count())
    throw std::runtime_error("model spec mismatch: file holds " + std::to_string(count) + " weights, spec needs " +
                             std::to_string(spec.parameter_count()));

  Network<float> net(spec);
  for (auto* p : net.parameters()) {
    std::memcpy(p->data.data(), r.take(p->size() * sizeof(float)), p->size() * sizeof(float));
    for (float v : p->data)
      if (!std::isfinite(v)) throw std::runtime_error("model file holds non-finite weights");
  }
  if (r.remaining() != 0) throw std::runtime_error("model file has trailing bytes");
  return net;
}

}  // namespace doa::nn
