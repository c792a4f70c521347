#include "doa/nnet/model_spec.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace doa::nn {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("model spec: bad integer for " + key + ": " + v);
  }
  if (pos != v.size() || v.front() == '-') throw std::invalid_argument("model spec: bad integer for " + key + ": " + v);
  return static_cast<std::size_t>(n);
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_size(key, item));
  }
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

std::size_t ModelSpec::flat_features() const noexcept {
  const std::size_t last = conv_filters.empty() ? 1 : conv_filters.back();
  return last * conv_output_rows() * bins;
}

void ModelSpec::validate() const {
  if (mics < 2) throw std::invalid_argument("model spec: need at least 2 microphones");
  if (bins == 0) throw std::invalid_argument("model spec: bins must be positive");
  if (conv_filters.empty()) throw std::invalid_argument("model spec: at least one convolution layer required");
  if (conv_filters.size() > mics - 1)
    throw std::invalid_argument("model spec: " + std::to_string(conv_filters.size()) +
                                " convolution layers exceed M-1 = " + std::to_string(mics - 1));
  for (std::size_t f : conv_filters)
    if (f == 0) throw std::invalid_argument("model spec: zero filter count");
  for (std::size_t w : dense_widths)
    if (w == 0) throw std::invalid_argument("model spec: zero dense width");
  if (classes == 0) throw std::invalid_argument("model spec: classes must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("model spec: dropout rate must be in [0, 1)");
}

std::size_t ModelSpec::parameter_count() const noexcept {
  std::size_t n = 0;
  std::size_t channels = 1;
  for (std::size_t f : conv_filters) {
    n += f * 2 * channels + f;
    channels = f;
  }
  std::size_t width = flat_features();
  for (std::size_t w : dense_widths) {
    n += w * width + w;
    width = w;
  }
  return n + classes * width + classes;
}

std::string ModelSpec::to_text() const {
  char rate[64];
  std::snprintf(rate, sizeof rate, "%.17g", dropout_rate);
  std::string s;
  s += "mics = " + std::to_string(mics) + "\n";
  s += "bins = " + std::to_string(bins) + "\n";
  s += "conv_filters = " + join(conv_filters) + "\n";
  s += "dense_widths = " + join(dense_widths) + "\n";
  s += "classes = " + std::to_string(classes) + "\n";
  s += "dropout_rate = " + std::string(rate) + "\n";
  return s;
}

ModelSpec ModelSpec::uniform(std::size_t mics, std::size_t bins, std::size_t conv_layers, std::size_t filters,
                             std::vector<std::size_t> dense_widths, std::size_t classes, double dropout_rate) {
  ModelSpec s;
  s.mics = mics;
  s.bins = bins;
  s.conv_filters.assign(conv_layers, filters);
  s.dense_widths = std::move(dense_widths);
  s.classes = classes;
  s.dropout_rate = dropout_rate;
  return s;
}

ModelSpec parse_model_spec(const std::string& text) {
  ModelSpec s;
  s.dense_widths.clear();
  bool seen_mics = false, seen_bins = false, seen_conv = false, seen_classes = false;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("model spec: malformed line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "mics") {
      s.mics = parse_size(key, value);
      seen_mics = true;
    } else if (key == "bins") {
      s.bins = parse_size(key, value);
      seen_bins = true;
    } else if (key == "conv_filters") {
      s.conv_filters = parse_list(key, value);
      seen_conv = true;
    } else if (key == "dense_widths") {
      s.dense_widths = parse_list(key, value);
    } else if (key == "classes") {
      s.classes = parse_size(key, value);
      seen_classes = true;
    } else if (key == "dropout_rate") {
      try {
        s.dropout_rate = std::stod(value);
      } catch (const std::exception&) {
        throw std::invalid_argument("model spec: bad dropout_rate: " + value);
      }
    } else {
      throw std::invalid_argument("model spec: unknown key " + key);
    }
  }
  if (!seen_mics || !seen_bins || !seen_conv || !seen_classes)
    throw std::invalid_argument("model spec: missing required key");
  s.validate();
  return s;
}

}  // namespace doa::nn
