#include "doa/nnet/inference.hpp"

#include <algorithm>
#include <stdexcept>

namespace doa::nn {

PosteriorVector predict(const Network<float>& net, const dataset::PhaseMap& phase) {
  if (phase.mics != net.spec().mics || phase.bins != net.spec().bins)
    throw std::invalid_argument("phase map shape does not match the model input");
  return predict_batch(net, phase.values, 1).front();
}

std::vector<PosteriorVector> predict_batch(const Network<float>& net, std::span<const float> features,
                                           std::size_t count, std::size_t chunk) {
  const std::size_t fs = net.spec().mics * net.spec().bins;
  if (features.size() != count * fs) throw std::invalid_argument("feature buffer does not match the model input");
  if (chunk == 0) chunk = 1;
  std::vector<PosteriorVector> out;
  out.reserve(count);
  for (std::size_t start = 0; start < count; start += chunk) {
    const std::size_t n = std::min(chunk, count - start);
    const Mat<float> p = net.predict(pack_input<float>(features.subspan(start * fs, n * fs), n), n);
    for (Eigen::Index b = 0; b < p.cols(); ++b) {
      PosteriorVector v(static_cast<std::size_t>(p.rows()));
      for (Eigen::Index i = 0; i < p.rows(); ++i) v[static_cast<std::size_t>(i)] = p(i, b);
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace doa::nn
