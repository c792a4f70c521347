#include "doa/estimator/estimator.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "doa/dataset/features.hpp"
#include "doa/nnet/inference.hpp"

namespace doa::estimator {

std::vector<double> block_average(std::span<const PosteriorVector> frames) {
  if (frames.empty()) throw std::invalid_argument("block_average: empty block");
  std::vector<double> avg(frames.front().size(), 0.0);
  for (const auto& f : frames) {
    if (f.size() != avg.size()) throw std::invalid_argument("block_average: posterior lengths differ");
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += f[i];
  }
  const double n = static_cast<double>(frames.size());
  for (double& v : avg) v /= n;
  return avg;
}

BlockEstimate select_top_l(std::span<const double> averaged, std::size_t L, const dataset::DoaGrid& grid) {
  if (averaged.size() != grid.size()) throw std::invalid_argument("select_top_l: posterior length differs from grid");
  if (L == 0 || L > averaged.size())
    throw std::invalid_argument("select_top_l: L = " + std::to_string(L) + " outside [1, " +
                                std::to_string(averaged.size()) + "]");
  std::vector<std::size_t> idx(averaged.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return averaged[a] > averaged[b]; });
  idx.resize(L);
  std::sort(idx.begin(), idx.end());

  BlockEstimate out;
  out.averaged_probs.assign(averaged.begin(), averaged.end());
  out.classes = idx;
  out.L = L;
  for (std::size_t i : idx) out.doas.push_back(grid[i]);
  return out;
}

std::vector<PosteriorVector> frame_posteriors(const nn::Network<float>& model, const signal::Spectrogram& spec,
                                              std::size_t begin, std::size_t count) {
  const auto& ms = model.spec();
  if (spec.num_channels() != ms.mics || spec.num_bins() != ms.bins)
    throw std::invalid_argument("spectrogram shape does not match the model input");
  if (count == 0 || begin + count > spec.num_frames()) throw std::out_of_range("frame range outside the spectrogram");
  const std::size_t fs = ms.mics * ms.bins;
  std::vector<float> features(count * fs);
  for (std::size_t n = 0; n < count; ++n)
    dataset::extract_phase_map_into(spec, begin + n, std::span(features).subspan(n * fs, fs));
  return nn::predict_batch(model, features, count);
}

BlockEstimate estimate_block(const nn::Network<float>& model, const signal::Spectrogram& spec, std::size_t begin,
                             std::size_t count, std::size_t L, const dataset::DoaGrid& grid) {
  const auto frames = frame_posteriors(model, spec, begin, count);
  return select_top_l(block_average(frames), L, grid);
}

}  // namespace doa::estimator
