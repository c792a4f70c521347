#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "doa/dataset/grid.hpp"
#include "doa/nnet/network.hpp"
#include "doa/posterior.hpp"
#include "doa/signal/signal.hpp"

namespace doa::estimator {

struct BlockEstimate {
  std::vector<double> averaged_probs;
  std::vector<double> doas;  ///< L grid angles in degrees, ascending
  std::vector<std::size_t> classes;  ///< matching class indices, ascending
  std::size_t L = 0;
};

/// Elementwise mean of the frame posteriors. Throws on an empty block or
/// frames of different lengths.
std::vector<double> block_average(std::span<const PosteriorVector> frames);

/// Picks the L classes with the highest averaged probability. Ties go to
/// the lower class index. Throws unless 1 <= L <= I = grid.size().
BlockEstimate select_top_l(std::span<const double> averaged, std::size_t L, const dataset::DoaGrid& grid);

/// Frame posteriors of frames [begin, begin + count) of `spec`.
std::vector<PosteriorVector> frame_posteriors(const nn::Network<float>& model, const signal::Spectrogram& spec,
                                              std::size_t begin, std::size_t count);

/// predict -> block_average -> select_top_l over one block of frames.
BlockEstimate estimate_block(const nn::Network<float>& model, const signal::Spectrogram& spec, std::size_t begin,
                             std::size_t count, std::size_t L, const dataset::DoaGrid& grid);

}  // namespace doa::estimator
