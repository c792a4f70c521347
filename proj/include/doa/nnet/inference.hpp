#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "doa/dataset/features.hpp"
#include "doa/nnet/network.hpp"
#include "doa/posterior.hpp"

namespace doa::nn {

/// Eval-mode posteriors p(theta_i | Phi) for one phase map. The outputs are
/// independent sigmoids and need not sum to one.
PosteriorVector predict(const Network<float>& net, const dataset::PhaseMap& phase);

/// Posteriors for `count` record-major phase maps. Shape errors throw.
std::vector<PosteriorVector> predict_batch(const Network<float>& net, std::span<const float> features,
                                           std::size_t count, std::size_t chunk = 1024);

}  // namespace doa::nn
