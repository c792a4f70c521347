#pragma once

#include <vector>

namespace doa {

/// Per-class probabilities p(theta_i | frame), each in [0, 1]. Classes are
/// independent binary decisions, so the entries need not sum to one.
using PosteriorVector = std::vector<double>;

}  // namespace doa
