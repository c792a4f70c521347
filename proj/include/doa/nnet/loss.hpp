#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "doa/nnet/tensor.hpp"

namespace doa::nn {

inline constexpr double kProbabilityClamp = 1e-7;

struct BceResult {
  double loss = 0.0;
  /// dL/dp for each probability (zero where clamping is active).
  std::vector<double> grad;
};

/// Mean over the I units of -[t log p + (1-t) log(1-p)], with p clamped to
/// [eps, 1-eps]. Throws on length mismatch.
BceResult bce_loss(std::span<const double> predictions, std::span<const double> targets);

/// Multi-hot (I x B) target matrix from label bitmasks.
template <class T>
Mat<T> label_matrix(std::span<const std::uint64_t> labels, std::size_t classes);

/// Batch loss on logits: mean BCE of sigmoid(logits), computed in logit space
/// (equal to bce_loss away from the clamp). Writes dL/dlogits = (p - t) / (I * B) into `dlogits` when it is non-null.
template <class T>
double bce_with_logits(const Mat<T>& logits, const Mat<T>& targets, Mat<T>* dlogits);

}  // namespace doa::nn
