#include "doa/nnet/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doa/nnet/network.hpp"

namespace doa::nn {

BceResult bce_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size() || predictions.empty())
    throw std::invalid_argument("bce_loss: prediction and target lengths differ");
  const double n = static_cast<double>(predictions.size());
  BceResult out;
  out.grad.resize(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double raw = predictions[i];
    const double p = std::clamp(raw, kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double t = targets[i];
    out.loss -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    const bool clamped = raw < kProbabilityClamp || raw > 1.0 - kProbabilityClamp;
    out.grad[i] = clamped ? 0.0 : (p - t) / (p * (1.0 - p)) / n;
  }
  out.loss /= n;
  return out;
}

template <class T>
Mat<T> label_matrix(std::span<const std::uint64_t> labels, std::size_t classes) {
  if (classes > 64) throw std::invalid_argument("label_matrix: more than 64 classes");
  Mat<T> t(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(labels.size()));
  for (std::size_t b = 0; b < labels.size(); ++b)
    for (std::size_t i = 0; i < classes; ++i)
      t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = ((labels[b] >> i) & 1u) ? T(1) : T(0);
  return t;
}

template <class T>
double bce_with_logits(const Mat<T>& logits, const Mat<T>& targets, Mat<T>* dlogits) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols() || logits.size() == 0)
    throw std::invalid_argument("bce_with_logits: logits and targets differ in shape");
  // BCE of sigmoid(z) in the overflow-free form; its exact derivative is p - t,
  // so no clamp is needed on this path.
  double loss = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j)
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double z = static_cast<double>(logits(i, j));
      const double t = static_cast<double>(targets(i, j));
      loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    }
  const double n = static_cast<double>(logits.size());
  if (dlogits) *dlogits = (sigmoid<T>(logits) - targets) / static_cast<T>(n);
  return loss / n;
}

template Mat<float> label_matrix<float>(std::span<const std::uint64_t>, std::size_t);
template Mat<double> label_matrix<double>(std::span<const std::uint64_t>, std::size_t);
template double bce_with_logits<float>(const Mat<float>&, const Mat<float>&, Mat<float>*);
template double bce_with_logits<double>(const Mat<double>&, const Mat<double>&, Mat<double>*);

}  // namespace doa::nn
