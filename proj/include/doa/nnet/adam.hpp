#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "doa/nnet/tensor.hpp"

namespace doa::nn {

template <class T>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

/// One bias-corrected Adam update. Moments are allocated on the first call.
/// Throws "diverged" (leaving weights untouched) on a non-finite gradient.
template <class T>
void adam_step(const std::vector<Tensor<T>*>& weights, const std::vector<Tensor<T>*>& grads, AdamState<T>& state) {
  if (weights.size() != grads.size()) throw std::invalid_argument("adam_step: weights and gradients differ in count");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i]->size() != grads[i]->size()) throw std::invalid_argument("adam_step: shape mismatch");
    for (T g : grads[i]->data)
      if (!std::isfinite(g)) throw std::runtime_error("diverged: non-finite gradient");
  }
  if (state.m.empty()) {
    for (const auto* w : weights) {
      state.m.emplace_back(w->size(), T(0));
      state.v.emplace_back(w->size(), T(0));
    }
  }
  if (state.m.size() != weights.size()) throw std::invalid_argument("adam_step: state does not match weights");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  const T step_size = static_cast<T>(state.lr / c1);
  const T inv_sqrt_c2 = static_cast<T>(1.0 / std::sqrt(c2));
  const T eps = static_cast<T>(state.epsilon);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    T* w = weights[i]->data.data();
    const T* g = grads[i]->data.data();
    T* m = state.m[i].data();
    T* v = state.v[i].data();
    const std::size_t n = weights[i]->size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      w[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_c2 + eps);
    }
  }
}

}  // namespace doa::nn
