#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "doa/nnet/model_spec.hpp"
#include "doa/nnet/tensor.hpp"

namespace doa::nn {

enum class Mode { Train, Eval };

struct ForwardContext {
  Mode mode = Mode::Eval;
  std::uint64_t seed = 0;  ///< dropout masks derive from this
  std::size_t batch = 1;
};

// Activations travel as column-major matrices. Conv activations are
// (channels x B*rows*K) with position index (b*rows + r)*K + k; dense
// activations are (features x B). The flattened conv output is the same
// memory viewed as (channels*rows*K x B).

template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  /// Training-path forward; caches what backward() needs.
  virtual Mat<T> forward(const Mat<T>& x, const ForwardContext& ctx) = 0;
  /// Accumulates parameter gradients and returns dL/dx (empty when
  /// need_input_grad is false and the layer can skip it).
  virtual Mat<T> backward(const Mat<T>& dy, bool need_input_grad) = 0;
  /// Cache-free evaluation path; safe to call concurrently.
  virtual Mat<T> apply(const Mat<T>& x, std::size_t batch) const = 0;
  virtual std::vector<Tensor<T>*> parameters() { return {}; }
  virtual std::vector<Tensor<T>*> gradients() { return {}; }
  virtual std::string name() const = 0;
};

/// 2x1 valid convolution across neighbouring microphone rows, stride 1,
/// followed by nothing (activation is a separate layer).
/// weight: (F x 2C), column t*C + c holds tap t of input channel c.
template <class T>
class Conv2x1 final : public Layer<T> {
 public:
  Conv2x1(std::size_t in_channels, std::size_t out_channels, std::size_t rows_in, std::size_t bins);
  Mat<T> forward(const Mat<T>& x, const ForwardContext& ctx) override;
  Mat<T> backward(const Mat<T>& dy, bool need_input_grad) override;
  Mat<T> apply(const Mat<T>& x, std::size_t batch) const override;
  std::vector<Tensor<T>*> parameters() override { return {&weight, &bias}; }
  std::vector<Tensor<T>*> gradients() override { return {&weight_grad, &bias_grad}; }
  std::string name() const override { return "conv2x1"; }

  std::size_t rows_out() const noexcept { return rows_in_ - 1; }

  Tensor<T> weight, bias, weight_grad, bias_grad;

 private:
  Mat<T> im2col(const Mat<T>& x, std::size_t batch) const;

  std::size_t in_c_, out_c_, rows_in_, bins_;
  std::size_t batch_ = 0;
  Mat<T> cols_;
};

/// y = W x + b. weight: (out x in).
template <class T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t in, std::size_t out);
  Mat<T> forward(const Mat<T>& x, const ForwardContext& ctx) override;
  Mat<T> backward(const Mat<T>& dy, bool need_input_grad) override;
  Mat<T> apply(const Mat<T>& x, std::size_t batch) const override;
  std::vector<Tensor<T>*> parameters() override { return {&weight, &bias}; }
  std::vector<Tensor<T>*> gradients() override { return {&weight_grad, &bias_grad}; }
  std::string name() const override { return "dense"; }

  Tensor<T> weight, bias, weight_grad, bias_grad;

 private:
  Mat<T> input_;
};

template <class T>
class Relu final : public Layer<T> {
 public:
  Mat<T> forward(const Mat<T>& x, const ForwardContext& ctx) override;
  Mat<T> backward(const Mat<T>& dy, bool need_input_grad) override;
  Mat<T> apply(const Mat<T>& x, std::size_t batch) const override;
  std::string name() const override { return "relu"; }

 private:
  Mat<T> pre_;
};

/// Inverted dropout: in training, each unit survives with probability
/// 1 - rate and is scaled by 1/(1 - rate). Identity in eval mode.
template <class T>
class Dropout final : public Layer<T> {
 public:
  Dropout(double rate, std::uint64_t salt) : rate_(rate), salt_(salt) {}
  Mat<T> forward(const Mat<T>& x, const ForwardContext& ctx) override;
  Mat<T> backward(const Mat<T>& dy, bool need_input_grad) override;
  Mat<T> apply(const Mat<T>& x, std::size_t) const override { return x; }
  std::string name() const override { return "dropout"; }

 private:
  double rate_;
  std::uint64_t salt_;
  Mat<T> mask_;
};

/// Reinterprets (C x B*P) conv activations as (C*P x B).
template <class T>
class Flatten final : public Layer<T> {
 public:
  Mat<T> forward(const Mat<T>& x, const ForwardContext& ctx) override;
  Mat<T> backward(const Mat<T>& dy, bool need_input_grad) override;
  Mat<T> apply(const Mat<T>& x, std::size_t batch) const override;
  std::string name() const override { return "flatten"; }

 private:
  Eigen::Index rows_ = 0, cols_ = 0;
};

/// Applies inverted dropout to a flat buffer (the standalone operation
/// behind the Dropout layer). Throws for rate outside [0, 1).
std::vector<double> dropout(std::span<const double> activations, double rate, Mode mode, std::uint64_t seed);

/// The phase-map CNN. Output of forward() is the (I x B) logit matrix;
/// sigmoid() maps it to posteriors.
template <class T>
class Network {
 public:
  explicit Network(ModelSpec spec);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const ModelSpec& spec() const noexcept { return spec_; }

  /// He-uniform for ReLU layers, Glorot-uniform for the output layer,
  /// zero biases.
  void initialize(std::uint64_t seed);

  /// `input` is (1 x B*M*K): B phase maps, each mic-major.
  Mat<T> forward(const Mat<T>& input, const ForwardContext& ctx);
  /// Back-propagates dL/dlogits; gradients accumulate until zero_grad().
  /// Returns dL/dinput when requested.
  Mat<T> backward(const Mat<T>& dlogits, bool need_input_grad = false);
  Mat<T> logits(const Mat<T>& input, std::size_t batch) const;
  /// Eval-mode posteriors (I x B).
  Mat<T> predict(const Mat<T>& input, std::size_t batch) const;

  void zero_grad();
  std::vector<Tensor<T>*> parameters();
  std::vector<const Tensor<T>*> parameters() const;
  std::vector<Tensor<T>*> gradients();
  std::size_t parameter_count() const;

  std::vector<std::vector<T>> snapshot() const;
  void restore(const std::vector<std::vector<T>>& values);

  const std::vector<std::unique_ptr<Layer<T>>>& layers() const noexcept { return layers_; }

 private:
  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

template <class T>
Mat<T> sigmoid(const Mat<T>& logits);

/// Packs phase maps (record-major float32) into the (1 x B*M*K) input layout.
template <class T>
Mat<T> pack_input(std::span<const float> features, std::size_t batch);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace doa::nn
