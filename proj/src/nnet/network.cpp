#include "doa/nnet/network.hpp"

#include <cmath>
#include <stdexcept>

#include "doa/rng.hpp"

namespace doa::nn {
namespace {

template <class T>
void fill_uniform(Tensor<T>& t, double limit, CounterRng& rng) {
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-limit, limit));
}

}  // namespace

// ---- Conv2x1 --------------------------------------------------------------

template <class T>
Conv2x1<T>::Conv2x1(std::size_t in_channels, std::size_t out_channels, std::size_t rows_in, std::size_t bins)
    : weight({out_channels, 2 * in_channels}),
      bias({out_channels}),
      weight_grad({out_channels, 2 * in_channels}),
      bias_grad({out_channels}),
      in_c_(in_channels),
      out_c_(out_channels),
      rows_in_(rows_in),
      bins_(bins) {
  if (rows_in < 2) throw std::invalid_argument("conv2x1 needs at least two input rows");
}

template <class T>
Mat<T> Conv2x1<T>::im2col(const Mat<T>& x, std::size_t batch) const {
  const auto C = static_cast<Eigen::Index>(in_c_);
  const auto K = static_cast<Eigen::Index>(bins_);
  const auto rin = static_cast<Eigen::Index>(rows_in_);
  const auto rout = rin - 1;
  if (x.rows() != C || x.cols() != static_cast<Eigen::Index>(batch) * rin * K)
    throw std::invalid_argument("conv2x1: input shape mismatch");
  Mat<T> cols(2 * C, static_cast<Eigen::Index>(batch) * rout * K);
  for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(batch); ++b)
    for (Eigen::Index r = 0; r < rout; ++r) {
      const Eigen::Index p0 = (b * rin + r) * K;
      const Eigen::Index q0 = (b * rout + r) * K;
      cols.block(0, q0, C, K) = x.middleCols(p0, K);
      cols.block(C, q0, C, K) = x.middleCols(p0 + K, K);
    }
  return cols;
}

template <class T>
Mat<T> Conv2x1<T>::forward(const Mat<T>& x, const ForwardContext& ctx) {
  batch_ = ctx.batch;
  cols_ = im2col(x, ctx.batch);
  Mat<T> y(static_cast<Eigen::Index>(out_c_), cols_.cols());
  y.noalias() = weight.matrix() * cols_;
  y.colwise() += bias.matrix().col(0);
  return y;
}

template <class T>
Mat<T> Conv2x1<T>::apply(const Mat<T>& x, std::size_t batch) const {
  const Mat<T> cols = im2col(x, batch);
  Mat<T> y(static_cast<Eigen::Index>(out_c_), cols.cols());
  y.noalias() = weight.matrix() * cols;
  y.colwise() += bias.matrix().col(0);
  return y;
}

template <class T>
Mat<T> Conv2x1<T>::backward(const Mat<T>& dy, bool need_input_grad) {
  if (cols_.size() == 0) throw std::logic_error("conv2x1: backward without cached forward");
  if (dy.rows() != static_cast<Eigen::Index>(out_c_) || dy.cols() != cols_.cols())
    throw std::invalid_argument("conv2x1: upstream gradient shape mismatch");
  weight_grad.matrix().noalias() += dy * cols_.transpose();
  bias_grad.matrix().col(0) += dy.rowwise().sum();
  if (!need_input_grad) return {};

  const Mat<T> dcols = weight.matrix().transpose() * dy;
  const auto C = static_cast<Eigen::Index>(in_c_);
  const auto K = static_cast<Eigen::Index>(bins_);
  const auto rin = static_cast<Eigen::Index>(rows_in_);
  const auto rout = rin - 1;
  Mat<T> dx = Mat<T>::Zero(C, static_cast<Eigen::Index>(batch_) * rin * K);
  for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(batch_); ++b)
    for (Eigen::Index r = 0; r < rout; ++r) {
      const Eigen::Index p0 = (b * rin + r) * K;
      const Eigen::Index q0 = (b * rout + r) * K;
      dx.middleCols(p0, K) += dcols.block(0, q0, C, K);
      dx.middleCols(p0 + K, K) += dcols.block(C, q0, C, K);
    }
  return dx;
}

// ---- Dense ----------------------------------------------------------------

template <class T>
Dense<T>::Dense(std::size_t in, std::size_t out)
    : weight({out, in}), bias({out}), weight_grad({out, in}), bias_grad({out}) {}

template <class T>
Mat<T> Dense<T>::forward(const Mat<T>& x, const ForwardContext& ctx) {
  input_ = x;
  return apply(x, ctx.batch);
}

template <class T>
Mat<T> Dense<T>::apply(const Mat<T>& x, std::size_t) const {
  if (x.rows() != static_cast<Eigen::Index>(weight.shape[1])) throw std::invalid_argument("dense: input shape mismatch");
  Mat<T> y(static_cast<Eigen::Index>(weight.shape[0]), x.cols());
  y.noalias() = weight.matrix() * x;
  y.colwise() += bias.matrix().col(0);
  return y;
}

template <class T>
Mat<T> Dense<T>::backward(const Mat<T>& dy, bool need_input_grad) {
  if (dy.rows() != static_cast<Eigen::Index>(weight.shape[0]) || dy.cols() != input_.cols())
    throw std::invalid_argument("dense: upstream gradient shape mismatch");
  weight_grad.matrix().noalias() += dy * input_.transpose();
  bias_grad.matrix().col(0) += dy.rowwise().sum();
  if (!need_input_grad) return {};
  Mat<T> dx(input_.rows(), input_.cols());
  dx.noalias() = weight.matrix().transpose() * dy;
  return dx;
}

// ---- Relu / Dropout / Flatten ---------------------------------------------

template <class T>
Mat<T> Relu<T>::forward(const Mat<T>& x, const ForwardContext&) {
  pre_ = x;
  return x.cwiseMax(T(0));
}

template <class T>
Mat<T> Relu<T>::apply(const Mat<T>& x, std::size_t) const {
  return x.cwiseMax(T(0));
}

template <class T>
Mat<T> Relu<T>::backward(const Mat<T>& dy, bool) {
  if (dy.rows() != pre_.rows() || dy.cols() != pre_.cols()) throw std::invalid_argument("relu: gradient shape mismatch");
  return (pre_.array() > T(0)).select(dy, Mat<T>::Zero(dy.rows(), dy.cols()));
}

template <class T>
Mat<T> Dropout<T>::forward(const Mat<T>& x, const ForwardContext& ctx) {
  if (ctx.mode == Mode::Eval || rate_ == 0.0) {
    mask_.resize(0, 0);
    return x;
  }
  mask_.resize(x.rows(), x.cols());
  CounterRng rng(derive_seed(ctx.seed, {salt_}));
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
  T* m = mask_.data();
  for (Eigen::Index i = 0; i < mask_.size(); ++i) m[i] = rng.uniform() < rate_ ? T(0) : keep_scale;
  return x.cwiseProduct(mask_);
}

template <class T>
Mat<T> Dropout<T>::backward(const Mat<T>& dy, bool) {
  if (mask_.size() == 0) return dy;
  return dy.cwiseProduct(mask_);
}

template <class T>
Mat<T> Flatten<T>::forward(const Mat<T>& x, const ForwardContext& ctx) {
  rows_ = x.rows();
  cols_ = x.cols();
  return apply(x, ctx.batch);
}

template <class T>
Mat<T> Flatten<T>::apply(const Mat<T>& x, std::size_t batch) const {
  const auto b = static_cast<Eigen::Index>(batch);
  if (b == 0 || x.size() % b != 0) throw std::invalid_argument("flatten: batch does not divide activation size");
  return Eigen::Map<const Mat<T>>(x.data(), x.size() / b, b);
}

template <class T>
Mat<T> Flatten<T>::backward(const Mat<T>& dy, bool) {
  return Eigen::Map<const Mat<T>>(dy.data(), rows_, cols_);
}

std::vector<double> dropout(std::span<const double> activations, double rate, Mode mode, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  Dropout<double> layer(rate, 0);
  const Eigen::Map<const Mat<double>> x(activations.data(), static_cast<Eigen::Index>(activations.size()), 1);
  const Mat<double> y = layer.forward(x, {mode, seed, 1});
  return {y.data(), y.data() + y.size()};
}

// ---- Network --------------------------------------------------------------

template <class T>
Network<T>::Network(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t channels = 1;
  std::size_t rows = spec_.mics;
  std::uint64_t salt = 0;
  for (std::size_t filters : spec_.conv_filters) {
    layers_.push_back(std::make_unique<Conv2x1<T>>(channels, filters, rows, spec_.bins));
    layers_.push_back(std::make_unique<Relu<T>>());
    channels = filters;
    --rows;
  }
  layers_.push_back(std::make_unique<Dropout<T>>(spec_.dropout_rate, ++salt));
  layers_.push_back(std::make_unique<Flatten<T>>());
  std::size_t width = spec_.flat_features();
  for (std::size_t w : spec_.dense_widths) {
    layers_.push_back(std::make_unique<Dense<T>>(width, w));
    layers_.push_back(std::make_unique<Relu<T>>());
    layers_.push_back(std::make_unique<Dropout<T>>(spec_.dropout_rate, ++salt));
    width = w;
  }
  layers_.push_back(std::make_unique<Dense<T>>(width, spec_.classes));
}

template <class T>
void Network<T>::initialize(std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, {0x494e4954ULL}));
  Dense<T>* output = nullptr;
  for (auto& layer : layers_) {
    if (auto* conv = dynamic_cast<Conv2x1<T>*>(layer.get())) {
      fill_uniform(conv->weight, std::sqrt(6.0 / static_cast<double>(conv->weight.shape[1])), rng);
      conv->bias.zero();
    } else if (auto* dense = dynamic_cast<Dense<T>*>(layer.get())) {
      fill_uniform(dense->weight, std::sqrt(6.0 / static_cast<double>(dense->weight.shape[1])), rng);
      dense->bias.zero();
      output = dense;
    }
  }
  // The last dense layer feeds the sigmoids: Glorot instead of He.
  const double fan = static_cast<double>(output->weight.shape[0] + output->weight.shape[1]);
  CounterRng out_rng(derive_seed(seed, {0x4f5554ULL}));
  fill_uniform(output->weight, std::sqrt(6.0 / fan), out_rng);
}

template <class T>
Mat<T> Network<T>::forward(const Mat<T>& input, const ForwardContext& ctx) {
  Mat<T> x = input;
  for (auto& layer : layers_) x = layer->forward(x, ctx);
  return x;
}

template <class T>
Mat<T> Network<T>::backward(const Mat<T>& dlogits, bool need_input_grad) {
  Mat<T> g = dlogits;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g, need_input_grad || i > 0);
  return g;
}

template <class T>
Mat<T> Network<T>::logits(const Mat<T>& input, std::size_t batch) const {
  // Eigen takes a different product kernel below four columns; padding the
  // batch keeps each record's result independent of how it was batched.
  constexpr std::size_t kMinBatch = 4;
  if (batch > 0 && batch < kMinBatch && input.size() % static_cast<Eigen::Index>(batch) == 0) {
    const Eigen::Index per = input.size() / static_cast<Eigen::Index>(batch);
    Mat<T> padded(1, per * static_cast<Eigen::Index>(kMinBatch));
    padded.leftCols(input.size()) = input;
    for (std::size_t b = batch; b < kMinBatch; ++b)
      padded.middleCols(static_cast<Eigen::Index>(b) * per, per) = input.rightCols(per);
    return logits(padded, kMinBatch).leftCols(static_cast<Eigen::Index>(batch));
  }
  Mat<T> x = input;
  for (const auto& layer : layers_) x = layer->apply(x, batch);
  return x;
}

template <class T>
Mat<T> Network<T>::predict(const Mat<T>& input, std::size_t batch) const {
  return sigmoid<T>(logits(input, batch));
}

template <class T>
void Network<T>::zero_grad() {
  for (auto* g : gradients()) g->zero();
}

template <class T>
std::vector<Tensor<T>*> Network<T>::parameters() {
  std::vector<Tensor<T>*> out;
  for (auto& layer : layers_)
    for (auto* p : layer->parameters()) out.push_back(p);
  return out;
}

template <class T>
std::vector<const Tensor<T>*> Network<T>::parameters() const {
  std::vector<const Tensor<T>*> out;
  for (const auto& layer : layers_)
    for (auto* p : layer->parameters()) out.push_back(p);
  return out;
}

template <class T>
std::vector<Tensor<T>*> Network<T>::gradients() {
  std::vector<Tensor<T>*> out;
  for (auto& layer : layers_)
    for (auto* g : layer->gradients()) out.push_back(g);
  return out;
}

template <class T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->size();
  return n;
}

template <class T>
std::vector<std::vector<T>> Network<T>::snapshot() const {
  std::vector<std::vector<T>> out;
  for (const auto* p : parameters()) out.push_back(p->data);
  return out;
}

template <class T>
void Network<T>::restore(const std::vector<std::vector<T>>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw std::invalid_argument("snapshot does not match network");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].size() != params[i]->size()) throw std::invalid_argument("snapshot tensor size mismatch");
    params[i]->data = values[i];
  }
}

template <class T>
Mat<T> sigmoid(const Mat<T>& logits) {
  return logits.unaryExpr([](T z) {
    // Split form avoids overflow of exp() for large |z|.
    if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
    const T e = std::exp(z);
    return e / (T(1) + e);
  });
}

template <class T>
Mat<T> pack_input(std::span<const float> features, std::size_t batch) {
  Mat<T> x(1, static_cast<Eigen::Index>(features.size()));
  if (batch == 0 || features.size() % batch != 0) throw std::invalid_argument("feature buffer does not match batch");
  for (std::size_t i = 0; i < features.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = static_cast<T>(features[i]);
  return x;
}

#define DOA_INSTANTIATE(T)                                                  \
  template class Conv2x1<T>;                                                \
  template class Dense<T>;                                                  \
  template class Relu<T>;                                                   \
  template class Dropout<T>;                                                \
  template class Flatten<T>;                                                \
  template class Network<T>;                                                \
  template Mat<T> sigmoid<T>(const Mat<T>&);                                \
  template Mat<T> pack_input<T>(std::span<const float>, std::size_t);

DOA_INSTANTIATE(float)
DOA_INSTANTIATE(double)
#undef DOA_INSTANTIATE

}  // namespace doa::nn
