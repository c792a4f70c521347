#include "doa/nnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "doa/nnet/adam.hpp"
#include "doa/nnet/loss.hpp"
#include "doa/rng.hpp"

namespace doa::nn {
namespace {

void check_shapes(const ModelSpec& spec, const dataset::Dataset& data) {
  if (data.mics != spec.mics || data.bins != spec.bins || data.classes != spec.classes) {
    char msg[200];
    std::snprintf(msg, sizeof msg, "dataset shape (M=%zu, K=%zu, I=%zu) does not match model (M=%zu, K=%zu, I=%zu)",
                  data.mics, data.bins, data.classes, spec.mics, spec.bins, spec.classes);
    throw std::invalid_argument(msg);
  }
}

// Gathers records into the (1 x B*M*K) input layout plus (I x B) targets.
void gather(const dataset::Dataset& data, std::span<const std::size_t> idx, Mat<float>& input, Mat<float>& targets) {
  const std::size_t fs = data.feature_size();
  input.resize(1, static_cast<Eigen::Index>(idx.size() * fs));
  targets.setZero(static_cast<Eigen::Index>(data.classes), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto f = data.feature(idx[b]);
    std::copy(f.begin(), f.end(), input.data() + b * fs);
    const std::uint64_t bits = data.labels[idx[b]];
    for (std::size_t i = 0; i < data.classes; ++i)
      if ((bits >> i) & 1u) targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = 1.0f;
  }
}

}  // namespace

double evaluate_loss(const Network<float>& net, const dataset::Dataset& data, const std::vector<std::size_t>& indices,
                     std::size_t batch_size) {
  check_shapes(net.spec(), data);
  std::vector<std::size_t> all;
  const std::vector<std::size_t>* idx = &indices;
  if (indices.empty()) {
    all.resize(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    idx = &all;
  }
  if (idx->empty()) return 0.0;
  double total = 0.0;
  Mat<float> input, targets;
  for (std::size_t start = 0; start < idx->size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, idx->size() - start);
    gather(data, std::span(*idx).subspan(start, n), input, targets);
    total += bce_with_logits<float>(net.logits(input, n), targets, nullptr) * static_cast<double>(n);
  }
  return total / static_cast<double>(idx->size());
}

TrainResult train(Network<float>& net, const dataset::Dataset& data, const TrainOptions& options) {
  check_shapes(net.spec(), data);
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (options.batch_size == 0) throw std::invalid_argument("train: batch size must be positive");
  if (!(options.validation_fraction >= 0.0 && options.validation_fraction < 1.0))
    throw std::invalid_argument("train: validation fraction must be in [0, 1)");

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng split_rng(derive_seed(options.seed, {0x53504c4954ULL}));
  split_rng.shuffle(order.begin(), order.end());
  const auto n_val = static_cast<std::size_t>(std::floor(options.validation_fraction * static_cast<double>(data.size())));
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  if (tr.empty()) throw std::invalid_argument("train: no training records left after the validation split");
  if (val.empty()) val = tr;

  AdamState<float> adam;
  adam.lr = options.learning_rate;
  TrainResult result;
  double best = INFINITY;
  auto best_weights = net.snapshot();
  std::size_t since_best = 0;
  std::uint64_t step = 0;
  Mat<float> input, targets, dlogits;

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    CounterRng epoch_rng(derive_seed(options.seed, {0x45504f4348ULL, epoch}));
    epoch_rng.shuffle(tr.begin(), tr.end());
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < tr.size(); start += options.batch_size) {
      const std::size_t n = std::min(options.batch_size, tr.size() - start);
      gather(data, std::span(tr).subspan(start, n), input, targets);
      const ForwardContext ctx{Mode::Train, derive_seed(options.seed, {0x44524f50ULL, step++}), n};
      const Mat<float> logits = net.forward(input, ctx);
      loss_sum += bce_with_logits<float>(logits, targets, &dlogits) * static_cast<double>(n);
      net.zero_grad();
      net.backward(dlogits);
      adam_step(net.parameters(), net.gradients(), adam);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(tr.size());
    stats.val_loss = evaluate_loss(net, data, val);
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss))
      throw std::runtime_error("diverged: non-finite loss");
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(stats);
    if (options.on_epoch) options.on_epoch(stats);

    if (stats.val_loss < best) {
      best = stats.val_loss;
      best_weights = net.snapshot();
      result.best_epoch = epoch;
      since_best = 0;
    } else if (options.patience > 0 && ++since_best >= options.patience) {
      result.stopped_early = epoch < options.epochs;
      break;
    }
  }
  if (result.best_epoch > 0) net.restore(best_weights);
  return result;
}

void write_training_log(const std::filesystem::path& path, const std::vector<EpochStats>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write training log " + path.string());
  out << "epoch,train_loss,val_loss,seconds\n";
  char line[160];
  for (const auto& s : history) {
    std::snprintf(line, sizeof line, "%zu,%.8g,%.8g,%.3f\n", s.epoch, s.train_loss, s.val_loss, s.seconds);
    out << line;
  }
}

}  // namespace doa::nn
