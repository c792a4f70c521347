#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "doa/dataset/dataset.hpp"
#include "doa/nnet/network.hpp"

namespace doa::nn {

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 512;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  /// Share of records held out for validation. With 0 the validation loss
  /// is measured (eval mode) on the training records.
  double validation_fraction = 0.1;
  /// Stop after this many epochs without a validation improvement; 0 runs
  /// every epoch. The best-validation weights are restored either way.
  std::size_t patience = 5;
  /// Called after every epoch.
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

/// Mini-batch Adam on the BCE loss. Deterministic for a given seed.
/// Throws when the dataset shape does not match the model.
TrainResult train(Network<float>& net, const dataset::Dataset& data, const TrainOptions& options);

/// Eval-mode mean BCE over the given records (all when `indices` is empty).
double evaluate_loss(const Network<float>& net, const dataset::Dataset& data,
                     const std::vector<std::size_t>& indices = {}, std::size_t batch_size = 1024);

/// CSV with header epoch,train_loss,val_loss,seconds.
void write_training_log(const std::filesystem::path& path, const std::vector<EpochStats>& history);

}  // namespace doa::nn
