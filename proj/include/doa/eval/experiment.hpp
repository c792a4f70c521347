#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "doa/acoustics/scene.hpp"
#include "doa/baselines/baselines.hpp"
#include "doa/dataset/dataset.hpp"
#include "doa/dataset/grid.hpp"
#include "doa/eval/metrics.hpp"
#include "doa/eval/mixture.hpp"
#include "doa/nnet/network.hpp"
#include "doa/nnet/trainer.hpp"
#include "doa/signal/dsp.hpp"

namespace doa::eval {

enum class SourceKind { NoiseBurst, Speech };

/// Source signals for the test mixtures.
struct SourceOptions {
  SourceKind kind = SourceKind::NoiseBurst;
  BurstOptions bursts;
  std::vector<std::filesystem::path> speech_wavs;  ///< used round-robin for Speech
};

/// Signal for source `l` of mixture `index`; independent of the DOAs so every
/// angular combination hears the same material.
std::vector<double> make_source(const SourceOptions& options, std::size_t index, std::size_t l, std::size_t length,
                                double fs, std::uint64_t seed);

struct ExperimentConfig {
  std::vector<acoustics::RoomSetup> rooms;
  acoustics::ArraySpec array;
  std::vector<double> distances{1.0};
  double grid_resolution_deg = 15.0;
  double min_separation_deg = 30.0;
  std::size_t sources = 2;  ///< L, known to every method
  std::vector<double> snrs_db{30.0};
  std::vector<NoiseType> noise_types{NoiseType::White};
  std::optional<double> white_floor_snr_db;
  std::size_t mixtures = 1;  ///< source-signal sets per angular combination
  std::size_t mixture_len = 16000;
  std::size_t block_frames = 50;
  signal::StftParams stft;
  double accuracy_threshold_deg = 5.0;
  double sample_rate = 16000.0;
  SourceOptions source;
  baselines::BaselineOptions baseline;

  /// Number of trials each method runs per (snr, noise type).
  std::size_t trials_per_condition() const;
};

/// All L-subsets of the grid (ascending angles) whose members are pairwise
/// at least `min_separation_deg` apart.
std::vector<std::vector<double>> doa_combinations(const dataset::DoaGrid& grid, std::size_t L,
                                                  double min_separation_deg);

/// RIR tuples the experiment needs (every grid DOA at every position and distance).
acoustics::ScenePlan scene_for(const ExperimentConfig& config);

struct TrialInput {
  const signal::Spectrogram& spec;
  std::size_t begin = 0;
  std::size_t count = 0;
  std::size_t L = 0;
  const dataset::DoaGrid& grid;
  const acoustics::ArrayGeometry& array;
  const std::vector<double>& true_doas;
};

/// A named block estimator; returns L DOAs in degrees.
struct MethodEntry {
  std::string name;
  std::function<std::vector<double>(const TrialInput&)> estimate;
};

MethodEntry proposed_method(const nn::Network<float>& model, std::string name = "proposed");
MethodEntry baseline_method(baselines::Method method, baselines::BaselineOptions options = {});

struct ExperimentResult {
  std::vector<TrialResult> trials;
  std::vector<MetricsRow> rows;
};

/// Runs every method on every (room, position, distance, DOA combination,
/// mixture, noise type, SNR) trial. Trial order, and hence the output, is
/// fixed by the config and seed regardless of `threads`. Throws listing
/// every RIR missing from `bank`.
ExperimentResult run_experiment(const ExperimentConfig& config, const acoustics::RirBank& bank,
                                const std::vector<MethodEntry>& methods, std::uint64_t seed,
                                std::size_t threads = 1);

// ---- Conv-depth ablation -------------------------------------------------

struct AblationConfig {
  std::vector<std::size_t> array_sizes{4, 6, 8};
  std::size_t parent_mics = 8;
  double parent_spacing = 0.02;
  /// Rooms, positions, distances, STFT and noise settings shared by every
  /// array; the array itself is replaced by each middle sub-array.
  dataset::TrainingPlan training;
  std::size_t filters = 64;
  std::vector<std::size_t> dense_widths{512, 512};
  double dropout_rate = 0.5;
  nn::TrainOptions train;
  ExperimentConfig test;
  /// Optional source of already trained models; returning nullptr trains.
  std::function<const nn::Network<float>*(std::size_t mics, std::size_t conv_layers)> reuse;
  std::function<void(const std::string&)> log;
};

struct AblationRow {
  std::size_t mics = 0;
  std::size_t conv_layers = 0;
  double mae_deg = 0.0;
  double acc_pct = 0.0;
  std::size_t parameters = 0;
  std::size_t trials = 0;
};

/// Trains one model per (M, C), C = 2 .. M-1, on the middle-M sub-array of
/// the parent ULA and evaluates it on the test design.
std::vector<AblationRow> ablate_conv_depth(const AblationConfig& config, std::uint64_t seed, std::size_t threads = 1);

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace doa::eval
