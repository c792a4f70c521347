#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "doa/acoustics/scene.hpp"
#include "doa/dataset/features.hpp"
#include "doa/dataset/grid.hpp"

namespace doa::dataset {

/// Phase-map records held in memory: features are record-major, then
/// mic-major M x K float32; labels are class bitmasks.
struct Dataset {
  std::size_t mics = 0;
  std::size_t bins = 0;
  std::size_t classes = 0;
  std::uint64_t seed = 0;
  std::vector<float> features;
  std::vector<std::uint64_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t feature_size() const noexcept { return mics * bins; }
  std::span<const float> feature(std::size_t i) const noexcept {
    return {features.data() + i * feature_size(), feature_size()};
  }
};

// ---- File format --------------------------------------------------------
// Little-endian:
//   "DSET" | u32 version | u32 M | u32 K | u32 I | u64 record_count | u64 seed
//   then per record: f32[M*K] (mic-major) | u64 label bitmask

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

struct DatasetHeader {
  std::uint32_t version = kDatasetFormatVersion;
  std::uint32_t mics = 0;
  std::uint32_t bins = 0;
  std::uint32_t classes = 0;
  std::uint64_t record_count = 0;
  std::uint64_t seed = 0;
};

void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);
DatasetHeader read_dataset_header(const std::filesystem::path& path);

// ---- Training-set synthesis ---------------------------------------------

struct TrainingPlan {
  /// Rooms, array positions, array and distances. `scene.doas_deg` is
  /// ignored; the grid classes are used instead.
  acoustics::ScenePlan scene;
  double grid_resolution_deg = 15.0;
  signal::StftParams stft;
  double min_separation_deg = 30.0;
  double snr_min_db = 0.0;
  double snr_max_db = 30.0;
  /// Samples per single-source noise signal.
  std::size_t signal_len = 32768;
  /// Also emit one-label records from each single-source signal.
  bool include_single_source = false;
};

/// Unordered class-index pairs (i < j) whose DOAs differ by >= min_sep.
std::vector<std::pair<std::size_t, std::size_t>> doa_pairs(const DoaGrid& grid, double min_separation_deg);

/// Number of records build_training_set() will emit for this plan.
std::size_t expected_record_count(const TrainingPlan& plan);

/// Builds the complete multi-condition set: for every room, array position,
/// distance and DOA pair, two noise signals are interleaved and each output
/// frame becomes a record labelled with both DOAs. Records are shuffled
/// globally with a seeded permutation. Throws listing missing RIRs.
Dataset build_training_set(const TrainingPlan& plan, const acoustics::RirBank& bank, std::uint64_t seed,
                           std::size_t threads = 1);

/// ScenePlan covering every grid DOA of a training plan.
acoustics::ScenePlan scene_for(const TrainingPlan& plan);

}  // namespace doa::dataset
