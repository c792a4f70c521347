#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "doa/acoustics/scene.hpp"
#include "doa/baselines/baselines.hpp"
#include "doa/eval/experiment.hpp"
#include "doa/nnet/network.hpp"
#include "doa/posterior.hpp"

namespace doa::eval {

/// Sources active on [start_s, end_s).
struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<double> doas;
};

/// 1 s of 60 deg, 2 s of 60 + 105 deg, 2 s of all three with 135 deg, and
/// a final 1 s of 135 deg alone.
std::vector<Segment> default_schedule();

struct DynamicConfig {
  acoustics::RoomSetup room;
  std::size_t position = 0;
  acoustics::ArraySpec array;
  double distance = 2.0;
  std::vector<Segment> schedule = default_schedule();
  double grid_resolution_deg = 15.0;
  signal::StftParams stft;
  double sample_rate = 16000.0;
  NoiseSpec noise{NoiseType::White, 30.0, std::nullopt};
  SourceOptions source;
  baselines::BaselineOptions baseline;
};

/// RIR tuples used by the scenario.
acoustics::ScenePlan scene_for(const DynamicConfig& config);

struct SegmentProfile {
  std::size_t frames = 0;
  std::vector<double> true_doas;
  std::vector<double> proposed;  ///< frame average, scaled to a maximum of 1
  std::vector<double> music;     ///< same for the MUSIC pseudo-spectrum
  std::vector<double> proposed_top;  ///< top-|doas| classes of the proposed profile, ascending
  std::size_t proposed_hits = 0;     ///< true DOAs found among proposed_top
};

struct DynamicResult {
  std::vector<double> classes_deg;
  std::vector<PosteriorVector> proposed;  ///< per frame
  std::vector<std::vector<double>> music; ///< per frame, scaled to a maximum of 1 each
  std::vector<std::ptrdiff_t> frame_segment;  ///< segment of each frame, -1 when none
  std::vector<SegmentProfile> segments;
};

/// Throws for unordered or overlapping segments, empty segments and
/// off-grid DOAs.
void validate_schedule(const std::vector<Segment>& schedule, const dataset::DoaGrid& grid);

/// Renders the scheduled mixture, runs the model and MUSIC on every frame
/// and forms the per-segment normalised profiles. MUSIC uses the number of
/// sources active in each frame's segment (1 outside any segment).
DynamicResult dynamic_scenario(const DynamicConfig& config, const nn::Network<float>& model,
                               const acoustics::RirBank& bank, std::uint64_t seed);

/// Long-format CSV: frame,class_deg,probability,method.
void write_trace_csv(const std::filesystem::path& path, const DynamicResult& result);

/// Two stacked heatmaps (proposed above, MUSIC below), frames on x.
void write_trace_svg(const std::filesystem::path& path, const DynamicResult& result);

}  // namespace doa::eval
