#include "doa/eval/dynamic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "doa/estimator/estimator.hpp"
#include "doa/rng.hpp"

namespace doa::eval {
namespace {

void scale_to_max(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m > 0.0)
    for (double& x : v) x /= m;
}

std::vector<double> distinct_doas(const std::vector<Segment>& schedule) {
  std::set<double> s;
  for (const auto& seg : schedule) s.insert(seg.doas.begin(), seg.doas.end());
  return {s.begin(), s.end()};
}

}  // namespace

std::vector<Segment> default_schedule() {
  return {{0.0, 1.0, {60.0}}, {1.0, 3.0, {60.0, 105.0}}, {3.0, 5.0, {60.0, 105.0, 135.0}}, {5.0, 6.0, {135.0}}};
}

void validate_schedule(const std::vector<Segment>& schedule, const dataset::DoaGrid& grid) {
  if (schedule.empty()) throw std::invalid_argument("empty schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& s = schedule[i];
    if (!(s.end_s > s.start_s) || s.start_s < 0.0)
      throw std::invalid_argument("segment " + std::to_string(i + 1) + " has no duration");
    if (i > 0 && s.start_s < schedule[i - 1].end_s - 1e-12)
      throw std::invalid_argument("segments " + std::to_string(i) + " and " + std::to_string(i + 1) + " overlap");
    if (s.doas.empty()) throw std::invalid_argument("segment " + std::to_string(i + 1) + " has no active source");
    for (double d : s.doas)
      if (!grid.contains(d)) throw std::invalid_argument("segment DOA " + std::to_string(d) + " is off the grid");
    dataset::make_labels(s.doas, grid);  // rejects duplicates
  }
}

acoustics::ScenePlan scene_for(const DynamicConfig& config) {
  acoustics::ScenePlan plan;
  plan.rooms = {config.room};
  plan.array = config.array;
  plan.distances = {config.distance};
  plan.doas_deg = distinct_doas(config.schedule);
  plan.sample_rate = config.sample_rate;
  return plan;
}

DynamicResult dynamic_scenario(const DynamicConfig& config, const nn::Network<float>& model,
                               const acoustics::RirBank& bank, std::uint64_t seed) {
  const dataset::DoaGrid grid(config.grid_resolution_deg);
  validate_schedule(config.schedule, grid);
  const double fs = config.sample_rate;
  const auto length = static_cast<std::size_t>(std::ceil(config.schedule.back().end_s * fs));
  const auto doas = distinct_doas(config.schedule);

  std::vector<const acoustics::Rir*> rirs;
  std::vector<std::vector<double>> sources;
  for (std::size_t l = 0; l < doas.size(); ++l) {
    rirs.push_back(&bank.at({config.room.name, config.position, config.distance, doas[l]}).rir);
    auto src = make_source(config.source, 0, l, length, fs, seed);
    // Silence the source outside the segments that list it.
    std::vector<bool> active(length, false);
    for (const auto& seg : config.schedule)
      if (std::find(seg.doas.begin(), seg.doas.end(), doas[l]) != seg.doas.end()) {
        const auto a = static_cast<std::size_t>(std::llround(seg.start_s * fs));
        const auto b = std::min(length, static_cast<std::size_t>(std::llround(seg.end_s * fs)));
        std::fill(active.begin() + static_cast<std::ptrdiff_t>(a), active.begin() + static_cast<std::ptrdiff_t>(b), true);
      }
    for (std::size_t i = 0; i < length; ++i)
      if (!active[i]) src[i] = 0.0;
    sources.push_back(std::move(src));
  }
  const auto clean = reverberant_mixture(rirs, sources, length);
  const auto array = config.array.at(config.room.array_centers.at(config.position));
  const auto noisy = add_noise(clean, config.noise, array, derive_seed(seed, {0x44594eULL}));
  const auto spec = signal::stft(noisy, config.stft);
  const std::size_t frames = spec.num_frames();

  DynamicResult out;
  out.classes_deg = grid.classes();
  out.proposed = estimator::frame_posteriors(model, spec, 0, frames);
  out.frame_segment.assign(frames, -1);
  for (std::size_t n = 0; n < frames; ++n) {
    const double centre = (static_cast<double>(n * config.stft.hop) + 0.5 * static_cast<double>(config.stft.frame_len)) / fs;
    for (std::size_t s = 0; s < config.schedule.size(); ++s)
      if (centre >= config.schedule[s].start_s && centre < config.schedule[s].end_s)
        out.frame_segment[n] = static_cast<std::ptrdiff_t>(s);
  }
  out.music.reserve(frames);
  for (std::size_t n = 0; n < frames; ++n) {
    const std::ptrdiff_t s = out.frame_segment[n];
    const std::size_t L = s < 0 ? 1 : config.schedule[static_cast<std::size_t>(s)].doas.size();
    auto p = baselines::music_frame(spec, n, grid, array, std::min(L, array.size() - 1), config.baseline);
    scale_to_max(p);
    out.music.push_back(std::move(p));
  }

  for (std::size_t s = 0; s < config.schedule.size(); ++s) {
    std::vector<PosteriorVector> prop, mus;
    for (std::size_t n = 0; n < frames; ++n)
      if (out.frame_segment[n] == static_cast<std::ptrdiff_t>(s)) {
        prop.push_back(out.proposed[n]);
        mus.push_back(out.music[n]);
      }
    SegmentProfile profile;
    profile.frames = prop.size();
    profile.true_doas = config.schedule[s].doas;
    std::sort(profile.true_doas.begin(), profile.true_doas.end());
    if (!prop.empty()) {
      profile.proposed = estimator::block_average(prop);
      profile.music = estimator::block_average(mus);
      scale_to_max(profile.proposed);
      scale_to_max(profile.music);
      profile.proposed_top = estimator::select_top_l(profile.proposed, profile.true_doas.size(), grid).doas;
      for (double d : profile.true_doas)
        if (std::find(profile.proposed_top.begin(), profile.proposed_top.end(), d) != profile.proposed_top.end())
          ++profile.proposed_hits;
    }
    out.segments.push_back(std::move(profile));
  }
  return out;
}

void write_trace_csv(const std::filesystem::path& path, const DynamicResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "frame,class_deg,probability,method\n";
  char line[128];
  auto emit = [&](const std::vector<std::vector<double>>& frames, const char* method) {
    for (std::size_t n = 0; n < frames.size(); ++n)
      for (std::size_t i = 0; i < frames[n].size(); ++i) {
        std::snprintf(line, sizeof line, "%zu,%g,%.6f,%s\n", n, result.classes_deg[i], frames[n][i], method);
        out << line;
      }
  };
  emit(result.proposed, "proposed");
  emit(result.music, "music");
}

void write_trace_svg(const std::filesystem::path& path, const DynamicResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::size_t frames = result.proposed.size();
  const std::size_t classes = result.classes_deg.size();
  const double cw = 2.0, ch = 8.0, gap = 20.0;
  const double panel = ch * static_cast<double>(classes);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n",
                cw * static_cast<double>(frames) + 60, 2 * panel + gap + 20);
  out << buf;
  auto panel_at = [&](const std::vector<std::vector<double>>& data, double y0, const char* label) {
    std::snprintf(buf, sizeof buf, "<text x=\"2\" y=\"%.0f\" font-size=\"10\">%s</text>\n", y0 + 10, label);
    out << buf;
    for (std::size_t n = 0; n < data.size(); ++n)
      for (std::size_t i = 0; i < classes; ++i) {
        const int level = static_cast<int>(std::lround(255.0 * (1.0 - std::clamp(data[n][i], 0.0, 1.0))));
        // Class 0 deg at the bottom of each panel.
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"rgb(%d,%d,%d)\"/>\n",
                      60 + cw * static_cast<double>(n), y0 + ch * static_cast<double>(classes - 1 - i), cw, ch, level,
                      level, level);
        out << buf;
      }
  };
  panel_at(result.proposed, 0, "proposed");
  panel_at(result.music, panel + gap, "music");
  out << "</svg>\n";
}

}  // namespace doa::eval
