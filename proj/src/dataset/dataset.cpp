#include "doa/dataset/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "doa/parallel.hpp"
#include "doa/rng.hpp"

namespace doa::dataset {
namespace {

template <class T>
void put(std::string& out, T v) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <class T>
T get(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

constexpr std::size_t kHeaderBytes = 4 + 4 * 4 + 8 * 2;

DatasetHeader parse_header(const unsigned char* p, const std::filesystem::path& path) {
  if (std::memcmp(p, "DSET", 4) != 0) throw std::runtime_error("dataset '" + path.string() + "': bad magic");
  DatasetHeader h;
  h.version = get<std::uint32_t>(p + 4);
  if (h.version != kDatasetFormatVersion)
    throw std::runtime_error("dataset '" + path.string() + "': unsupported version " + std::to_string(h.version));
  h.mics = get<std::uint32_t>(p + 8);
  h.bins = get<std::uint32_t>(p + 12);
  h.classes = get<std::uint32_t>(p + 16);
  h.record_count = get<std::uint64_t>(p + 20);
  h.seed = get<std::uint64_t>(p + 28);
  return h;
}

// Index of the (room, position, distance) setup plus DOA pair.
struct PairTask {
  std::size_t room, position, distance, setup;
  std::size_t first, second;  // class indices; second == first for single-source records
};

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  if (data.features.size() != data.size() * data.feature_size())
    throw std::invalid_argument("dataset features and labels disagree in count");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("dataset '" + path.string() + "': cannot open for writing");
  std::string head;
  head += "DSET";
  put(head, kDatasetFormatVersion);
  put(head, static_cast<std::uint32_t>(data.mics));
  put(head, static_cast<std::uint32_t>(data.bins));
  put(head, static_cast<std::uint32_t>(data.classes));
  put(head, static_cast<std::uint64_t>(data.size()));
  put(head, data.seed);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  std::string rec;
  for (std::size_t i = 0; i < data.size(); ++i) {
    rec.clear();
    for (float v : data.feature(i)) put(rec, std::bit_cast<std::uint32_t>(v));
    put(rec, data.labels[i]);
    out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  }
  if (!out) throw std::runtime_error("dataset '" + path.string() + "': write failed");
}

DatasetHeader read_dataset_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("dataset '" + path.string() + "': cannot open");
  unsigned char buf[kHeaderBytes];
  if (!in.read(reinterpret_cast<char*>(buf), kHeaderBytes))
    throw std::runtime_error("dataset '" + path.string() + "': truncated header");
  return parse_header(buf, path);
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("dataset '" + path.string() + "': cannot open");
  unsigned char head[kHeaderBytes];
  if (!in.read(reinterpret_cast<char*>(head), kHeaderBytes))
    throw std::runtime_error("dataset '" + path.string() + "': truncated header");
  const auto h = parse_header(head, path);
  Dataset d;
  d.mics = h.mics;
  d.bins = h.bins;
  d.classes = h.classes;
  d.seed = h.seed;
  const std::size_t fsize = d.feature_size();
  const std::size_t rec_bytes = fsize * 4 + 8;
  d.features.resize(h.record_count * fsize);
  d.labels.resize(h.record_count);
  std::vector<unsigned char> rec(rec_bytes);
  for (std::size_t i = 0; i < h.record_count; ++i) {
    if (!in.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(rec_bytes)))
      throw std::runtime_error("dataset '" + path.string() + "': truncated at record " + std::to_string(i));
    float* f = d.features.data() + i * fsize;
    for (std::size_t j = 0; j < fsize; ++j) f[j] = std::bit_cast<float>(get<std::uint32_t>(rec.data() + 4 * j));
    d.labels[i] = get<std::uint64_t>(rec.data() + 4 * fsize);
  }
  return d;
}

std::vector<std::pair<std::size_t, std::size_t>> doa_pairs(const DoaGrid& grid, double min_separation_deg) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = i + 1; j < grid.size(); ++j)
      if (grid[j] - grid[i] >= min_separation_deg - 1e-9) out.emplace_back(i, j);
  return out;
}

acoustics::ScenePlan scene_for(const TrainingPlan& plan) {
  acoustics::ScenePlan scene = plan.scene;
  scene.doas_deg = DoaGrid(plan.grid_resolution_deg).classes();
  return scene;
}

std::size_t expected_record_count(const TrainingPlan& plan) {
  const DoaGrid grid(plan.grid_resolution_deg);
  const std::size_t frames = signal::frame_count(plan.signal_len, plan.stft.frame_len, plan.stft.hop);
  std::size_t setups = 0;
  for (const auto& r : plan.scene.rooms) setups += r.array_centers.size();
  setups *= plan.scene.distances.size();
  std::size_t per_setup = doa_pairs(grid, plan.min_separation_deg).size() * 2 * frames;
  if (plan.include_single_source) per_setup += grid.size() * frames;
  return setups * per_setup;
}

Dataset build_training_set(const TrainingPlan& plan, const acoustics::RirBank& bank, std::uint64_t seed,
                           std::size_t threads) {
  const DoaGrid grid(plan.grid_resolution_deg);
  if (!(plan.snr_max_db >= plan.snr_min_db)) throw std::invalid_argument("SNR range is empty");
  const std::size_t frames = signal::frame_count(plan.signal_len, plan.stft.frame_len, plan.stft.hop);
  if (frames == 0) throw std::invalid_argument("signal length shorter than one STFT frame");

  // Verify every needed RIR before any work starts.
  std::string missing;
  for (const auto& r : plan.scene.rooms)
    for (std::size_t p = 0; p < r.array_centers.size(); ++p)
      for (double d : plan.scene.distances)
        for (double doa : grid.classes()) {
          const acoustics::RirKey key{r.name, p, d, doa};
          if (bank.find(key) == nullptr) missing += "\n  " + key.id();
        }
  if (!missing.empty()) throw std::runtime_error("missing RIRs:" + missing);

  const auto pairs = doa_pairs(grid, plan.min_separation_deg);
  std::vector<PairTask> tasks;
  std::size_t setup = 0;
  for (std::size_t r = 0; r < plan.scene.rooms.size(); ++r)
    for (std::size_t p = 0; p < plan.scene.rooms[r].array_centers.size(); ++p)
      for (std::size_t d = 0; d < plan.scene.distances.size(); ++d, ++setup) {
        for (const auto& [i, j] : pairs) tasks.push_back({r, p, d, setup, i, j});
        if (plan.include_single_source)
          for (std::size_t i = 0; i < grid.size(); ++i) tasks.push_back({r, p, d, setup, i, i});
      }

  std::vector<std::size_t> offsets(tasks.size() + 1, 0);
  for (std::size_t t = 0; t < tasks.size(); ++t)
    offsets[t + 1] = offsets[t] + (tasks[t].first == tasks[t].second ? frames : 2 * frames);

  Dataset out;
  const auto& probe = bank.at({plan.scene.rooms.front().name, 0, plan.scene.distances.front(), grid[0]});
  out.mics = probe.rir.num_mics();
  out.bins = plan.stft.frame_len / 2 + 1;
  out.classes = grid.size();
  out.seed = seed;
  const std::size_t fsize = out.feature_size();
  std::vector<float> features(offsets.back() * fsize);
  std::vector<std::uint64_t> labels(offsets.back());

  parallel_for(tasks.size(), threads, [&](std::size_t t) {
    const auto& task = tasks[t];
    const auto& room = plan.scene.rooms[task.room];
    const double dist = plan.scene.distances[task.distance];
    const std::uint64_t task_seed = derive_seed(seed, {task.setup, task.first, task.second});
    auto synth = [&](std::size_t cls, std::uint64_t role) {
      const auto& rir = bank.at({room.name, task.position, dist, grid[cls]}).rir;
      CounterRng snr_rng(derive_seed(task_seed, {role, 7}));
      const double snr = snr_rng.uniform(plan.snr_min_db, plan.snr_max_db);
      return synth_single_source_stft(rir, plan.signal_len, plan.stft, derive_seed(task_seed, {role}), snr);
    };
    signal::Spectrogram spec;
    LabelVector label;
    if (task.first == task.second) {
      spec = synth(task.first, 0);
      const double doas[] = {grid[task.first]};
      label = make_labels(doas, grid);
    } else {
      spec = interleave_two_sources(synth(task.first, 0), synth(task.second, 1), derive_seed(task_seed, {2}));
      const double doas[] = {grid[task.first], grid[task.second]};
      label = make_labels(doas, grid);
    }
    if (spec.num_channels() != out.mics) throw std::runtime_error("RIR microphone counts differ across the bank");
    for (std::size_t n = 0; n < spec.num_frames(); ++n) {
      const std::size_t rec = offsets[t] + n;
      extract_phase_map_into(spec, n, {features.data() + rec * fsize, fsize});
      labels[rec] = label.bits;
    }
  });

  // Global seeded shuffle.
  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  CounterRng rng(derive_seed(seed, {0x5348554646ULL}));
  rng.shuffle(order.begin(), order.end());
  out.features.resize(features.size());
  out.labels.resize(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::copy_n(features.data() + order[i] * fsize, fsize, out.features.data() + i * fsize);
    out.labels[i] = labels[order[i]];
  }
  return out;
}

}  // namespace doa::dataset
