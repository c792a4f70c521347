#include "doa/eval/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "doa/estimator/estimator.hpp"
#include "doa/parallel.hpp"
#include "doa/rng.hpp"

namespace doa::eval {

std::vector<double> make_source(const SourceOptions& options, std::size_t index, std::size_t l, std::size_t length,
                                double fs, std::uint64_t seed) {
  const std::uint64_t s = derive_seed(seed, {0x535243ULL, index, l});
  if (options.kind == SourceKind::Speech) {
    if (options.speech_wavs.empty()) throw std::invalid_argument("speech sources requested but no WAV files given");
    const auto& path = options.speech_wavs[(index * 7 + l) % options.speech_wavs.size()];
    return speech_excerpt(path, length, fs, s);
  }
  return noise_burst_source(length, fs, s, options.bursts);
}

std::size_t ExperimentConfig::trials_per_condition() const {
  const dataset::DoaGrid grid(grid_resolution_deg);
  std::size_t positions = 0;
  for (const auto& r : rooms) positions += r.array_centers.size();
  return positions * distances.size() * doa_combinations(grid, sources, min_separation_deg).size() * mixtures;
}

std::vector<std::vector<double>> doa_combinations(const dataset::DoaGrid& grid, std::size_t L,
                                                  double min_separation_deg) {
  if (L == 0 || L > grid.size()) throw std::invalid_argument("source count outside [1, I]");
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> pick;
  // Depth-first enumeration in lexicographic order of class indices.
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    if (pick.size() == L) {
      std::vector<double> c;
      for (std::size_t i : pick) c.push_back(grid[i]);
      out.push_back(std::move(c));
      return;
    }
    for (std::size_t i = from; i < grid.size(); ++i) {
      if (!pick.empty() && grid[i] - grid[pick.back()] < min_separation_deg - 1e-9) continue;
      pick.push_back(i);
      rec(i + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return out;
}

acoustics::ScenePlan scene_for(const ExperimentConfig& config) {
  acoustics::ScenePlan plan;
  plan.rooms = config.rooms;
  plan.array = config.array;
  plan.distances = config.distances;
  plan.doas_deg = dataset::DoaGrid(config.grid_resolution_deg).classes();
  plan.sample_rate = config.sample_rate;
  return plan;
}

MethodEntry proposed_method(const nn::Network<float>& model, std::string name) {
  return {std::move(name), [&model](const TrialInput& in) {
            return estimator::estimate_block(model, in.spec, in.begin, in.count, in.L, in.grid).doas;
          }};
}

MethodEntry baseline_method(baselines::Method method, baselines::BaselineOptions options) {
  return {baselines::method_name(method), [method, options](const TrialInput& in) {
            return baselines::baseline_block(method, in.spec, in.begin, in.count, in.L, in.grid, in.array, options)
                .doas;
          }};
}

ExperimentResult run_experiment(const ExperimentConfig& config, const acoustics::RirBank& bank,
                                const std::vector<MethodEntry>& methods, std::uint64_t seed, std::size_t threads) {
  if (methods.empty()) throw std::invalid_argument("run_experiment: no methods");
  if (config.rooms.empty()) throw std::invalid_argument("run_experiment: no test rooms");
  if (config.snrs_db.empty() || config.noise_types.empty())
    throw std::invalid_argument("run_experiment: no noise conditions");
  if (config.mixtures == 0) throw std::invalid_argument("run_experiment: mixtures must be positive");
  const dataset::DoaGrid grid(config.grid_resolution_deg);
  const auto combos = doa_combinations(grid, config.sources, config.min_separation_deg);
  if (combos.empty()) throw std::invalid_argument("run_experiment: no DOA combination satisfies the separation");
  const std::size_t frames = signal::frame_count(config.mixture_len, config.stft.frame_len, config.stft.hop);
  if (frames < config.block_frames)
    throw std::invalid_argument("run_experiment: mixture_len yields " + std::to_string(frames) + " frames, block needs " +
                                std::to_string(config.block_frames));
  const std::size_t begin = (frames - config.block_frames) / 2;

  struct Task {
    std::size_t room, position, distance, combo, mixture;
  };
  std::vector<Task> tasks;
  std::vector<std::string> missing;
  for (std::size_t r = 0; r < config.rooms.size(); ++r)
    for (std::size_t p = 0; p < config.rooms[r].array_centers.size(); ++p)
      for (std::size_t d = 0; d < config.distances.size(); ++d) {
        for (double doa : grid.classes()) {
          const acoustics::RirKey key{config.rooms[r].name, p, config.distances[d], doa};
          if (!bank.find(key)) missing.push_back(key.id());
        }
        for (std::size_t c = 0; c < combos.size(); ++c)
          for (std::size_t s = 0; s < config.mixtures; ++s) tasks.push_back({r, p, d, c, s});
      }
  if (!missing.empty()) {
    std::string msg = "missing RIRs (" + std::to_string(missing.size()) + "):";
    for (const auto& m : missing) msg += " " + m;
    throw std::runtime_error(msg);
  }

  const std::size_t per_task = config.noise_types.size() * config.snrs_db.size() * methods.size();
  std::vector<TrialResult> trials(tasks.size() * per_task);
  parallel_for(tasks.size(), threads, [&](std::size_t t) {
    const Task& task = tasks[t];
    const auto& setup = config.rooms[task.room];
    const auto& truth = combos[task.combo];
    const double dist = config.distances[task.distance];
    std::vector<const acoustics::Rir*> rirs;
    std::vector<std::vector<double>> sources;
    for (std::size_t l = 0; l < truth.size(); ++l) {
      rirs.push_back(&bank.at({setup.name, task.position, dist, truth[l]}).rir);
      sources.push_back(make_source(config.source, task.mixture, l, config.mixture_len, config.sample_rate, seed));
    }
    const auto clean = reverberant_mixture(rirs, sources, config.mixture_len);
    const auto array = config.array.at(setup.array_centers[task.position]);
    std::size_t slot = t * per_task;
    for (std::size_t nt = 0; nt < config.noise_types.size(); ++nt)
      for (std::size_t si = 0; si < config.snrs_db.size(); ++si) {
        const NoiseSpec noise{config.noise_types[nt], config.snrs_db[si], config.white_floor_snr_db};
        const auto noisy = add_noise(
            clean, noise, array,
            derive_seed(seed, {0x4e4f495345ULL, task.room, task.position, task.distance, task.combo, task.mixture, nt, si}));
        const auto spec = signal::stft(noisy, config.stft);
        const TrialInput input{spec, begin, config.block_frames, config.sources, grid, array, truth};
        for (const auto& m : methods) {
          TrialResult& tr = trials[slot++];
          tr.method = m.name;
          tr.room = setup.name;
          tr.rt60_s = setup.room.rt60;
          tr.snr_db = noise.snr_db;
          tr.noise_type = noise_name(noise.type);
          tr.distance_m = dist;
          tr.true_doas = truth;
          tr.estimated_doas = m.estimate(input);
          std::sort(tr.estimated_doas.begin(), tr.estimated_doas.end());
        }
      }
  });
  ExperimentResult result;
  result.rows = aggregate(trials, config.accuracy_threshold_deg);
  result.trials = std::move(trials);
  return result;
}

std::vector<AblationRow> ablate_conv_depth(const AblationConfig& config, std::uint64_t seed, std::size_t threads) {
  auto log = [&](const std::string& s) {
    if (config.log) config.log(s);
  };
  const auto parent = acoustics::ula({0, 0, 0}, config.parent_mics, config.parent_spacing);
  std::vector<AblationRow> rows;
  for (std::size_t M : config.array_sizes) {
    if (M < 3) throw std::invalid_argument("ablation needs at least 3 microphones for two conv layers");
    parent.middle(M);  // validates M against the parent array
    const acoustics::ArraySpec sub{M, config.parent_spacing};

    dataset::TrainingPlan plan = config.training;
    plan.scene.array = sub;
    ExperimentConfig test = config.test;
    test.array = sub;
    test.grid_resolution_deg = plan.grid_resolution_deg;

    std::optional<dataset::Dataset> data;
    std::optional<acoustics::RirBank> test_bank;
    for (std::size_t C = 2; C <= M - 1; ++C) {
      nn::ModelSpec spec = nn::ModelSpec::uniform(M, plan.stft.frame_len / 2 + 1, C, config.filters,
                                                  config.dense_widths,
                                                  dataset::DoaGrid(plan.grid_resolution_deg).size(),
                                                  config.dropout_rate);
      spec.validate();
      std::optional<nn::Network<float>> trained;
      const nn::Network<float>* model = config.reuse ? config.reuse(M, C) : nullptr;
      if (!model) {
        if (!data) {
          log("M=" + std::to_string(M) + ": simulating training RIRs");
          const auto bank = acoustics::simulate_bank(dataset::scene_for(plan), threads);
          log("M=" + std::to_string(M) + ": building training set");
          data = dataset::build_training_set(plan, bank, derive_seed(seed, {0x44415441ULL, M}), threads);
        }
        log("M=" + std::to_string(M) + " C=" + std::to_string(C) + ": training");
        trained.emplace(spec);
        trained->initialize(derive_seed(seed, {0x494e4954ULL, M, C}));
        nn::TrainOptions opt = config.train;
        opt.seed = derive_seed(seed, {0x545241494eULL, M, C});
        nn::train(*trained, *data, opt);
        model = &*trained;
      }
      if (model->spec().mics != M || model->spec().conv_layers() != C)
        throw std::invalid_argument("reused model does not match (M, C)");
      if (!test_bank) test_bank = acoustics::simulate_bank(scene_for(test), threads);
      const auto result =
          run_experiment(test, *test_bank, {proposed_method(*model)}, derive_seed(seed, {0x54455354ULL, M}), threads);
      AblationRow row;
      row.mics = M;
      row.conv_layers = C;
      row.parameters = model->parameter_count();
      row.trials = result.trials.size();
      for (const auto& t : result.trials) row.mae_deg += mae(t.true_doas, t.estimated_doas);
      row.mae_deg /= static_cast<double>(result.trials.size());
      row.acc_pct = accuracy(result.trials, test.accuracy_threshold_deg);
      char msg[160];
      std::snprintf(msg, sizeof msg, "M=%zu C=%zu: mae %.2f deg, acc %.1f%%, %zu parameters", M, C, row.mae_deg,
                    row.acc_pct, row.parameters);
      log(msg);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "mics,conv_layers,mae_deg,acc_pct,parameters,trials\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%zu,%zu,%.4f,%.2f,%zu,%zu\n", r.mics, r.conv_layers, r.mae_deg, r.acc_pct,
                  r.parameters, r.trials);
    out += line;
  }
  return out;
}

}  // namespace doa::eval
