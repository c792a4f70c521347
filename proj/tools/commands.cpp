#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

#include "doa/acoustics/scene.hpp"
#include "doa/dataset/dataset.hpp"
#include "doa/estimator/estimator.hpp"
#include "doa/eval/dynamic.hpp"
#include "doa/eval/experiment.hpp"
#include "doa/nnet/model_io.hpp"
#include "doa/nnet/trainer.hpp"
#include "doa/parallel.hpp"
#include "doa/rng.hpp"
#include "doa/signal/wav.hpp"
#include "manifest.hpp"

namespace doa::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kShared{
    "seed", "threads", "out", "sample_rate", "array.mics", "array.spacing",
    "room.*.dims", "room.*.rt60", "room.*.centers", "room.*.speed_of_sound",
};
const std::vector<std::string> kStft{"stft.frame_len", "stft.hop"};
const std::vector<std::string> kSynth{"grid_resolution", "min_separation", "snr_min", "snr_max", "signal_len",
                                      "single_source", "distances"};
const std::vector<std::string> kTrain{"model.conv_layers", "model.filters", "model.dense", "model.dropout",
                                      "train.epochs", "train.batch", "train.lr", "train.validation",
                                      "train.patience"};
const std::vector<std::string> kTest{"sources", "snrs", "noise_types", "white_floor", "mixtures", "mixture_len",
                                     "block_frames", "threshold", "min_separation", "distances", "grid_resolution",
                                     "source.kind", "source.wavs", "music.window"};

// Seed keys; the ablation derives its data, init and training seeds the
// same way, so `train` and `ablate` agree for the same (seed, M, C).
constexpr std::uint64_t kDataKey = 0x44415441ULL, kInitKey = 0x494e4954ULL, kTrainKey = 0x545241494eULL,
                        kTestKey = 0x54455354ULL, kMixKey = 0x4d4958ULL, kDynKey = 0x44594eULL;

struct Run {
  const Config& cfg;
  std::ostream& out;
  std::ostream& log;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  fs::path dir;
  std::vector<fs::path> artifacts;

  void note(const std::string& s) const { log << s << std::endl; }
};

// ---- config readers -----------------------------------------------------

void require_file(const Config& cfg, const std::string& key) {
  if (!cfg.has(key)) return;
  for (const auto& p : cfg.paths(key))
    if (!fs::exists(p)) throw ConfigError(key, "'" + key + "' refers to missing path " + p.string());
}

acoustics::RoomSetup room_from(const Config& cfg, const std::string& name) {
  const std::string base = "room." + name;
  if (!cfg.has(base + ".dims")) throw ConfigError(base + ".dims", "room '" + name + "' is not defined");
  const auto dims = cfg.numbers(base + ".dims");
  if (dims.size() != 3) throw ConfigError(base + ".dims", "'" + base + ".dims' expects three lengths");
  acoustics::RoomSetup setup;
  setup.name = name;
  setup.room.dimensions = {dims[0], dims[1], dims[2]};
  setup.room.rt60 = cfg.number(base + ".rt60", 0.0);
  setup.room.speed_of_sound = cfg.number(base + ".speed_of_sound", 343.0);
  try {
    setup.room.validate();
  } catch (const std::exception& e) {
    throw ConfigError(base + ".dims", "room '" + name + "': " + e.what());
  }
  for (const auto& g : cfg.groups(base + ".centers")) {
    if (g.size() != 3) throw ConfigError(base + ".centers", "'" + base + ".centers' expects x y z triples");
    setup.array_centers.push_back({g[0], g[1], g[2]});
  }
  if (setup.array_centers.empty()) throw ConfigError(base + ".centers", "room '" + name + "' has no array centre");
  return setup;
}

std::vector<acoustics::RoomSetup> rooms_from(const Config& cfg, const std::string& key) {
  const auto names = cfg.words(key, cfg.names("room"));
  if (names.empty()) throw ConfigError(key, "no rooms defined");
  std::vector<acoustics::RoomSetup> rooms;
  for (const auto& n : names) rooms.push_back(room_from(cfg, n));
  return rooms;
}

acoustics::ArraySpec array_from(const Config& cfg) {
  acoustics::ArraySpec a;
  a.num_mics = cfg.count("array.mics", 4);
  a.spacing = cfg.number("array.spacing", 0.08);
  if (a.num_mics < 2 || !(a.spacing > 0.0)) throw ConfigError("array.mics", "array needs >= 2 mics and spacing > 0");
  return a;
}

signal::StftParams stft_from(const Config& cfg) {
  signal::StftParams p;
  p.frame_len = cfg.count("stft.frame_len", 256);
  p.hop = cfg.count("stft.hop", 128);
  if (p.frame_len < 2 || p.hop == 0) throw ConfigError("stft.frame_len", "bad STFT parameters");
  return p;
}

double grid_from(const Config& cfg, double fallback) {
  const double r = cfg.number("grid_resolution", fallback);
  try {
    dataset::DoaGrid g(r);
  } catch (const std::exception& e) {
    throw ConfigError("grid_resolution", e.what());
  }
  return r;
}

dataset::TrainingPlan plan_from(const Config& cfg, const std::string& rooms_key) {
  dataset::TrainingPlan plan;
  plan.scene.rooms = rooms_from(cfg, rooms_key);
  plan.scene.array = array_from(cfg);
  plan.scene.distances = cfg.numbers("distances", {1.0});
  plan.scene.sample_rate = cfg.number("sample_rate", 16000.0);
  plan.grid_resolution_deg = grid_from(cfg, 15.0);
  plan.stft = stft_from(cfg);
  plan.min_separation_deg = cfg.number("min_separation", 30.0);
  plan.snr_min_db = cfg.number("snr_min", 0.0);
  plan.snr_max_db = cfg.number("snr_max", 30.0);
  if (plan.snr_min_db > plan.snr_max_db) throw ConfigError("snr_min", "snr_min exceeds snr_max");
  plan.signal_len = cfg.count("signal_len", 32768);
  plan.include_single_source = cfg.flag("single_source", false);
  return plan;
}

nn::TrainOptions train_options_from(const Config& cfg, const Run& run) {
  nn::TrainOptions o;
  o.epochs = cfg.count("train.epochs", 50);
  o.batch_size = cfg.count("train.batch", 512);
  o.learning_rate = cfg.number("train.lr", 1e-3);
  o.validation_fraction = cfg.number("train.validation", 0.1);
  o.patience = cfg.count("train.patience", 5);
  if (o.epochs == 0 || o.batch_size == 0) throw ConfigError("train.epochs", "epochs and batch must be positive");
  o.on_epoch = [&run](const nn::EpochStats& s) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "epoch %zu: train %.4f val %.4f (%.0f s)", s.epoch, s.train_loss, s.val_loss,
                  s.seconds);
    run.note(buf);
  };
  return o;
}

std::vector<std::size_t> counts_from(const Config& cfg, const std::string& key, std::vector<std::size_t> fallback) {
  if (!cfg.has(key)) return fallback;
  std::vector<std::size_t> out;
  for (double v : cfg.numbers(key)) {
    if (v < 1 || v != std::floor(v)) throw ConfigError(key, "'" + key + "' expects positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

eval::SourceOptions source_from(const Config& cfg) {
  eval::SourceOptions s;
  const std::string kind = cfg.str("source.kind", "bursts");
  if (kind == "speech") {
    s.kind = eval::SourceKind::Speech;
    if (!cfg.has("source.wavs")) throw ConfigError("source.wavs", "speech sources need 'source.wavs'");
    s.speech_wavs = cfg.paths("source.wavs");
  } else if (kind != "bursts") {
    throw ConfigError("source.kind", "source.kind must be 'bursts' or 'speech'");
  }
  return s;
}

eval::NoiseType noise_from(const std::string& key, const std::string& name) {
  try {
    return eval::parse_noise_type(name);
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

eval::ExperimentConfig test_from(const Config& cfg, const std::string& rooms_key, double grid_fallback) {
  eval::ExperimentConfig c;
  c.rooms = rooms_from(cfg, rooms_key);
  c.array = array_from(cfg);
  c.distances = cfg.numbers("distances", {1.0});
  c.grid_resolution_deg = grid_from(cfg, grid_fallback);
  c.min_separation_deg = cfg.number("min_separation", 30.0);
  c.sources = cfg.count("sources", 2);
  c.snrs_db = cfg.numbers("snrs", {30.0});
  c.noise_types.clear();
  for (const auto& n : cfg.words("noise_types", {"white"})) c.noise_types.push_back(noise_from("noise_types", n));
  if (cfg.has("white_floor")) c.white_floor_snr_db = cfg.number("white_floor");
  c.mixtures = cfg.count("mixtures", 1);
  c.mixture_len = cfg.count("mixture_len", 16000);
  c.block_frames = cfg.count("block_frames", 50);
  c.stft = stft_from(cfg);
  c.accuracy_threshold_deg = cfg.number("threshold", 5.0);
  c.sample_rate = cfg.number("sample_rate", 16000.0);
  c.source = source_from(cfg);
  c.baseline.music_window = cfg.count("music.window", 10);
  if (c.sources == 0 || c.mixtures == 0 || c.block_frames == 0)
    throw ConfigError("sources", "sources, mixtures and block_frames must be positive");
  return c;
}

/// The grid resolution implied by a model with I classes over [0, 180].
double model_resolution(const nn::Network<float>& model) {
  const std::size_t I = model.spec().classes;
  if (I < 2) throw std::runtime_error("model has fewer than two classes");
  return 180.0 / static_cast<double>(I - 1);
}

void check_model_fits(const nn::Network<float>& model, std::size_t mics, const signal::StftParams& stft) {
  const auto& s = model.spec();
  if (s.mics != mics) throw ConfigError("array.mics", "model expects " + std::to_string(s.mics) + " microphones");
  if (s.bins != stft.frame_len / 2 + 1)
    throw ConfigError("stft.frame_len", "model expects " + std::to_string(s.bins) + " frequency bins");
}

acoustics::RirBank bank_for(const Run& run, const acoustics::ScenePlan& scene) {
  if (run.cfg.has("rirs")) {
    run.note("loading RIRs from " + run.cfg.path("rirs").string());
    return acoustics::RirBank::load(run.cfg.path("rirs"));
  }
  const auto problems = acoustics::validate_scene(scene);
  if (!problems.empty()) {
    for (const auto& p : problems) run.log << "invalid tuple: " << p << "\n";
    throw ConfigError("room", std::to_string(problems.size()) + " tuples fall outside their room, first: " +
                                  problems.front());
  }
  run.note("simulating " + std::to_string(scene.tuple_count()) + " RIRs");
  return acoustics::simulate_bank(scene, run.threads);
}

std::string join(const std::vector<double>& v, const char* sep = " ") {
  std::string s;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%g", v[i]);
    if (i) s += sep;
    s += buf;
  }
  return s;
}

// ---- commands -----------------------------------------------------------

void cmd_simulate(Run& run) {
  const auto& cfg = run.cfg;
  acoustics::ScenePlan scene;
  scene.rooms = rooms_from(cfg, "rooms");
  scene.array = array_from(cfg);
  scene.distances = cfg.numbers("distances", {1.0});
  scene.sample_rate = cfg.number("sample_rate", 16000.0);
  scene.doas_deg = cfg.has("doas") ? cfg.numbers("doas") : dataset::DoaGrid(grid_from(cfg, 15.0)).classes();
  const auto problems = acoustics::validate_scene(scene);
  if (!problems.empty()) {
    for (const auto& p : problems) run.log << "invalid tuple: " << p << "\n";
    throw ConfigError("room", std::to_string(problems.size()) + " tuples fall outside their room, first: " +
                                  problems.front());
  }
  run.note("simulating " + std::to_string(scene.tuple_count()) + " RIRs");
  const auto bank = acoustics::simulate_bank(scene, run.threads);
  bank.save(run.dir / "rirs");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(run.dir / "rirs")) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  run.artifacts.insert(run.artifacts.end(), files.begin(), files.end());
  run.out << bank.size() << " RIRs written to " << (run.dir / "rirs").string() << "\n";
}

void cmd_synth(Run& run) {
  const auto plan = plan_from(run.cfg, "rooms");
  const auto bank = bank_for(run, dataset::scene_for(plan));
  run.note("building " + std::to_string(dataset::expected_record_count(plan)) + " records");
  const auto data = dataset::build_training_set(plan, bank, derive_seed(run.seed, {kDataKey, plan.scene.array.num_mics}),
                                                run.threads);
  const fs::path file = run.dir / run.cfg.str("output", "train.dset");
  dataset::write_dataset(file, data);
  run.artifacts.push_back(file);
  run.out << data.size() << " records (M=" << data.mics << ", K=" << data.bins << ", I=" << data.classes
          << ") written to " << file.string() << "\n";
}

void cmd_train(Run& run) {
  const auto& cfg = run.cfg;
  const auto header = dataset::read_dataset_header(cfg.path("dataset"));
  const std::size_t C = cfg.count("model.conv_layers", 3);
  const auto spec = nn::ModelSpec::uniform(header.mics, header.bins, C, cfg.count("model.filters", 64),
                                           counts_from(cfg, "model.dense", {512, 512}), header.classes,
                                           cfg.number("model.dropout", 0.5));
  try {
    spec.validate();
  } catch (const std::exception& e) {
    throw ConfigError("model.conv_layers", e.what());
  }
  auto options = train_options_from(cfg, run);
  options.seed = derive_seed(run.seed, {kTrainKey, header.mics, C});
  const auto data = dataset::read_dataset(cfg.path("dataset"));
  run.note("training on " + std::to_string(data.size()) + " records, " + std::to_string(spec.parameter_count()) +
           " parameters");
  nn::Network<float> net(spec);
  net.initialize(derive_seed(run.seed, {kInitKey, header.mics, C}));
  const auto result = nn::train(net, data, options);
  const fs::path model = run.dir / cfg.str("output", "model.dnet");
  const fs::path log = run.dir / "training_log.csv";
  nn::save_model(model, net);
  nn::write_training_log(log, result.history);
  run.artifacts.push_back(model);
  run.artifacts.push_back(log);
  run.out << "best epoch " << result.best_epoch << (result.stopped_early ? " (stopped early)" : "") << ", model "
          << model.string() << "\n";
}

signal::MultichannelSignal simulated_mixture(Run& run, const dataset::DoaGrid& grid) {
  const auto& cfg = run.cfg;
  const auto setup = room_from(cfg, cfg.str("mixture.room"));
  const auto array = array_from(cfg);
  const std::size_t position = cfg.count("mixture.position", 0);
  if (position >= setup.array_centers.size())
    throw ConfigError("mixture.position", "room '" + setup.name + "' has no position " + std::to_string(position));
  const double distance = cfg.number("mixture.distance", 1.0);
  const auto doas = cfg.numbers("mixture.doas");
  for (double d : doas)
    if (!grid.contains(d)) throw ConfigError("mixture.doas", "mixture DOA " + join({d}) + " is not on the model grid");
  const double fs = cfg.number("sample_rate", 16000.0);
  const std::size_t length = cfg.count("mixture.length", 16000);

  acoustics::ScenePlan scene;
  acoustics::RoomSetup single = setup;
  single.array_centers = {setup.array_centers[position]};
  scene.rooms = {single};
  scene.array = array;
  scene.distances = {distance};
  scene.doas_deg = doas;
  scene.sample_rate = fs;
  const auto bank = bank_for(run, scene);
  const std::size_t key_position = cfg.has("rirs") ? position : 0;

  std::vector<const acoustics::Rir*> rirs;
  std::vector<std::vector<double>> sources;
  const std::uint64_t mix_seed = derive_seed(run.seed, {kMixKey});
  for (std::size_t l = 0; l < doas.size(); ++l) {
    rirs.push_back(&bank.at({setup.name, key_position, distance, doas[l]}).rir);
    sources.push_back(eval::make_source({}, 0, l, length, fs, mix_seed));
  }
  const auto clean = eval::reverberant_mixture(rirs, sources, length);
  eval::NoiseSpec noise{noise_from("mixture.noise", cfg.str("mixture.noise", "white")), cfg.number("mixture.snr", 30.0),
                        std::nullopt};
  const auto geometry = array.at(setup.array_centers[position]);
  auto mixed = eval::add_noise(clean, noise, geometry, derive_seed(mix_seed, {1}));
  const fs::path wav = run.dir / "mixture.wav";
  signal::write_wav(wav, mixed);
  run.artifacts.push_back(wav);
  run.out << "simulated mixture in room " << setup.name << " at DOAs " << join(doas) << " deg\n";
  return mixed;
}

void cmd_infer(Run& run) {
  const auto& cfg = run.cfg;
  if (cfg.has("input") == cfg.has("mixture.doas"))
    throw ConfigError("input", "infer needs exactly one of 'input' (WAV) or 'mixture.doas'");
  const auto model = nn::load_model(cfg.path("model"));
  const dataset::DoaGrid grid(model_resolution(model));
  const auto stft_params = stft_from(cfg);
  const std::size_t L = cfg.count("sources", cfg.has("mixture.doas") ? cfg.numbers("mixture.doas").size() : 2);
  const std::size_t block = cfg.count("block_frames", 50);
  if (L == 0 || L > grid.size()) throw ConfigError("sources", "sources must lie in [1, " + std::to_string(grid.size()) + "]");
  if (block == 0) throw ConfigError("block_frames", "block_frames must be positive");

  check_model_fits(model, model.spec().mics, stft_params);
  if (cfg.has("mixture.doas")) check_model_fits(model, array_from(cfg).num_mics, stft_params);

  signal::MultichannelSignal audio;
  if (cfg.has("input")) {
    audio = signal::read_wav(cfg.path("input"));
    run.out << "input " << cfg.path("input").string() << ": " << audio.num_channels() << " channels, "
            << audio.length() << " samples\n";
  } else {
    audio = simulated_mixture(run, grid);
  }
  check_model_fits(model, audio.num_channels(), stft_params);
  const auto spec = signal::stft(audio, stft_params);

  const fs::path csv_path = run.dir / "estimates.csv";
  std::ofstream csv(csv_path);
  csv << "block,first_frame,frames,doas_deg";
  for (double c : grid.classes()) csv << ",p_" << c;
  csv << "\n";
  const std::size_t frames = spec.num_frames();
  const std::size_t blocks = std::max<std::size_t>(1, frames / block);
  char buf[64];
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t begin = b * block;
    const std::size_t count = std::min(block, frames - begin);
    const auto est = estimator::estimate_block(model, spec, begin, count, L, grid);
    run.out << "block " << b << " (frames " << begin << "-" << begin + count - 1 << "): DOAs " << join(est.doas)
            << " deg\n";
    run.out << "  class_deg probability\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const bool picked = std::find(est.classes.begin(), est.classes.end(), i) != est.classes.end();
      std::snprintf(buf, sizeof buf, "  %9g %.4f%s\n", grid[i], est.averaged_probs[i], picked ? " *" : "");
      run.out << buf;
    }
    csv << b << "," << begin << "," << count << "," << join(est.doas, ";");
    for (double p : est.averaged_probs) {
      std::snprintf(buf, sizeof buf, ",%.6f", p);
      csv << buf;
    }
    csv << "\n";
  }
  csv.close();
  run.artifacts.push_back(csv_path);
}

std::vector<eval::MethodEntry> methods_from(const Config& cfg, const nn::Network<float>* model,
                                            const baselines::BaselineOptions& baseline) {
  std::vector<std::string> names =
      cfg.words("methods", model ? std::vector<std::string>{"proposed", "srp_phat", "music"}
                                 : std::vector<std::string>{"srp_phat", "music"});
  std::vector<eval::MethodEntry> out;
  for (const auto& n : names) {
    if (n == "proposed") {
      if (!model) throw ConfigError("model", "method 'proposed' needs 'model'");
      out.push_back(eval::proposed_method(*model));
    } else if (n == "srp_phat") {
      out.push_back(eval::baseline_method(baselines::Method::SrpPhat, baseline));
    } else if (n == "music") {
      out.push_back(eval::baseline_method(baselines::Method::Music, baseline));
    } else {
      throw ConfigError("methods", "unknown method '" + n + "' (proposed, srp_phat, music)");
    }
  }
  if (out.empty()) throw ConfigError("methods", "no methods selected");
  return out;
}

void cmd_eval(Run& run) {
  const auto& cfg = run.cfg;
  std::optional<nn::Network<float>> model;
  if (cfg.has("model")) model.emplace(nn::load_model(cfg.path("model")));
  auto config = test_from(cfg, "rooms", model ? model_resolution(*model) : 15.0);
  if (model) {
    check_model_fits(*model, config.array.num_mics, config.stft);
    if (dataset::DoaGrid(config.grid_resolution_deg).size() != model->spec().classes)
      throw ConfigError("grid_resolution", "grid does not match the model's class count");
  }
  const auto methods = methods_from(cfg, model ? &*model : nullptr, config.baseline);
  const auto bank = bank_for(run, eval::scene_for(config));
  run.note(std::to_string(config.trials_per_condition()) + " trials per condition and method");
  const auto result = eval::run_experiment(config, bank, methods, derive_seed(run.seed, {kTestKey}), run.threads);
  const fs::path csv = run.dir / "metrics.csv";
  eval::write_metrics_csv(csv, result.rows);
  run.artifacts.push_back(csv);
  run.out << eval::metrics_csv(result.rows);
}

void cmd_ablate(Run& run) {
  const auto& cfg = run.cfg;
  eval::AblationConfig a;
  a.parent_mics = cfg.count("ablation.parent_mics", 8);
  a.parent_spacing = cfg.number("ablation.parent_spacing", 0.02);
  a.array_sizes = counts_from(cfg, "ablation.array_sizes", {4, 6, 8});
  a.training = plan_from(cfg, "train_rooms");
  a.training.scene.array = {a.parent_mics, a.parent_spacing};
  a.filters = cfg.count("model.filters", 64);
  a.dense_widths = counts_from(cfg, "model.dense", {512, 512});
  a.dropout_rate = cfg.number("model.dropout", 0.5);
  a.train = train_options_from(cfg, run);
  a.test = test_from(cfg, "test_rooms", a.training.grid_resolution_deg);
  a.test.array = a.training.scene.array;
  a.log = [&run](const std::string& s) { run.note(s); };
  const auto rows = eval::ablate_conv_depth(a, run.seed, run.threads);
  const fs::path csv = run.dir / "ablation.csv";
  const std::string text = eval::ablation_csv(rows);
  std::ofstream(csv) << text;
  run.artifacts.push_back(csv);
  run.out << text;
}

void cmd_dynamic(Run& run) {
  const auto& cfg = run.cfg;
  const auto model = nn::load_model(cfg.path("model"));
  eval::DynamicConfig d;
  d.room = room_from(cfg, cfg.str("room"));
  d.position = cfg.count("position", 0);
  if (d.position >= d.room.array_centers.size())
    throw ConfigError("position", "room '" + d.room.name + "' has no position " + std::to_string(d.position));
  d.array = array_from(cfg);
  d.distance = cfg.number("distance", 2.0);
  d.grid_resolution_deg = model_resolution(model);
  d.stft = stft_from(cfg);
  d.sample_rate = cfg.number("sample_rate", 16000.0);
  d.noise.type = noise_from("noise", cfg.str("noise", "white"));
  d.noise.snr_db = cfg.number("snr", 30.0);
  if (cfg.has("white_floor")) d.noise.white_floor_snr_db = cfg.number("white_floor");
  d.source = source_from(cfg);
  d.baseline.music_window = cfg.count("music.window", 10);
  if (cfg.has("schedule")) {
    d.schedule.clear();
    for (const auto& g : cfg.groups("schedule")) {
      if (g.size() < 3) throw ConfigError("schedule", "each segment is 'start end doa...'");
      d.schedule.push_back({g[0], g[1], std::vector<double>(g.begin() + 2, g.end())});
    }
  }
  try {
    eval::validate_schedule(d.schedule, dataset::DoaGrid(d.grid_resolution_deg));
  } catch (const std::exception& e) {
    throw ConfigError("schedule", e.what());
  }
  check_model_fits(model, d.array.num_mics, d.stft);

  const auto bank = bank_for(run, eval::scene_for(d));
  const auto result = eval::dynamic_scenario(d, model, bank, derive_seed(run.seed, {kDynKey}));
  const fs::path trace = run.dir / "trace.csv", svg = run.dir / "trace.svg", seg = run.dir / "segments.csv";
  eval::write_trace_csv(trace, result);
  eval::write_trace_svg(svg, result);
  std::ofstream s(seg);
  s << "segment,frames,true_doas,proposed_top,hits\n";
  for (std::size_t i = 0; i < result.segments.size(); ++i) {
    const auto& p = result.segments[i];
    s << i << "," << p.frames << "," << join(p.true_doas, ";") << "," << join(p.proposed_top, ";") << ","
      << p.proposed_hits << "\n";
    run.out << "segment " << i << ": true " << join(p.true_doas) << " deg, proposed top " << join(p.proposed_top)
            << " deg (" << p.proposed_hits << " hits)\n";
  }
  s.close();
  run.artifacts.insert(run.artifacts.end(), {trace, svg, seg});
}

}  // namespace

std::vector<std::string> allowed_keys(const std::string& command) {
  std::vector<std::string> k = kShared;
  auto add = [&k](const std::vector<std::string>& more) { k.insert(k.end(), more.begin(), more.end()); };
  if (command == "simulate") {
    add({"rooms", "distances", "doas", "grid_resolution"});
  } else if (command == "synth") {
    add(kSynth), add(kStft), add({"rooms", "rirs", "output"});
  } else if (command == "train") {
    add(kTrain), add({"dataset", "output"});
  } else if (command == "infer") {
    add(kStft);
    add({"model", "input", "sources", "block_frames", "rirs", "mixture.room", "mixture.position",
         "mixture.distance", "mixture.doas", "mixture.snr", "mixture.noise", "mixture.length"});
  } else if (command == "eval") {
    add(kTest), add(kStft), add({"model", "methods", "rooms", "rirs"});
  } else if (command == "ablate") {
    add(kSynth), add(kTest), add(kStft), add(kTrain);
    add({"train_rooms", "test_rooms", "ablation.array_sizes", "ablation.parent_mics", "ablation.parent_spacing"});
  } else if (command == "dynamic") {
    add(kStft);
    add({"model", "room", "position", "distance", "schedule", "noise", "snr", "white_floor", "rirs", "source.kind",
         "source.wavs", "music.window"});
  } else {
    throw ConfigError("command", "unknown command '" + command + "'");
  }
  return k;
}

void run_command(const std::string& command, const Config& config, std::ostream& out, std::ostream& log) {
  config.check_keys(allowed_keys(command));
  Run run{config, out, log, 0, 1, {}, {}};
  run.seed = config.u64("seed");
  run.threads = config.count("threads", default_threads());
  if (run.threads == 0) throw ConfigError("threads", "threads must be positive");
  run.dir = config.str("out", "out");
  for (const char* key : {"dataset", "model", "input", "rirs", "source.wavs"}) require_file(config, key);
  if (command == "train" && !config.has("dataset")) throw ConfigError("dataset", "train needs 'dataset'");
  if ((command == "infer" || command == "dynamic") && !config.has("model"))
    throw ConfigError("model", command + " needs 'model'");
  fs::create_directories(run.dir);

  if (command == "simulate") cmd_simulate(run);
  else if (command == "synth") cmd_synth(run);
  else if (command == "train") cmd_train(run);
  else if (command == "infer") cmd_infer(run);
  else if (command == "eval") cmd_eval(run);
  else if (command == "ablate") cmd_ablate(run);
  else if (command == "dynamic") cmd_dynamic(run);
  write_manifest(run.dir, command, run.seed, config, run.artifacts);
}

}  // namespace doa::cli
