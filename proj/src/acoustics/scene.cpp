#include "doa/acoustics/scene.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "doa/parallel.hpp"

namespace doa::acoustics {
namespace {

using nlohmann::json;

json to_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

struct Tuple {
  std::size_t room, position, distance, doa;
};

std::vector<Tuple> enumerate(const ScenePlan& plan) {
  std::vector<Tuple> out;
  for (std::size_t r = 0; r < plan.rooms.size(); ++r)
    for (std::size_t p = 0; p < plan.rooms[r].array_centers.size(); ++p)
      for (std::size_t d = 0; d < plan.distances.size(); ++d)
        for (std::size_t a = 0; a < plan.doas_deg.size(); ++a) out.push_back({r, p, d, a});
  return out;
}

}  // namespace

std::size_t ScenePlan::tuple_count() const noexcept {
  std::size_t positions = 0;
  for (const auto& r : rooms) positions += r.array_centers.size();
  return positions * distances.size() * doas_deg.size();
}

std::string RirKey::id() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "_p%zu_d%.3f_a%.2f", position, distance, doa_deg);
  return room + buf;
}

void RirBank::add(RirEntry entry) {
  auto id = entry.key.id();
  entries_.insert_or_assign(std::move(id), std::move(entry));
}

const RirEntry* RirBank::find(const RirKey& key) const {
  auto it = entries_.find(key.id());
  return it == entries_.end() ? nullptr : &it->second;
}

const RirEntry& RirBank::at(const RirKey& key) const {
  if (const auto* e = find(key)) return *e;
  throw std::out_of_range("missing RIR " + key.id());
}

void RirBank::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  json index = json::array();
  for (const auto& [id, e] : entries_) {
    write_rir(dir / (id + ".drir"), e.rir);
    json meta = {{"room", e.key.room},
                 {"position", e.key.position},
                 {"distance_m", e.key.distance},
                 {"doa_deg", e.key.doa_deg},
                 {"room_dimensions_m", to_json(e.room.dimensions)},
                 {"rt60_s", e.room.rt60},
                 {"speed_of_sound", e.room.speed_of_sound},
                 {"array_center_m", to_json(e.array_center)},
                 {"source_m", to_json(e.source)},
                 {"file", id + ".drir"}};
    std::ofstream(dir / (id + ".json")) << meta.dump(2) << '\n';
    index.push_back(meta);
  }
  std::ofstream out(dir / "index.json");
  out << index.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "index.json").string());
}

RirBank RirBank::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index.json");
  if (!in) throw std::runtime_error("RIR bank index not found: " + (dir / "index.json").string());
  const json index = json::parse(in);
  RirBank bank;
  for (const auto& meta : index) {
    RirEntry e;
    e.key.room = meta.at("room").get<std::string>();
    e.key.position = meta.at("position").get<std::size_t>();
    e.key.distance = meta.at("distance_m").get<double>();
    e.key.doa_deg = meta.at("doa_deg").get<double>();
    e.room.dimensions = vec_from_json(meta.at("room_dimensions_m"));
    e.room.rt60 = meta.at("rt60_s").get<double>();
    e.room.speed_of_sound = meta.value("speed_of_sound", 343.0);
    e.array_center = vec_from_json(meta.at("array_center_m"));
    e.source = vec_from_json(meta.at("source_m"));
    const auto file = meta.at("file").get<std::string>();
    e.rir = file.ends_with(".wav") ? read_rir_wav(dir / file) : read_rir(dir / file);
    bank.add(std::move(e));
  }
  return bank;
}

std::vector<std::string> validate_scene(const ScenePlan& plan) {
  std::vector<std::string> problems;
  for (const auto& r : plan.rooms) {
    try {
      r.room.validate();
    } catch (const std::exception& ex) {
      problems.push_back(r.name + ": " + ex.what());
      continue;
    }
    for (std::size_t p = 0; p < r.array_centers.size(); ++p) {
      const auto array = plan.array.at(r.array_centers[p]);
      for (const auto& mic : array.positions())
        if (!r.room.contains(mic)) {
          problems.push_back(r.name + " position " + std::to_string(p) +
                             ": microphone outside room");
          break;
        }
      for (double d : plan.distances)
        for (double doa : plan.doas_deg) {
          const Vec3 src = SourcePlacement{doa, d}.position(array);
          if (!r.room.contains(src)) problems.push_back(RirKey{r.name, p, d, doa}.id() + ": source outside room");
        }
    }
  }
  return problems;
}

RirBank simulate_bank(const ScenePlan& plan, std::size_t threads) {
  if (auto problems = validate_scene(plan); !problems.empty()) {
    std::string msg = "invalid scene geometry:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw std::invalid_argument(msg);
  }
  const auto tuples = enumerate(plan);
  std::vector<RirEntry> results(tuples.size());
  parallel_for(tuples.size(), threads, [&](std::size_t i) {
    const auto& t = tuples[i];
    const auto& setup = plan.rooms[t.room];
    const Vec3 center = setup.array_centers[t.position];
    const auto array = plan.array.at(center);
    const double dist = plan.distances[t.distance];
    const double doa = plan.doas_deg[t.doa];
    RirEntry& e = results[i];
    e.key = {setup.name, t.position, dist, doa};
    e.room = setup.room;
    e.array_center = center;
    e.source = SourcePlacement{doa, dist}.position(array);
    e.rir = image_method_rir(setup.room, e.source, array, plan.sample_rate);
  });
  RirBank bank;
  for (auto& e : results) bank.add(std::move(e));
  return bank;
}

}  // namespace doa::acoustics
