#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "doa/acoustics/geometry.hpp"
#include "doa/acoustics/rir.hpp"

namespace doa::acoustics {

/// A room together with the array centres used inside it.
struct RoomSetup {
  std::string name;
  RoomConfig room;
  std::vector<Vec3> array_centers;
};

struct ArraySpec {
  std::size_t num_mics = 4;
  double spacing = 0.08;
  ArrayGeometry at(Vec3 center) const { return ula(center, num_mics, spacing); }
};

/// Everything needed to simulate a bank of RIRs: rooms, array positions,
/// source distances and the DOAs to cover.
struct ScenePlan {
  std::vector<RoomSetup> rooms;
  ArraySpec array;
  std::vector<double> distances{1.0};
  std::vector<double> doas_deg;
  double sample_rate = 16000.0;

  /// Number of (room, position, distance, doa) tuples.
  std::size_t tuple_count() const noexcept;
};

struct RirKey {
  std::string room;
  std::size_t position = 0;
  double distance = 1.0;
  double doa_deg = 0.0;

  /// Canonical text form, also used for file names.
  std::string id() const;
  friend bool operator<(const RirKey& a, const RirKey& b) { return a.id() < b.id(); }
};

struct RirEntry {
  RirKey key;
  RoomConfig room;
  Vec3 array_center;
  Vec3 source;
  Rir rir;
};

/// Indexed collection of simulated (or measured) RIRs.
class RirBank {
 public:
  void add(RirEntry entry);
  const RirEntry* find(const RirKey& key) const;
  const RirEntry& at(const RirKey& key) const;
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<std::string, RirEntry>& entries() const noexcept { return entries_; }

  /// Writes one .drir file plus .json sidecar per entry and an index.json.
  void save(const std::filesystem::path& dir) const;
  static RirBank load(const std::filesystem::path& dir);

 private:
  std::map<std::string, RirEntry> entries_;
};

/// Lists every tuple whose source would fall outside its room, as
/// human-readable strings; empty when the plan is valid.
std::vector<std::string> validate_scene(const ScenePlan& plan);

/// Simulates every (room, position, distance, doa) tuple of the plan.
RirBank simulate_bank(const ScenePlan& plan, std::size_t threads = 1);

}  // namespace doa::acoustics
