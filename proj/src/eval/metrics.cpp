#include "doa/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace doa::eval {

std::vector<double> assigned_errors(std::span<const double> truth, std::span<const double> estimate) {
  if (truth.size() != estimate.size())
    throw std::invalid_argument("mae: " + std::to_string(truth.size()) + " true DOAs but " +
                                std::to_string(estimate.size()) + " estimates");
  if (truth.empty()) throw std::invalid_argument("mae: no DOAs");
  if (truth.size() > 8) throw std::invalid_argument("mae: brute-force pairing supports at most 8 sources");
  std::vector<std::size_t> perm(truth.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::size_t> best = perm;
  double best_cost = INFINITY;
  do {
    double cost = 0.0;
    for (std::size_t l = 0; l < perm.size(); ++l) cost += std::abs(truth[l] - estimate[perm[l]]);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::vector<double> errors(truth.size());
  for (std::size_t l = 0; l < truth.size(); ++l) errors[l] = std::abs(truth[l] - estimate[best[l]]);
  return errors;
}

double mae(std::span<const double> truth, std::span<const double> estimate) {
  const auto e = assigned_errors(truth, estimate);
  return std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
}

double mae_identity(std::span<const double> truth, std::span<const double> estimate) {
  if (truth.size() != estimate.size() || truth.empty()) throw std::invalid_argument("mae: count mismatch");
  double s = 0.0;
  for (std::size_t l = 0; l < truth.size(); ++l) s += std::abs(truth[l] - estimate[l]);
  return s / static_cast<double>(truth.size());
}

double accuracy(std::span<const TrialResult> trials, double threshold_deg) {
  if (trials.empty()) throw std::invalid_argument("accuracy: no trials");
  std::size_t good = 0;
  for (const auto& t : trials) {
    const auto e = assigned_errors(t.true_doas, t.estimated_doas);
    if (std::all_of(e.begin(), e.end(), [&](double v) { return v <= threshold_deg; })) ++good;
  }
  return 100.0 * static_cast<double>(good) / static_cast<double>(trials.size());
}

std::vector<MetricsRow> aggregate(std::span<const TrialResult> trials, double threshold_deg) {
  using Key = std::tuple<std::string, std::string, double, double, std::string, double>;
  std::map<Key, std::size_t> slot;
  std::vector<std::vector<TrialResult>> groups;
  for (const auto& t : trials) {
    const Key k{t.method, t.room, t.rt60_s, t.snr_db, t.noise_type, t.distance_m};
    auto [it, fresh] = slot.emplace(k, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(t);
  }
  std::vector<MetricsRow> rows;
  for (const auto& g : groups) {
    MetricsRow r;
    const auto& t0 = g.front();
    r.method = t0.method;
    r.room = t0.room;
    r.rt60_s = t0.rt60_s;
    r.snr_db = t0.snr_db;
    r.noise_type = t0.noise_type;
    r.distance_m = t0.distance_m;
    for (const auto& t : g) r.mae_deg += mae(t.true_doas, t.estimated_doas);
    r.mae_deg /= static_cast<double>(g.size());
    r.acc_pct = accuracy(g, threshold_deg);
    r.trials = g.size();
    rows.push_back(r);
  }
  return rows;
}

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::string out = std::string(kMetricsCsvHeader) + "\n";
  char line[512];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%s,%.3f,%.1f,%s,%.3f,%.4f,%.2f,%zu\n", r.method.c_str(), r.room.c_str(),
                  r.rt60_s, r.snr_db, r.noise_type.c_str(), r.distance_m, r.mae_deg, r.acc_pct, r.trials);
    out += line;
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << metrics_csv(rows);
}

}  // namespace doa::eval
