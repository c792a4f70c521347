#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace doa::eval {

/// Absolute errors |theta_l - theta_hat_pi(l)| under the pairing pi that
/// minimises their sum (brute force over all L! pairings; L <= 8).
/// Ties between pairings go to the lexicographically first permutation.
std::vector<double> assigned_errors(std::span<const double> truth, std::span<const double> estimate);

/// Mean absolute error under the optimal pairing. Throws on count mismatch.
double mae(std::span<const double> truth, std::span<const double> estimate);

/// Mean absolute error pairing the l-th truth with the l-th estimate.
double mae_identity(std::span<const double> truth, std::span<const double> estimate);

struct TrialResult {
  std::string method;
  std::string room;
  double rt60_s = 0.0;
  double snr_db = 0.0;
  std::string noise_type;
  double distance_m = 0.0;
  std::vector<double> true_doas;
  std::vector<double> estimated_doas;
};

/// Percentage of trials whose every assigned error is <= threshold_deg.
/// Throws on an empty list.
double accuracy(std::span<const TrialResult> trials, double threshold_deg = 5.0);

struct MetricsRow {
  std::string method;
  std::string room;
  double rt60_s = 0.0;
  double snr_db = 0.0;
  std::string noise_type;
  double distance_m = 0.0;
  double mae_deg = 0.0;
  double acc_pct = 0.0;
  std::size_t trials = 0;
};

/// Groups trials by (method, room, rt60, snr, noise, distance) in order of
/// first appearance and computes MAE and accuracy per group.
std::vector<MetricsRow> aggregate(std::span<const TrialResult> trials, double threshold_deg = 5.0);

inline constexpr const char* kMetricsCsvHeader =
    "method,room,rt60_s,snr_db,noise_type,distance_m,mae_deg,acc_pct,trials";

std::string metrics_csv(std::span<const MetricsRow> rows);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows);

}  // namespace doa::eval
