#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace doa::dataset {

/// Discretised DOA range [0, 180] deg at a uniform resolution.
class DoaGrid {
 public:
  /// Throws unless `resolution_deg` divides 180 and the grid fits a 64-bit label.
  explicit DoaGrid(double resolution_deg);

  double resolution() const noexcept { return resolution_; }
  std::size_t size() const noexcept { return classes_.size(); }
  const std::vector<double>& classes() const noexcept { return classes_; }
  double operator[](std::size_t i) const noexcept { return classes_[i]; }

  /// Class index of an on-grid DOA; throws for off-grid or out-of-range angles.
  std::size_t index_of(double doa_deg) const;
  bool contains(double doa_deg) const noexcept;

 private:
  double resolution_;
  std::vector<double> classes_;
};

inline DoaGrid make_doa_grid(double resolution_deg) { return DoaGrid(resolution_deg); }

/// Multi-hot class vector; bit i set means class i is active.
struct LabelVector {
  std::uint64_t bits = 0;
  std::size_t num_classes = 0;

  bool test(std::size_t i) const noexcept { return (bits >> i) & 1u; }
  std::size_t count() const noexcept;
  std::vector<float> as_floats() const;
};

/// Sets one bit per DOA. Throws for off-grid DOAs and for duplicates.
LabelVector make_labels(std::span<const double> doas_deg, const DoaGrid& grid);

}  // namespace doa::dataset
