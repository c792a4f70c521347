#include "doa/dataset/grid.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace doa::dataset {

DoaGrid::DoaGrid(double resolution_deg) : resolution_(resolution_deg) {
  if (!(resolution_deg > 0.0)) throw std::invalid_argument("DOA resolution must be positive");
  const double steps = 180.0 / resolution_deg;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9) throw std::invalid_argument("DOA resolution must divide 180");
  const auto count = static_cast<std::size_t>(rounded) + 1;
  if (count > 64) throw std::invalid_argument("DOA grid exceeds 64 classes");
  classes_.resize(count);
  for (std::size_t i = 0; i < count; ++i) classes_[i] = static_cast<double>(i) * resolution_deg;
}

bool DoaGrid::contains(double doa_deg) const noexcept {
  const double idx = doa_deg / resolution_;
  const double r = std::round(idx);
  return std::abs(idx - r) <= 1e-6 && r >= 0.0 && r < static_cast<double>(classes_.size());
}

std::size_t DoaGrid::index_of(double doa_deg) const {
  if (!contains(doa_deg)) throw std::invalid_argument("DOA " + std::to_string(doa_deg) + " deg is not on the grid");
  return static_cast<std::size_t>(std::round(doa_deg / resolution_));
}

std::size_t LabelVector::count() const noexcept { return static_cast<std::size_t>(std::popcount(bits)); }

std::vector<float> LabelVector::as_floats() const {
  std::vector<float> out(num_classes);
  for (std::size_t i = 0; i < num_classes; ++i) out[i] = test(i) ? 1.0f : 0.0f;
  return out;
}

LabelVector make_labels(std::span<const double> doas_deg, const DoaGrid& grid) {
  LabelVector label{0, grid.size()};
  for (double d : doas_deg) {
    const auto i = grid.index_of(d);
    const std::uint64_t bit = std::uint64_t{1} << i;
    if (label.bits & bit) throw std::invalid_argument("duplicate DOA " + std::to_string(d));
    label.bits |= bit;
  }
  return label;
}

}  // namespace doa::dataset
