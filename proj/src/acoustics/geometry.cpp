#include "doa/acoustics/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace doa::acoustics {

void RoomConfig::validate() const {
  if (!(dimensions.x > 0.0 && dimensions.y > 0.0 && dimensions.z > 0.0))
    throw std::invalid_argument("room dimensions must be positive");
  if (!(rt60 >= 0.0)) throw std::invalid_argument("rt60 must be non-negative");
  if (!(speed_of_sound > 0.0)) throw std::invalid_argument("speed of sound must be positive");
}

bool RoomConfig::contains(Vec3 p) const noexcept {
  return p.x > 0.0 && p.y > 0.0 && p.z > 0.0 && p.x < dimensions.x && p.y < dimensions.y &&
         p.z < dimensions.z;
}

ArrayGeometry::ArrayGeometry(std::vector<Vec3> positions) : positions_(std::move(positions)) {
  if (positions_.size() < 2) throw std::invalid_argument("array needs at least two microphones");
  const Vec3 d = positions_.back() - positions_.front();
  // Arrays whose end points coincide (e.g. a duplicated mic) default to x.
  axis_ = d.norm() > 0.0 ? d.normalized() : Vec3{1.0, 0.0, 0.0};
}

Vec3 ArrayGeometry::center() const noexcept {
  Vec3 c;
  for (const auto& p : positions_) c = c + p;
  return (1.0 / static_cast<double>(positions_.size())) * c;
}

double ArrayGeometry::aperture() const noexcept {
  double a = 0.0;
  for (std::size_t i = 0; i < positions_.size(); ++i)
    for (std::size_t j = i + 1; j < positions_.size(); ++j)
      a = std::max(a, distance(positions_[i], positions_[j]));
  return a;
}

Vec3 ArrayGeometry::direction(double doa_deg) const noexcept {
  const double t = doa_deg * std::numbers::pi / 180.0;
  const Vec3 up{0.0, 0.0, 1.0};
  const Vec3 side = up.cross(axis_);
  return std::cos(t) * axis_ + std::sin(t) * side;
}

std::vector<double> ArrayGeometry::far_field_delays(double doa_deg, double speed_of_sound) const {
  const Vec3 u = direction(doa_deg);
  const Vec3 c = center();
  std::vector<double> tau(positions_.size());
  for (std::size_t m = 0; m < positions_.size(); ++m) tau[m] = -(positions_[m] - c).dot(u) / speed_of_sound;
  return tau;
}

ArrayGeometry ArrayGeometry::middle(std::size_t count) const {
  if (count < 2 || count > positions_.size() || (positions_.size() - count) % 2 != 0)
    throw std::invalid_argument("middle sub-array size must be >= 2, <= M, and of equal parity");
  const std::size_t first = (positions_.size() - count) / 2;
  return ArrayGeometry({positions_.begin() + static_cast<std::ptrdiff_t>(first),
                        positions_.begin() + static_cast<std::ptrdiff_t>(first + count)});
}

ArrayGeometry ula(Vec3 center, std::size_t num_mics, double spacing, Vec3 axis) {
  if (num_mics < 2) throw std::invalid_argument("ULA needs at least two microphones");
  if (!(spacing > 0.0)) throw std::invalid_argument("ULA spacing must be positive");
  const Vec3 u = axis.normalized();
  std::vector<Vec3> pos(num_mics);
  const double mid = 0.5 * static_cast<double>(num_mics - 1);
  for (std::size_t m = 0; m < num_mics; ++m) pos[m] = center + ((static_cast<double>(m) - mid) * spacing) * u;
  return ArrayGeometry(std::move(pos));
}

}  // namespace doa::acoustics
