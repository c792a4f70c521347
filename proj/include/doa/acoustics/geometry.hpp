#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace doa::acoustics {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) noexcept { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double dot(Vec3 o) const noexcept { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(Vec3 o) const noexcept {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const noexcept { return std::sqrt(dot(*this)); }
  Vec3 normalized() const noexcept { return (1.0 / norm()) * *this; }
};

inline double distance(Vec3 a, Vec3 b) noexcept { return (a - b).norm(); }

/// Shoebox room with one corner at the origin.
struct RoomConfig {
  Vec3 dimensions;
  double rt60 = 0.0;  ///< seconds; 0 means anechoic
  double speed_of_sound = 343.0;

  void validate() const;
  /// Strictly inside the walls.
  bool contains(Vec3 p) const noexcept;
};

class ArrayGeometry {
 public:
  /// Horizontal array; `positions` must hold at least two microphones that
  /// do not all coincide.
  explicit ArrayGeometry(std::vector<Vec3> positions);

  std::size_t size() const noexcept { return positions_.size(); }
  const std::vector<Vec3>& positions() const noexcept { return positions_; }
  const Vec3& operator[](std::size_t m) const noexcept { return positions_[m]; }

  Vec3 center() const noexcept;
  /// Largest distance between any two microphones.
  double aperture() const noexcept;
  /// Unit vector from the first towards the last microphone.
  Vec3 axis() const noexcept { return axis_; }

  /// Unit vector pointing towards a source at `doa_deg` in the horizontal
  /// plane; 0 deg is along the axis, 90 deg is broadside.
  Vec3 direction(double doa_deg) const noexcept;

  /// Far-field arrival delay of each microphone relative to the array
  /// centre for a plane wave from `doa_deg` (negative means earlier).
  std::vector<double> far_field_delays(double doa_deg, double speed_of_sound) const;

  /// The `count` middle microphones (count <= size(), same parity rules as
  /// a centred sub-array: (size() - count) must be even).
  ArrayGeometry middle(std::size_t count) const;

 private:
  std::vector<Vec3> positions_;
  Vec3 axis_;
};

/// Uniform linear array of M microphones, symmetric about `center`.
ArrayGeometry ula(Vec3 center, std::size_t num_mics, double spacing, Vec3 axis = {1.0, 0.0, 0.0});

/// A source at a DOA and range from the array centre, in the array plane.
struct SourcePlacement {
  double doa_deg = 90.0;
  double distance = 1.0;

  Vec3 position(const ArrayGeometry& array) const noexcept {
    return array.center() + distance * array.direction(doa_deg);
  }
};

}  // namespace doa::acoustics
