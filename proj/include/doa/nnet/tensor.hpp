#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace doa::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

/// Dense array with a shape; data.size() is the product of the dims.
template <class T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims)
      : shape(std::move(dims)),
        data(std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>()), T(0)) {}

  std::size_t size() const noexcept { return data.size(); }
  void zero() noexcept { std::fill(data.begin(), data.end(), T(0)); }

  /// Column-major rows x cols view (2-D shapes, or 1-D as a column).
  Eigen::Map<Mat<T>> matrix() noexcept { return {data.data(), rows(), cols()}; }
  Eigen::Map<const Mat<T>> matrix() const noexcept { return {data.data(), rows(), cols()}; }

 private:
  Eigen::Index rows() const noexcept { return static_cast<Eigen::Index>(shape.empty() ? 0 : shape[0]); }
  Eigen::Index cols() const noexcept { return static_cast<Eigen::Index>(shape.size() < 2 ? 1 : shape[1]); }
};

}  // namespace doa::nn
