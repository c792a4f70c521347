#include "doa/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "doa/acoustics/fields.hpp"

namespace doa::baselines {
namespace {

using cd = std::complex<double>;

void check_inputs(const signal::Spectrogram& spec, std::size_t frame, const acoustics::ArrayGeometry& array) {
  if (array.size() < 2 || spec.num_channels() < 2) throw std::invalid_argument("baselines need at least two microphones");
  if (array.size() != spec.num_channels())
    throw std::invalid_argument("array has " + std::to_string(array.size()) + " microphones, spectrogram has " +
                                std::to_string(spec.num_channels()));
  if (frame >= spec.num_frames()) throw std::out_of_range("frame index outside the spectrogram");
}

// Steering vectors a(theta_i, f_k) for the in-band bins.
struct SteeringTable {
  std::vector<std::size_t> bins;
  std::size_t mics = 0;
  std::vector<cd> a;  // [i][b][m]

  SteeringTable(const signal::Spectrogram& spec, const dataset::DoaGrid& grid, const acoustics::ArrayGeometry& array,
                const BaselineOptions& opt)
      : mics(array.size()) {
    for (std::size_t k = 1; k + 1 < spec.num_bins(); ++k) {
      const double f = spec.bin_frequency(k);
      if (f >= opt.band.low_hz && f < opt.band.high_hz && f < 0.5 * spec.sample_rate()) bins.push_back(k);
    }
    if (bins.empty()) throw std::invalid_argument("analysis band contains no frequency bins");
    a.reserve(grid.size() * bins.size() * mics);
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (std::size_t k : bins) {
        const auto v = acoustics::steering_vector(array, grid[i], spec.bin_frequency(k), opt.speed_of_sound);
        a.insert(a.end(), v.begin(), v.end());
      }
  }
  const cd* at(std::size_t i, std::size_t b) const noexcept { return a.data() + (i * bins.size() + b) * mics; }
};

PseudoSpectrum srp_with(const SteeringTable& st, const signal::Spectrogram& spec, std::size_t frame,
                        std::size_t classes) {
  const std::size_t M = st.mics;
  const std::size_t B = st.bins.size();
  // PHAT-weighted cross spectra, zeroed where a bin pair has no energy.
  std::vector<cd> g(B * M * M, cd{});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t p = 0; p < M; ++p)
      for (std::size_t q = p + 1; q < M; ++q) {
        const cd c = spec.at(p, frame, st.bins[b]) * std::conj(spec.at(q, frame, st.bins[b]));
        const double mag = std::abs(c);
        if (mag > 0.0) g[(b * M + p) * M + q] = c / mag;
      }
  PseudoSpectrum out(classes, 0.0);
  for (std::size_t i = 0; i < classes; ++i) {
    double sum = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      const cd* a = st.at(i, b);
      for (std::size_t p = 0; p < M; ++p)
        for (std::size_t q = p + 1; q < M; ++q) sum += (g[(b * M + p) * M + q] * std::conj(a[p]) * a[q]).real();
    }
    out[i] = std::max(0.0, sum);
  }
  return out;
}

PseudoSpectrum music_with(const SteeringTable& st, const signal::Spectrogram& spec, std::size_t frame,
                          std::size_t classes, std::size_t L, const BaselineOptions& opt) {
  const auto M = static_cast<Eigen::Index>(st.mics);
  const auto noise_dim = M - static_cast<Eigen::Index>(L);
  PseudoSpectrum out(classes, 0.0);
  Eigen::VectorXcd a(M);
  for (std::size_t b = 0; b < st.bins.size(); ++b) {
    Eigen::MatrixXcd R = spatial_correlation(spec, frame, st.bins[b], opt.music_window);
    const double load = opt.diagonal_loading * R.trace().real() / static_cast<double>(M);
    R.diagonal().array() += load;
    const HermitianEigen eig = hermitian_eig(R, 1e-8);
    const Eigen::MatrixXcd En = eig.vectors.leftCols(noise_dim);
    for (std::size_t i = 0; i < classes; ++i) {
      a = Eigen::Map<const Eigen::VectorXcd>(st.at(i, b), M);
      const double den = (En.adjoint() * a).squaredNorm();
      out[i] += 1.0 / std::max(den, 1e-300);
    }
  }
  for (double& v : out) v /= static_cast<double>(st.bins.size());
  return out;
}

}  // namespace

HermitianEigen hermitian_eig(const Eigen::MatrixXcd& matrix, double tolerance) {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) throw std::invalid_argument("hermitian_eig: matrix must be square");
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  const double asym = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
  if (!(asym <= tolerance * scale)) throw std::invalid_argument("hermitian_eig: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(matrix);
  if (solver.info() != Eigen::Success) throw std::runtime_error("hermitian_eig: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::MatrixXcd spatial_correlation(const signal::Spectrogram& spec, std::size_t frame, std::size_t k,
                                     std::size_t window) {
  if (window == 0) throw std::invalid_argument("correlation window must be at least one frame");
  if (frame >= spec.num_frames() || k >= spec.num_bins()) throw std::out_of_range("spatial_correlation: index out of range");
  const auto M = static_cast<Eigen::Index>(spec.num_channels());
  const std::size_t first = frame + 1 >= window ? frame + 1 - window : 0;
  Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(M, M);
  Eigen::VectorXcd y(M);
  for (std::size_t n = first; n <= frame; ++n) {
    for (Eigen::Index m = 0; m < M; ++m) y(m) = spec.at(static_cast<std::size_t>(m), n, k);
    R.noalias() += y * y.adjoint();
  }
  R /= static_cast<double>(frame + 1 - first);
  // Exact symmetry for the Hermitian check downstream.
  return 0.5 * (R + R.adjoint());
}

PseudoSpectrum srp_phat_frame(const signal::Spectrogram& spec, std::size_t frame, const dataset::DoaGrid& grid,
                              const acoustics::ArrayGeometry& array, const BaselineOptions& options) {
  check_inputs(spec, frame, array);
  return srp_with(SteeringTable(spec, grid, array, options), spec, frame, grid.size());
}

PseudoSpectrum music_frame(const signal::Spectrogram& spec, std::size_t frame, const dataset::DoaGrid& grid,
                           const acoustics::ArrayGeometry& array, std::size_t L, const BaselineOptions& options) {
  check_inputs(spec, frame, array);
  if (L >= array.size()) throw std::invalid_argument("noise subspace empty: L must be below the microphone count");
  return music_with(SteeringTable(spec, grid, array, options), spec, frame, grid.size(), L, options);
}

const char* method_name(Method m) noexcept {
  return m == Method::SrpPhat ? "srp_phat" : "music";
}

std::vector<PseudoSpectrum> baseline_frames(Method method, const signal::Spectrogram& spec, std::size_t begin,
                                            std::size_t count, std::size_t L, const dataset::DoaGrid& grid,
                                            const acoustics::ArrayGeometry& array, const BaselineOptions& options) {
  if (count == 0) throw std::invalid_argument("empty block");
  check_inputs(spec, begin + count - 1, array);
  if (method == Method::Music && L >= array.size())
    throw std::invalid_argument("noise subspace empty: L must be below the microphone count");
  const SteeringTable st(spec, grid, array, options);
  std::vector<PseudoSpectrum> out;
  out.reserve(count);
  for (std::size_t n = begin; n < begin + count; ++n)
    out.push_back(method == Method::SrpPhat ? srp_with(st, spec, n, grid.size())
                                            : music_with(st, spec, n, grid.size(), L, options));
  return out;
}

estimator::BlockEstimate baseline_block(Method method, const signal::Spectrogram& spec, std::size_t begin,
                                        std::size_t count, std::size_t L, const dataset::DoaGrid& grid,
                                        const acoustics::ArrayGeometry& array, const BaselineOptions& options) {
  const auto frames = baseline_frames(method, spec, begin, count, L, grid, array, options);
  return estimator::select_top_l(estimator::block_average(frames), L, grid);
}

}  // namespace doa::baselines
