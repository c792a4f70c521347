#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "doa/acoustics/geometry.hpp"
#include "doa/dataset/grid.hpp"
#include "doa/estimator/estimator.hpp"
#include "doa/signal/signal.hpp"

namespace doa::baselines {

/// One value per grid DOA, all finite and >= 0.
using PseudoSpectrum = std::vector<double>;

/// Analysis band [low_hz, high_hz); bins at DC and Nyquist are always skipped.
struct FrequencyBand {
  double low_hz = 100.0;
  double high_hz = 8000.0;
};

struct HermitianEigen {
  Eigen::VectorXd values;     ///< ascending
  Eigen::MatrixXcd vectors;   ///< column i pairs with values(i)
};

/// Eigendecomposition of a Hermitian matrix. Throws when the matrix is not
/// square or deviates from Hermitian by more than `tolerance` (relative to
/// its largest entry).
HermitianEigen hermitian_eig(const Eigen::MatrixXcd& matrix, double tolerance = 1e-10);

struct BaselineOptions {
  FrequencyBand band;
  double speed_of_sound = 343.0;
  /// MUSIC: frames averaged into R(k), the current one and its predecessors.
  std::size_t music_window = 10;
  /// MUSIC: diagonal loading as a fraction of trace(R)/M.
  double diagonal_loading = 1e-9;
};

/// Sample spatial correlation of bin k over frames
/// [max(0, frame + 1 - window), frame].
Eigen::MatrixXcd spatial_correlation(const signal::Spectrogram& spec, std::size_t frame, std::size_t k,
                                     std::size_t window);

/// Steered response power with phase transform for one frame.
/// Throws for fewer than two microphones or a geometry/spectrogram mismatch.
PseudoSpectrum srp_phat_frame(const signal::Spectrogram& spec, std::size_t frame, const dataset::DoaGrid& grid,
                              const acoustics::ArrayGeometry& array, const BaselineOptions& options = {});

/// Broadband MUSIC for one frame: the subband pseudo-spectra
/// 1 / (a^H En En^H a) averaged over the band. Throws "noise subspace
/// empty" when L >= M.
PseudoSpectrum music_frame(const signal::Spectrogram& spec, std::size_t frame, const dataset::DoaGrid& grid,
                           const acoustics::ArrayGeometry& array, std::size_t L, const BaselineOptions& options = {});

enum class Method { SrpPhat, Music };

const char* method_name(Method m) noexcept;

/// Per-frame pseudo-spectra for frames [begin, begin + count).
std::vector<PseudoSpectrum> baseline_frames(Method method, const signal::Spectrogram& spec, std::size_t begin,
                                            std::size_t count, std::size_t L, const dataset::DoaGrid& grid,
                                            const acoustics::ArrayGeometry& array, const BaselineOptions& options = {});

/// Pseudo-spectra averaged over the block, then the estimator's top-L rule.
estimator::BlockEstimate baseline_block(Method method, const signal::Spectrogram& spec, std::size_t begin,
                                        std::size_t count, std::size_t L, const dataset::DoaGrid& grid,
                                        const acoustics::ArrayGeometry& array, const BaselineOptions& options = {});

}  // namespace doa::baselines
