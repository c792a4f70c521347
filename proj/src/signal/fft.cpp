#include "doa/signal/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace doa::signal {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// FFTW's planner is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const int len = static_cast<int>(n);
  std::vector<double> real(n);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(len, real.data(), cplx, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inverse = fftw_plan_dft_c2r_1d(len, cplx, real.data(),
                                   FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
  if (p.forward == nullptr || p.inverse == nullptr) throw std::runtime_error("FFTW planning failed");
  return cache.emplace(n, p).first->second;
}

}  // namespace

std::size_t next_pow2(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void rfft(std::span<const double> in, std::span<std::complex<double>> out) {
  if (in.empty() || out.size() != in.size() / 2 + 1)
    throw std::invalid_argument("rfft: output must hold n/2 + 1 bins");
  const auto& p = plans_for(in.size());
  // r2c with an out-of-place plan leaves the input untouched.
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void irfft(std::span<const std::complex<double>> in, std::span<double> out) {
  if (out.empty() || in.size() != out.size() / 2 + 1)
    throw std::invalid_argument("irfft: input must hold n/2 + 1 bins");
  const auto& p = plans_for(out.size());
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
  const double scale = 1.0 / static_cast<double>(out.size());
  for (double& x : out) x *= scale;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("convolve: empty input");
  const std::size_t out_len = a.size() + b.size() - 1;
  const std::size_t n = next_pow2(out_len);
  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  std::vector<std::complex<double>> fa(n / 2 + 1), fb(n / 2 + 1);
  rfft(pa, fa);
  rfft(pb, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  irfft(fa, pa);
  pa.resize(out_len);
  return pa;
}

}  // namespace doa::signal
