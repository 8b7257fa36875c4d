#pragma once

// Thin wrapper over FFTW's real transforms. Plans are created once per size
// under a global lock and executed with the new-array interface, which FFTW
// documents as thread-safe.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <vector>

namespace roguewave::fft {

namespace detail {

struct PlanPair {
  fftw_plan forward = nullptr;   // r2c
  fftw_plan backward = nullptr;  // c2r
};

inline std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

inline const PlanPair& plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(plan_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  double* real = fftw_alloc_real(n);
  fftw_complex* cplx = fftw_alloc_complex(n / 2 + 1);
  PlanPair p;
  const int ni = static_cast<int>(n);
  p.forward = fftw_plan_dft_r2c_1d(ni, real, cplx, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.backward = fftw_plan_dft_c2r_1d(ni, cplx, real, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(real);
  fftw_free(cplx);
  return cache.emplace(n, p).first->second;
}

}  // namespace detail

/// Unnormalized forward transform: out[k] = sum_m in[m] e^{-2 pi i k m / n}, k = 0..n/2.
inline void forward(std::span<const double> in, std::span<std::complex<double>> out) {
  const std::size_t n = in.size();
  const auto& p = detail::plans_for(n);
  // r2c does not modify its input, the const_cast only satisfies the C API.
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

/// Unnormalized inverse transform: out[m] = sum_k in[k] e^{2 pi i k m / n} over the
/// Hermitian extension. Destroys `in`.
inline void backward(std::span<std::complex<double>> in, std::span<double> out) {
  const std::size_t n = out.size();
  const auto& p = detail::plans_for(n);
  fftw_execute_dft_c2r(p.backward, reinterpret_cast<fftw_complex*>(in.data()), out.data());
}

}  // namespace roguewave::fft
